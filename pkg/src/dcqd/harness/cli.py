"""``dcqd <subcommand> --config PATH [--seed S] [--out PATH] [--format csv|json] [--workers K]``.

Exit codes: 0 success, 2 usage, 3 config, 4 computation, 5 I/O,
6 a verification check failed. Errors go to stderr as
``dcqd: error[<category>]: <message>``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..estimation import EstimationError
from ..qmath import DimensionError
from .config import EXPERIMENTS, ConfigError, load_config, parse_text
from .experiments import run_experiment

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO, EXIT_VERIFY = 0, 2, 3, 4, 5, 6


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcqd", description="Selective process tomography experiments")
    ap.add_argument("subcommand", choices=EXPERIMENTS)
    ap.add_argument("--config", help="flat key = value config file (defaults used when omitted)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output file (stdout when omitted)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--workers", type=int)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any config key; repeatable")
    return ap


def _fail(category: str, message: str, code: int) -> int:
    print(f"dcqd: error[{category}]: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"experiment": args.subcommand}
    for item in args.set:
        if "=" not in item:
            return _fail("usage", f"--set expects KEY=VALUE, got {item!r}", EXIT_USAGE)
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for key in ("seed", "out", "format", "workers"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = str(val)
    try:
        cfg = load_config(args.config, overrides) if args.config else parse_text("", overrides)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)

    try:
        table = run_experiment(cfg)
    except (EstimationError, DimensionError, ValueError, ArithmeticError) as exc:
        return _fail("compute", f"{type(exc).__name__}: {exc}", EXIT_COMPUTE)

    text = table.render(cfg.format)
    try:
        if cfg.out:
            Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
            Path(cfg.out).write_text(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)

    if cfg.experiment == "verify":
        failed = [r[0] for r in table.rows if not r[1]]
        if failed:
            return _fail("verification", "; ".join(failed), EXIT_VERIFY)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
