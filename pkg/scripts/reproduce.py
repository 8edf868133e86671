"""Run every experiment config in configs/ through the CLI and write results/.

Usage: python scripts/reproduce.py [--workers K] [--format csv|json] [--only NAME ...]
"""
import argparse
import sys
import time
from pathlib import Path

from dcqd.harness.cli import main as dcqd
from dcqd.harness.config import load_config

ROOT = Path(__file__).resolve().parent.parent


def run(cfg_path: Path, out_dir: Path, workers: int, fmt: str) -> int:
    cfg = load_config(cfg_path)
    out = out_dir / f"{cfg_path.stem}.{fmt}"
    t0 = time.perf_counter()
    rc = dcqd([cfg.experiment, "--config", str(cfg_path), "--out", str(out), "--format", fmt,
               "--workers", str(workers)])
    print(f"{cfg_path.name:28s} rc={rc}  {time.perf_counter() - t0:7.1f}s  -> {out.relative_to(ROOT)}")
    return rc


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    ap.add_argument("--out-dir", default=str(ROOT / "results"))
    args = ap.parse_args()
    configs = sorted((ROOT / "configs").glob("*.cfg"))
    if args.only:
        configs = [c for c in configs if c.stem in args.only]
    failures = sum(run(c, Path(args.out_dir), args.workers, args.format) != 0 for c in configs)
    sys.exit(1 if failures else 0)
