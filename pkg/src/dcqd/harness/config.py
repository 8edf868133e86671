"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored. Lists are comma separated. Angles
may carry a ``pi`` suffix (``1.1pi``, ``pi``). Unknown keys are errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    """Bad configuration; ``line`` and ``key`` point at the offending entry when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.message, self.key, self.line = message, key, line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


EXPERIMENTS = ("variance-scan", "calibrate", "roc", "noise-contours", "bias-scan", "decision-scan", "verify")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "verify"
    model: str = "theta"                     # theta or bitflip
    codes: tuple[str, ...] = ("402",)
    theta: tuple[float, ...] = (math.pi,)
    null_theta: float = math.pi
    delta_theta: tuple[float, ...] = (0.0, 0.005 * math.pi, 0.01 * math.pi)
    p1: float = 0.01
    p2: float = 0.02
    p12: tuple[float, ...] = (0.0,)
    noise_kinds: tuple[str, ...] = ("none",)
    noise_strengths: tuple[float, ...] = (0.0,)
    shots: tuple[int, ...] = (1000,)
    trials: int = 5000
    seed: int = 0
    plan: str = "rotated"
    variance_at: str = "estimate"
    diag_fraction: float = 0.5
    target_pfa: float = 0.02
    lambda_star: float = 4.0
    lambda_max: float = 10.0
    lambda_step: float = 0.05
    lambdas: tuple[float, ...] = ()
    prior_null: float | None = None
    workers: int = 1
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        validate(self)

    def echo(self) -> list[tuple[str, str]]:
        """Every field rendered as it would be written in a config file."""
        return [(f.name, render_value(getattr(self, f.name))) for f in fields(self)]


_LIST_INT = {"shots"}
_LIST_FLOAT = {"noise_strengths", "p12", "lambdas"}
_LIST_ANGLE = {"theta", "delta_theta"}
_LIST_STR = {"codes", "noise_kinds"}
_ANGLE = {"null_theta"}
_FLOAT = {"p1", "p2", "diag_fraction", "target_pfa", "lambda_star", "lambda_max", "lambda_step"}
_INT = {"trials", "seed", "workers"}
_OPT_FLOAT = {"prior_null"}
_OPT_STR = {"out"}
_ALIASES = {"code": "codes", "noise_kind": "noise_kinds", "noise_strength": "noise_strengths", "n": "shots",
            "n_shots": "shots", "m": "trials", "lambda": "lambda_star"}


def parse_angle(text: str) -> float:
    t = text.strip().lower().replace(" ", "")
    if t.endswith("pi"):
        head = t[:-2].rstrip("*")
        factor = 1.0 if head in ("", "+") else -1.0 if head == "-" else float(head)
        return factor * math.pi
    return float(t)


def _split(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",")]
    if any(s == "" for s in items):
        raise ValueError("empty list item")
    return items


def convert(key: str, text: str):
    """Typed value for ``key`` from its raw text."""
    text = text.strip()
    if key in _LIST_INT:
        return tuple(int(float(s)) for s in _split(text))
    if key in _LIST_FLOAT:
        return tuple(float(s) for s in _split(text)) if text else ()
    if key in _LIST_ANGLE:
        return tuple(parse_angle(s) for s in _split(text))
    if key in _LIST_STR:
        return tuple(s.lower() for s in _split(text))
    if key in _ANGLE:
        return parse_angle(text)
    if key in _FLOAT:
        return float(text)
    if key in _INT:
        return int(text)
    if key in _OPT_FLOAT:
        return None if text.lower() in ("", "none") else float(text)
    if key in _OPT_STR:
        return None if text.lower() in ("", "none", "-") else text
    return text


def canonical_key(key: str) -> str:
    k = key.strip().lower().replace("-", "_")
    k = _ALIASES.get(k, k)
    if k not in {f.name for f in fields(ExperimentConfig)}:
        raise KeyError(k)
    return k


def render_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(render_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_text(text: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, val = line.split("=", 1)
        try:
            k = canonical_key(key)
        except KeyError:
            raise ConfigError("unknown key", key=key.strip(), line=lineno) from None
        if k in values:
            raise ConfigError("duplicate key", key=k, line=lineno)
        try:
            values[k] = convert(k, val)
        except ValueError as exc:
            raise ConfigError(f"bad value {val.strip()!r} ({exc})", key=k, line=lineno) from None
        lines[k] = lineno
    for key, val in (overrides or {}).items():
        try:
            k = canonical_key(key)
            values[k] = convert(k, val)
        except KeyError:
            raise ConfigError("unknown key in override", key=key) from None
        except ValueError as exc:
            raise ConfigError(f"bad override value {val!r} ({exc})", key=key) from None
        lines.pop(k, None)
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        if exc.key in lines and exc.line is None:
            raise ConfigError(exc.message, key=exc.key, line=lines[exc.key]) from None
        raise


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_text(text, overrides)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})


def validate(cfg: ExperimentConfig) -> None:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}", key="experiment")
    if cfg.model not in ("theta", "bitflip"):
        raise ConfigError("model must be 'theta' or 'bitflip'", key="model")
    for name in ("codes", "theta", "delta_theta", "p12", "noise_kinds", "noise_strengths", "shots"):
        if len(getattr(cfg, name)) == 0:
            raise ConfigError("grid must be nonempty", key=name)
    for c in cfg.codes:
        if c not in ("402", "602"):
            raise ConfigError(f"unknown code {c!r}; expected 402 or 602", key="codes")
    for k in cfg.noise_kinds:
        if k not in ("none", "ad", "dp"):
            raise ConfigError(f"unknown noise kind {k!r}; expected none, ad or dp", key="noise_kinds")
    if any(not 0 <= s <= 1 for s in cfg.noise_strengths):
        raise ConfigError("noise strengths must lie in [0, 1]", key="noise_strengths")
    if any(n < 1 for n in cfg.shots):
        raise ConfigError("shot counts must be >= 1", key="shots")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1", key="trials")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a 64-bit nonnegative integer", key="seed")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1", key="workers")
    for name in ("p1", "p2"):
        if not 0 <= getattr(cfg, name) < 0.5:
            raise ConfigError("bit-flip probabilities must lie in [0, 0.5)", key=name)
    if any(not 0 <= p < 0.5 for p in cfg.p12):
        raise ConfigError("bit-flip probabilities must lie in [0, 0.5)", key="p12")
    if cfg.plan not in ("rotated", "diagonal"):
        raise ConfigError("plan must be 'rotated' or 'diagonal'", key="plan")
    if cfg.variance_at not in ("estimate", "null"):
        raise ConfigError("variance_at must be 'estimate' or 'null'", key="variance_at")
    if not 0 < cfg.diag_fraction < 1:
        raise ConfigError("diag_fraction must lie in (0, 1)", key="diag_fraction")
    if not 0 <= cfg.target_pfa <= 1:
        raise ConfigError("target_pfa must lie in [0, 1]", key="target_pfa")
    if cfg.lambda_step <= 0 or cfg.lambda_max <= 0 or cfg.lambda_star < 0:
        raise ConfigError("thresholds must be positive", key="lambda_step")
    if cfg.prior_null is not None and not 0 <= cfg.prior_null <= 1:
        raise ConfigError("prior_null must lie in [0, 1]", key="prior_null")
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format must be csv or json", key="format")
