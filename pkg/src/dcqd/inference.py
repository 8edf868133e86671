"""Wald-test decisions, empirical threshold calibration and ROC curves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAMBDA_STEP = 0.05
DEGENERATE_VARIANCE = 1e-15


@dataclass(frozen=True)
class WaldResult:
    statistic: float
    estimate: float
    null_value: float
    variance: float
    threshold: float
    decision: str  # "null" or "alternative"


def wald_statistic(estimate, null_value, variance) -> np.ndarray:
    """(estimate - null)^2 / variance, elementwise.

    An estimate sitting exactly on the null value with a vanishing variance
    (a truncated estimate) gives W = 0.
    """
    est = np.asarray(estimate, dtype=float)
    var = np.asarray(variance, dtype=float)
    if np.any(var < 0):
        raise ValueError("variance must be nonnegative")
    diff2 = (est - null_value) ** 2
    degenerate = (diff2 == 0) & (var <= DEGENERATE_VARIANCE)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(degenerate, 0.0, diff2 / np.where(degenerate, 1.0, var))
    return w


def wald(estimate: float, null_value: float, variance: float, threshold: float = 4.0) -> WaldResult:
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    w = float(wald_statistic(estimate, null_value, variance))
    return WaldResult(w, estimate, null_value, variance, threshold, "alternative" if w > threshold else "null")


def tail_probability(w: np.ndarray, lambdas) -> np.ndarray:
    """Fraction of statistics strictly above each threshold (NaN statistics count as above)."""
    w = np.asarray(w, dtype=float)
    w = np.where(np.isnan(w), np.inf, w)
    s = np.sort(w)
    lam = np.asarray(lambdas, dtype=float)
    return (len(s) - np.searchsorted(s, lam, side="right")) / len(s)


def lambda_grid(lambda_max: float, step: float = LAMBDA_STEP) -> np.ndarray:
    k = int(np.floor(lambda_max / step + 1e-9))
    return np.round(np.arange(k + 1) * step, 10)


@dataclass(frozen=True)
class ThresholdCalibration:
    lambda_star: float
    target_pfa: float
    achieved_pfa: float
    n_samples: int
    n_shots: int
    null_model: str
    lambdas: np.ndarray
    tail: np.ndarray


def calibrate_from_statistics(w: np.ndarray, target_pfa: float, n_shots: int = 0, null_model: str = "",
                              step: float = LAMBDA_STEP, lambda_max: float = 0.0) -> ThresholdCalibration:
    """Smallest grid threshold whose empirical tail is at most ``target_pfa``.

    The grid runs from 0 in steps of ``step`` past the largest finite statistic
    (and at least to ``lambda_max``), so a finite answer exists unless some
    statistics are infinite or NaN.
    """
    finite = np.asarray(w, dtype=float)
    finite = finite[np.isfinite(finite)]
    top = float(finite.max()) if finite.size else 0.0
    lambdas = lambda_grid(max(top + step, lambda_max), step)
    tail = tail_probability(w, lambdas)
    ok = np.nonzero(tail <= target_pfa)[0]
    if ok.size == 0:
        raise ValueError("no finite threshold reaches the target false-alarm rate")
    i = int(ok[0])
    return ThresholdCalibration(float(lambdas[i]), target_pfa, float(tail[i]), len(w), n_shots,
                                null_model, lambdas, tail)


def calibrate_lambda(null_pipeline, n: int, m: int, target_pfa: float, seed: int, workers: int = 1,
                     step: float = LAMBDA_STEP, executor=None) -> ThresholdCalibration:
    """Simulate ``m`` null trials of ``n`` shots and pick the threshold."""
    from .montecarlo import run_trials

    pipe = null_pipeline.with_shots(n)
    w = run_trials(pipe, m, seed, workers, executor=executor)["W"]
    return calibrate_from_statistics(w, target_pfa, n, repr(pipe), step)


def detection_probability(pipeline, lambda_star: float, n: int, m: int, seed: int, workers: int = 1,
                          executor=None) -> float:
    """Fraction of trials with W > lambda_star (the false-alarm rate for a null pipeline)."""
    from .montecarlo import run_trials

    w = run_trials(pipeline.with_shots(n), m, seed, workers, executor=executor)["W"]
    return float(tail_probability(w, [lambda_star])[0])


@dataclass(frozen=True)
class RocPoint:
    offset: float
    n_shots: int
    threshold: float
    p_d: float
    p_fa: float


def roc_from_statistics(w_null: np.ndarray, w_alt: np.ndarray, lambdas, offset: float = 0.0,
                        n_shots: int = 0) -> list[RocPoint]:
    p_fa = tail_probability(w_null, lambdas)
    p_d = tail_probability(w_alt, lambdas)
    return [RocPoint(offset, n_shots, float(l), float(d), float(f)) for l, d, f in zip(lambdas, p_d, p_fa)]


def roc_curve(null_pipeline, alternatives: dict[float, object], n_grid, lambdas, m: int, seed: int,
              workers: int = 1, executor=None) -> list[RocPoint]:
    """(p_FA, p_D) pairs over ``lambdas`` for every alternative and shot count."""
    from .montecarlo import run_trials

    out = []
    for n in n_grid:
        w0 = run_trials(null_pipeline.with_shots(n), m, seed, workers, executor=executor)["W"]
        for offset, alt in alternatives.items():
            w1 = run_trials(alt.with_shots(n), m, seed, workers, executor=executor)["W"]
            out.extend(roc_from_statistics(w0, w1, lambdas, offset, n))
    return out


def overall_error(p_fa: float, p_d: float, prior_null: float) -> float:
    """Pr(null) p_FA + Pr(alternative) (1 - p_D)."""
    if not 0 <= prior_null <= 1:
        raise ValueError("prior must be a probability")
    return prior_null * p_fa + (1 - prior_null) * (1 - p_d)
