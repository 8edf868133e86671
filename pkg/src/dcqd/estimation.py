"""Parameter estimation from syndrome data.

Two models are covered:

* CX(theta): maximum likelihood over the syndromes {0, 1, 8, 9}, with
  Fisher information and Cramer-Rao bounds for the diagonal and rotated plans.
* CX plus bit flips: closed-form inversion of the frequencies for
  (p1, p2, p12) using the diagonal plan and the Z1 projector plan, with the
  3x3 Fisher matrix of that combined experiment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import BitFlipModel, coefficient_jacobian, coefficients
from .tomography import MeasurementPlan, SyndromeCounts, extract_offdiagonal

THETA_SUPPORT = (0, 1, 8, 9)
UP_SUPPORT = (0, 1, 8, 9)
DOWN_SUPPORT = (4, 5, 12, 13)
GRID_POINTS = 1024
# per-shot information below this counts as zero (CRLB reported as infinite)
INFO_FLOOR = 1e-14
REFINE_TOL = 1e-8
TWO_PI = 2 * math.pi
_GOLD = (math.sqrt(5) - 1) / 2


class EstimationError(ValueError):
    pass


class SingularModelError(EstimationError):
    pass


# ---------------------------------------------------------------------------
# CX(theta)
# ---------------------------------------------------------------------------

def _plan_name(plan: MeasurementPlan | str) -> str:
    name = plan if isinstance(plan, str) else plan.name
    if name not in ("diagonal", "rotated"):
        raise EstimationError(f"theta model needs the diagonal or rotated plan, got {name!r}")
    return name


def theta_probs(theta, plan) -> np.ndarray:
    """Noiseless probabilities of syndromes (0, 1, 8, 9), last axis."""
    c, s = np.cos(theta), np.sin(theta)
    if _plan_name(plan) == "diagonal":
        p0, p1, p8, p9 = (3 * c + 5) / 8, (1 - c) / 8, (1 - c) / 8, (1 - c) / 8
    else:
        p0, p1, p8, p9 = (2 * s - c + 3) / 8, (c + 1) / 8, (c + 1) / 8, (-2 * s - c + 3) / 8
    return np.stack(np.broadcast_arrays(p0, p1, p8, p9), axis=-1)


def theta_dprobs(theta, plan) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    if _plan_name(plan) == "diagonal":
        d = (-3 * s / 8, s / 8, s / 8, s / 8)
    else:
        d = ((2 * c + s) / 8, -s / 8, -s / 8, (-2 * c + s) / 8)
    return np.stack(np.broadcast_arrays(*d), axis=-1)


def fisher_theta(theta, plan) -> np.ndarray:
    """Per-shot Fisher information sum_i p_i'^2 / p_i.

    The terms whose probability vanishes together with its derivative are
    written in their cancelled form, so the value is continuous there.
    """
    c = np.cos(theta)
    p = theta_probs(theta, plan)
    dp = theta_dprobs(theta, plan)
    if _plan_name(plan) == "diagonal":
        # p1 = p8 = p9 = (1-c)/8, p' = s/8: each term is (1+c)/8
        return dp[..., 0] ** 2 / p[..., 0] + 3 * (1 + c) / 8
    # p1 = p8 = (1+c)/8, p' = -s/8: each term is (1-c)/8
    return dp[..., 0] ** 2 / p[..., 0] + dp[..., 3] ** 2 / p[..., 3] + 2 * (1 - c) / 8


def crlb_theta(theta, n: int, plan) -> np.ndarray | float:
    """1 / (n I(theta)); infinite where the information vanishes."""
    if n < 1:
        raise EstimationError("n must be >= 1")
    info = np.asarray(fisher_theta(theta, plan), dtype=float)
    ok = info > INFO_FLOOR
    out = np.where(ok, 1.0 / (n * np.where(ok, info, 1.0)), np.inf)
    return float(out) if out.ndim == 0 else out


def crlb_diagonal_closed(theta, n: int):
    return (2 / (3 * (np.cos(theta) + 1)) + 1) / n


def crlb_rotated_closed(theta, n: int):
    c = np.cos(theta)
    return (1 - 2 * (c - 3) / (-10 * c + 5 * np.cos(2 * theta) + 9)) / n


@dataclass(frozen=True)
class ThetaEstimate:
    theta_hat: float
    crlb_variance: float
    log_likelihood: float
    discarded_fraction: float
    n_used: int
    degenerate: bool = False


def modeled_counts(counts: SyndromeCounts | np.ndarray) -> np.ndarray:
    arr = counts.counts if isinstance(counts, SyndromeCounts) else np.asarray(counts)
    if arr.ndim == 2:
        if arr.shape[0] != 1:
            raise EstimationError("theta likelihood needs single-branch counts")
        arr = arr[0]
    if arr.shape[-1] != 16:
        raise EstimationError("expected 16 syndrome counts (filter flagged codes first)")
    return arr[..., list(THETA_SUPPORT)].astype(float)


def _loglik(x: np.ndarray, theta, plan) -> np.ndarray:
    """Conditional multinomial log-likelihood; x is (..., 4), theta has the shape of x[..., 0]."""
    p = theta_probs(theta, plan)
    p = p / p.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(x > 0, x * np.log(p), 0.0)
    return terms.sum(axis=-1)


def loglikelihood_theta(counts, theta: float, plan) -> float:
    x = modeled_counts(counts)
    if x.sum() == 0:
        raise EstimationError("no counts on the modeled syndromes {0, 1, 8, 9}")
    return float(_loglik(x, theta, plan))


def ml_theta_batch(x: np.ndarray, plan) -> np.ndarray:
    """Maximum-likelihood theta for each row of modeled counts ``x`` (shape (M, 4)).

    1024-point grid on [0, 2pi), then golden-section refinement to 1e-8 inside
    the grid cell on either side of the best point.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(x.sum(axis=1) == 0):
        raise EstimationError("no counts on the modeled syndromes {0, 1, 8, 9}")
    step = TWO_PI / GRID_POINTS
    grid = np.arange(GRID_POINTS) * step
    p = theta_probs(grid, plan)
    with np.errstate(divide="ignore"):
        logp = np.log(p / p.sum(axis=-1, keepdims=True))
    # x log p with 0 * log 0 := 0, per grid point
    ll = np.zeros((x.shape[0], GRID_POINTS))
    with np.errstate(invalid="ignore"):
        for i in range(4):
            col = x[:, i:i + 1]
            ll += np.where(col > 0, col * logp[None, :, i], 0.0)
    best = grid[np.argmax(ll, axis=1)]

    lo, hi = best - step, best + step
    a = hi - _GOLD * (hi - lo)
    b = lo + _GOLD * (hi - lo)
    fa = _loglik(x, a, plan)
    fb = _loglik(x, b, plan)
    n_iter = math.ceil(math.log(REFINE_TOL / (2 * step)) / math.log(_GOLD))
    for _ in range(n_iter):
        left = fa >= fb  # maximum lies in [lo, b]
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        new_a = hi - _GOLD * (hi - lo)
        new_b = lo + _GOLD * (hi - lo)
        a_next = np.where(left, new_a, b)
        b_next = np.where(left, a, new_b)
        f_new = _loglik(x, np.where(left, new_a, new_b), plan)
        fa, fb = np.where(left, f_new, fb), np.where(left, fa, f_new)
        a, b = a_next, b_next
    return np.mod((lo + hi) / 2, TWO_PI)


def ml_theta(counts, plan) -> ThetaEstimate:
    arr = counts.counts if isinstance(counts, SyndromeCounts) else np.asarray(counts)
    x = modeled_counts(counts)
    n = int(x.sum())
    theta = float(ml_theta_batch(x[None, :], plan)[0])
    total = int(arr.sum())
    return ThetaEstimate(
        theta_hat=theta,
        crlb_variance=crlb_theta(theta, max(n, 1), plan),
        log_likelihood=float(_loglik(x, theta, plan)),
        discarded_fraction=1 - n / total if total else 0.0,
        n_used=n,
        degenerate=int(np.count_nonzero(x)) <= 1,
    )


# ---------------------------------------------------------------------------
# CX followed by bit flips
# ---------------------------------------------------------------------------

def _layout(entries) -> np.ndarray:
    """(outcomes, 4) matrix from {syndrome: weight vector over (alpha, beta, gamma, delta)}."""
    m = np.zeros((16, 4))
    for s, w in entries.items():
        m[s] = w
    return m / 4


_A, _B, _G, _D = np.eye(4)
# Diagonal plan: (alpha+beta)/4 on the up block, (gamma+delta)/4 on the down block.
DIAGONAL_MAP = _layout({**{s: _A + _B for s in UP_SUPPORT}, **{s: _G + _D for s in DOWN_SUPPORT}})
# Z1 projector plan, joint with the +1 / -1 outcome.
P8_MAP = np.vstack([
    _layout({0: _A, 8: _A, 1: _B, 9: _B, 4: _D, 12: _D, 5: _G, 13: _G}),
    _layout({0: _B, 8: _B, 1: _A, 9: _A, 4: _G, 12: _G, 5: _D, 13: _D}),
])


def bitflip_probs(model: BitFlipModel) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless diagonal-plan (16,) and P8-plan (2, 16) syndrome probabilities."""
    c = np.array(coefficients(model))
    return DIAGONAL_MAP @ c, (P8_MAP @ c).reshape(2, 16)


def _fisher_block(lin: np.ndarray, c: np.ndarray, jac: np.ndarray) -> np.ndarray:
    p = lin @ c
    dp = lin @ jac
    info = np.zeros((3, 3))
    for pi, g in zip(p, dp):
        if pi > 0:
            info += np.outer(g, g) / pi
        elif np.any(g != 0):
            return np.full((3, 3), np.inf)
    return info


@dataclass(frozen=True)
class FisherInfo:
    value: np.ndarray | float
    evaluated_at: tuple[float, ...]


def fisher_bitflip(model: BitFlipModel, diag_fraction: float = 0.5) -> FisherInfo:
    """Per-shot 3x3 Fisher matrix when a fraction of shots uses the diagonal plan
    and the rest the Z1 projector plan."""
    c = np.array(coefficients(model))
    jac = coefficient_jacobian(model)
    info = diag_fraction * _fisher_block(DIAGONAL_MAP, c, jac) + (1 - diag_fraction) * _fisher_block(P8_MAP, c, jac)
    return FisherInfo(info, (model.p1, model.p2, model.p12))


def crlb_p12(model: BitFlipModel, n: int, diag_fraction: float = 0.5) -> float:
    if n < 1:
        raise EstimationError("n must be >= 1")
    info = fisher_bitflip(model, diag_fraction).value
    if not np.all(np.isfinite(info)):
        return 0.0
    cond = np.linalg.cond(info)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularModelError(f"Fisher matrix is singular (condition number {cond:.3g})")
    return float(np.linalg.inv(info)[2, 2] / n)


@dataclass(frozen=True)
class BitFlipEstimate:
    p1_hat: float
    p2_hat: float
    p12_hat: float
    truncated: bool
    raw: tuple[float, float, float]
    coefficients: tuple[float, float, float, float]
    n_shots: int
    diag_fraction: float
    crlb_variance_p12: float = float("nan")


def reconstruct_coefficients(diag: SyndromeCounts, proj: SyndromeCounts,
                             all_pairs: bool = True) -> tuple[float, float, float, float]:
    """(alpha, beta, gamma, delta) from diagonal counts and Z1-projector counts.

    The diagonal plan gives alpha+beta and gamma+delta (conditioned on the
    modeled syndromes). The projector gives Re chi_{0,8} = -Re chi_{1,9} =
    (alpha-beta)/4 and, with the column operator Z1 X1 = iY1,
    Re chi_{4,12} = -Re chi_{5,13} = (delta-gamma)/4. By default both copies
    are averaged; ``all_pairs=False`` uses (0,8) and (4,12) only.
    """
    if proj.projector != 8:
        raise EstimationError("bit-flip estimation uses the Z1 projector (P8) data")
    d = np.asarray(diag.counts).reshape(-1)
    if d.shape[0] != 16:
        raise EstimationError("expected 16 diagonal syndrome counts (filter flagged codes first)")
    up, down = d[list(UP_SUPPORT)].sum(), d[list(DOWN_SUPPORT)].sum()
    if up + down == 0:
        raise EstimationError("no diagonal counts on the modeled syndromes")
    a = up / (up + down)
    b = 1 - a
    x_ab = extract_offdiagonal(proj, (0, 8))
    x_dg = extract_offdiagonal(proj, (4, 12))
    if all_pairs:
        x_ab = (x_ab - extract_offdiagonal(proj, (1, 9))) / 2
        x_dg = (x_dg - extract_offdiagonal(proj, (5, 13))) / 2
    return (a + 4 * x_ab) / 2, (a - 4 * x_ab) / 2, (b - 4 * x_dg) / 2, (b + 4 * x_dg) / 2


def _qrs(alpha, beta, gamma):
    return 1 - 2 * alpha - 2 * beta, 1 - 2 * beta - 2 * gamma, 1 - 2 * alpha - 2 * gamma


def invert_coefficients(alpha: float, beta: float, gamma: float, delta: float = None) -> tuple[float, float, float]:
    """Raw (p1, p2, p12) from the coefficients; positive root, no truncation.

    Returns p12 = nan when q*r*s < 0.
    """
    q, r, s = _qrs(alpha, beta, gamma)
    for name, v in (("q", q), ("r", r), ("s", s)):
        if abs(v) < 1e-12:
            raise SingularModelError(f"{name} vanishes; the bit-flip model is not identifiable here")
    prod = q * r * s
    if prod < 0:
        return float("nan"), float("nan"), float("nan")
    root = math.sqrt(prod)
    return 0.5 * (1 + root / s), 0.5 * (1 + root / q), 0.5 * (1 - root / r)


def null_from_coefficients(alpha, beta, gamma, delta) -> tuple[float, float]:
    """(p1, p2) of the uncorrelated model: p1 = gamma + delta, p2 = beta + delta."""
    return gamma + delta, beta + delta


def direct_bitflip(diag: SyndromeCounts, proj: SyndromeCounts, variance_at: str = "estimate",
                   all_pairs: bool = True) -> BitFlipEstimate:
    """Closed-form (p1, p2, p12) estimate, truncated into [0, 0.5].

    When q*r*s < 0 no real solution exists; p12 is set to 0 and p1, p2 fall
    back to the uncorrelated-model values.
    """
    coef = reconstruct_coefficients(diag, proj, all_pairs)
    raw = invert_coefficients(*coef)
    if math.isnan(raw[2]):
        p1, p2 = null_from_coefficients(*coef)
        raw_used = (p1, p2, -math.inf)
    else:
        raw_used = raw
    clipped = tuple(min(max(v, 0.0), 0.5) for v in raw_used)
    truncated = any(c != r for c, r in zip(clipped, raw_used))
    n = diag.total + proj.total
    frac = diag.total / n
    est = BitFlipEstimate(clipped[0], clipped[1], clipped[2], truncated, raw, coef, n, frac)
    return _with_variance(est, variance_at)


def null_bitflip(diag: SyndromeCounts, proj: SyndromeCounts) -> tuple[float, float]:
    return null_from_coefficients(*reconstruct_coefficients(diag, proj))


VARIANCE_FLOOR = 1e-6


def _with_variance(est: BitFlipEstimate, variance_at: str) -> BitFlipEstimate:
    """Attach the CRLB of p12, at the estimate or at the uncorrelated-model point."""
    if variance_at == "estimate":
        point = (est.p1_hat, est.p2_hat, est.p12_hat)
    elif variance_at == "null":
        p1, p2 = null_from_coefficients(*est.coefficients)
        point = (p1, p2, 0.0)
    else:
        raise EstimationError(f"variance_at must be 'estimate' or 'null', got {variance_at!r}")
    # keep the evaluation point strictly inside the box so the bound stays finite
    lo, hi = VARIANCE_FLOOR, 0.5 - VARIANCE_FLOOR
    model = BitFlipModel(*(min(max(v, lo), hi) for v in point))
    try:
        var = crlb_p12(model, est.n_shots, est.diag_fraction)
    except SingularModelError:
        var = float("inf")
    return BitFlipEstimate(**{**est.__dict__, "crlb_variance_p12": var})
