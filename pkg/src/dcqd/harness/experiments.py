"""The figure-level experiments behind each CLI subcommand.

Each ``cmd_*`` takes an :class:`ExperimentConfig` and returns a
:class:`ResultTable`. Monte-Carlo work goes through :func:`run_trials`, so
tables depend only on the config and seed, never on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import Executor

import numpy as np

from ..channels import (APPENDIX_VARIANTS, DOWN_BASIS, DOWN_PHASES, UP_BASIS, BitFlipModel, NoiseSpec,
                        appendix_channel, appendix_chi, bitflip_stack, chi_bitflip_model, chi_cx_theta,
                        coefficients, cx_theta_channel)
from ..codes import get_code, verify_code
from ..estimation import (crlb_diagonal_closed, crlb_rotated_closed, crlb_theta, invert_coefficients,
                          null_from_coefficients)
from ..inference import calibrate_from_statistics, overall_error, tail_probability
from ..montecarlo import BitFlipPipeline, ThetaPipeline, run_trials, theta_distribution
from ..qmath import oracle_chi
from ..tomography import (OFFDIAG_PAIRS, OFFDIAG_PREFACTOR, projector_phase, calibrate_offdiag_prefactor, extract_offdiagonal,
                          filter_distribution, plan_by_name, projector_plan, run_distribution)
from .config import ExperimentConfig
from .output import ResultTable, standard_metadata

THETA_COLUMNS = (0, 1, 8, 9)


def _noise_grid(cfg: ExperimentConfig):
    for kind in cfg.noise_kinds:
        for s in cfg.noise_strengths:
            yield kind, s, NoiseSpec(kind, s)


def _first_noise(cfg: ExperimentConfig) -> NoiseSpec:
    return NoiseSpec(cfg.noise_kinds[0], cfg.noise_strengths[0])


def _table(cfg: ExperimentConfig, command: str, columns) -> ResultTable:
    return ResultTable(list(columns), metadata=standard_metadata(cfg, command))


def _pi_label(theta: float) -> str:
    return f"{theta / math.pi:.6g}pi"


def wrapped_error(estimate: np.ndarray, theta: float) -> np.ndarray:
    """estimate - theta mapped into [-pi, pi)."""
    return np.mod(np.asarray(estimate) - theta + math.pi, 2 * math.pi) - math.pi


def null_pipeline(cfg: ExperimentConfig, code: str | None = None, noise: NoiseSpec | None = None, n: int | None = None):
    code = code or cfg.codes[0]
    noise = noise if noise is not None else _first_noise(cfg)
    n = n or cfg.shots[0]
    if cfg.model == "bitflip":
        return BitFlipPipeline(BitFlipModel(cfg.p1, cfg.p2, 0.0), n, code, noise, cfg.diag_fraction, cfg.variance_at)
    return ThetaPipeline(cfg.null_theta, n, code, noise, cfg.plan, cfg.null_theta, cfg.variance_at)


# ---------------------------------------------------------------------------

def cmd_variance_scan(cfg: ExperimentConfig, executor: Executor | None = None) -> ResultTable:
    t = _table(cfg, "variance-scan", ["theta", "N", "empiricalVariance", "crlb", "trials"])
    for theta in cfg.theta:
        for n in cfg.shots:
            pipe = ThetaPipeline(theta, n, cfg.codes[0], _first_noise(cfg), cfg.plan, cfg.null_theta)
            est = run_trials(pipe, cfg.trials, cfg.seed, cfg.workers, executor=executor)["estimate"]
            err = wrapped_error(est, theta)
            var = float(np.var(err, ddof=1)) if cfg.trials > 1 else 0.0
            t.add(theta, n, var, crlb_theta(theta, n, cfg.plan), cfg.trials)
    return t


def cmd_calibrate(cfg: ExperimentConfig, executor: Executor | None = None) -> ResultTable:
    pipe = null_pipeline(cfg)
    w = run_trials(pipe, cfg.trials, cfg.seed, cfg.workers, executor=executor)["W"]
    cal = calibrate_from_statistics(w, cfg.target_pfa, pipe.n_shots, repr(pipe), cfg.lambda_step, cfg.lambda_max)
    t = _table(cfg, "calibrate", ["lambda", "empiricalPfa"])
    t.metadata += [("lambda_star", repr(cal.lambda_star)), ("achieved_pfa", repr(cal.achieved_pfa)),
                   ("null_model", cal.null_model)]
    for lam, tail in zip(cal.lambdas, cal.tail):
        if lam <= cfg.lambda_max + 1e-12:
            t.add(float(lam), float(tail))
    return t


def cmd_roc(cfg: ExperimentConfig, executor: Executor | None = None) -> ResultTable:
    lambdas = np.array(cfg.lambdas) if cfg.lambdas else np.array([cfg.lambda_star])
    cols = ["deltaTheta", "N", "lambda", "pFA", "pD"]
    if cfg.prior_null is not None:
        cols.append("overallError")
    t = _table(cfg, "roc", cols)
    for n in cfg.shots:
        null = null_pipeline(cfg, n=n)
        w0 = run_trials(null, cfg.trials, cfg.seed, cfg.workers, executor=executor)["W"]
        p_fa = tail_probability(w0, lambdas)
        for d in cfg.delta_theta:
            alt = ThetaPipeline(cfg.null_theta + d, n, null.code, null.noise, cfg.plan, cfg.null_theta, cfg.variance_at)
            w1 = w0 if alt == null else run_trials(alt, cfg.trials, cfg.seed, cfg.workers, executor=executor)["W"]
            p_d = tail_probability(w1, lambdas)
            for lam, fa, pd in zip(lambdas, p_fa, p_d):
                row = [d, n, float(lam), float(fa), float(pd)]
                if cfg.prior_null is not None:
                    row.append(overall_error(fa, pd, cfg.prior_null))
                t.add(*row)
    return t


def cmd_noise_contours(cfg: ExperimentConfig, executor: Executor | None = None) -> ResultTable:
    t = _table(cfg, "noise-contours", ["code", "theta", "noiseKind", "strength", "p0", "p1", "p8", "p9",
                                       "discardedFraction"])
    plan = plan_by_name(cfg.plan)
    for code in cfg.codes:
        c = get_code(code)
        for kind, s, noise in _noise_grid(cfg):
            for theta in cfg.theta:
                dist = run_distribution(c, [cx_theta_channel(theta)], plan, noise)
                kept, discarded = filter_distribution(dist)
                p = kept.probs[0]
                t.add(code, theta, kind, s, *(p[i] for i in THETA_COLUMNS), discarded)
    return t


def cmd_bias_scan(cfg: ExperimentConfig, executor: Executor | None = None) -> ResultTable:
    t = _table(cfg, "bias-scan", ["code", "theta", "noiseKind", "strength", "biasMean", "biasStderr",
                                  "meanAbsError", "discardedMean"])
    for code in cfg.codes:
        for kind, s, noise in _noise_grid(cfg):
            for theta in cfg.theta:
                pipe = ThetaPipeline(theta, cfg.shots[0], code, noise, cfg.plan, cfg.null_theta, cfg.variance_at)
                r = run_trials(pipe, cfg.trials, cfg.seed, cfg.workers, executor=executor)
                err = wrapped_error(r["estimate"], theta)
                se = float(np.std(err, ddof=1) / math.sqrt(len(err))) if len(err) > 1 else 0.0
                t.add(code, theta, kind, s, float(err.mean()), se, float(np.abs(err).mean()),
                      float(r["discarded"].mean()))
    return t


def _decision_models(cfg: ExperimentConfig, code: str, noise: NoiseSpec, n: int):
    if cfg.model == "bitflip":
        for p12 in cfg.p12:
            yield f"p12={p12:.6g}", BitFlipPipeline(BitFlipModel(cfg.p1, cfg.p2, p12), n, code, noise,
                                                     cfg.diag_fraction, cfg.variance_at)
    else:
        for theta in cfg.theta:
            yield f"theta={_pi_label(theta)}", ThetaPipeline(theta, n, code, noise, cfg.plan, cfg.null_theta,
                                                             cfg.variance_at)


def cmd_decision_scan(cfg: ExperimentConfig, executor: Executor | None = None) -> ResultTable:
    t = _table(cfg, "decision-scan", ["code", "model", "noiseKind", "strength", "prWGtLambda", "stderr",
                                      "discardedMean"])
    t.metadata.append(("lambda_star", repr(cfg.lambda_star)))
    for code in cfg.codes:
        for kind, s, noise in _noise_grid(cfg):
            for label, pipe in _decision_models(cfg, code, noise, cfg.shots[0]):
                r = run_trials(pipe, cfg.trials, cfg.seed, cfg.workers, executor=executor)
                p = float(tail_probability(r["W"], [cfg.lambda_star])[0])
                se = math.sqrt(p * (1 - p) / cfg.trials)
                t.add(code, label, kind, s, p, se, float(r["discarded"].mean()))
    return t


# ---------------------------------------------------------------------------
# Oracle checks used by ``verify`` (and by the acceptance tests).

def simulated_theta_probs(theta: float, plan: str = "rotated", code: str = "402") -> np.ndarray:
    """(p0, p1, p8, p9) from the full state-vector pipeline."""
    return theta_distribution(float(theta), code, plan, NoiseSpec())[0][list(THETA_COLUMNS)]


def numeric_fisher_theta(theta: float, plan: str = "rotated", h: float = 1e-4) -> float:
    """Per-shot Fisher information from central differences of simulated probabilities."""
    p = simulated_theta_probs(theta, plan)
    dp = (simulated_theta_probs(theta + h, plan) - simulated_theta_probs(theta - h, plan)) / (2 * h)
    keep = p > 1e-12
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def check_chi_cx_theta(thetas) -> float:
    code = get_code("402")
    return max(float(np.abs(chi_cx_theta(th).entries - oracle_chi(cx_theta_channel(th), code, UP_BASIS).entries).max())
               for th in thetas)


def check_chi_bitflip(models) -> float:
    code = get_code("402")
    dev = 0.0
    for m in models:
        up, down = chi_bitflip_model(m)
        ch = bitflip_stack(m)
        dev = max(dev, float(np.abs(up.entries - oracle_chi(ch, code, UP_BASIS).entries).max()),
                  float(np.abs(down.entries - oracle_chi(ch, code, DOWN_BASIS, DOWN_PHASES).entries).max()))
    return dev


def check_appendix() -> float:
    code = get_code("402")
    dev = 0.0
    for v in APPENDIX_VARIANTS:
        ref = appendix_chi(v)
        got = oracle_chi(appendix_channel(v), code, ref.basis, ref.phases)
        dev = max(dev, float(np.abs(ref.entries - got.entries).max()))
    return dev


def check_rotated_probs(thetas) -> float:
    dev = 0.0
    for th in thetas:
        s, c = math.sin(th), math.cos(th)
        want = np.array([2 * s - c + 3, c + 1, c + 1, -2 * s - c + 3]) / 8
        dev = max(dev, float(np.abs(simulated_theta_probs(th) - want).max()))
    return dev


def check_crlb(thetas) -> float:
    """Largest relative gap between closed-form CRLBs and the numeric Fisher information."""
    dev = 0.0
    for th in thetas:
        for plan, closed in (("rotated", crlb_rotated_closed), ("diagonal", crlb_diagonal_closed)):
            numeric = 1 / numeric_fisher_theta(th, plan)
            dev = max(dev, abs(closed(th, 1) - numeric) / numeric)
    return dev


def check_direct_identity(models) -> float:
    dev = 0.0
    for m in models:
        got = invert_coefficients(*coefficients(m))
        dev = max(dev, float(np.abs(np.array(got) - m.as_array()).max()))
        if m.p12 == 0:
            dev = max(dev, float(np.abs(np.array(null_from_coefficients(*coefficients(m))) - [m.p1, m.p2]).max()))
    return dev


def check_offdiagonal(models) -> float:
    code = get_code("402")
    dev = 0.0
    for m in models:
        ch = bitflip_stack(m)
        for j, pairs in OFFDIAG_PAIRS.items():
            dist = run_distribution(code, [ch], projector_plan(j))
            for row, col in pairs:
                chi = oracle_chi(ch, code, (row, col))
                want = (projector_phase(j, row, col) * chi[row, col]).real
                dev = max(dev, abs(extract_offdiagonal(dist, (row, col)) - want))
    return dev


def random_models(rng: np.random.Generator, k: int, hi: float = 0.3, p12_zero: bool = False) -> list[BitFlipModel]:
    out = []
    for _ in range(k):
        p1, p2, p12 = rng.uniform(0, hi, 3)
        out.append(BitFlipModel(p1, p2, 0.0 if p12_zero else p12))
    return out


def cmd_verify(cfg: ExperimentConfig, executor: Executor | None = None) -> ResultTable:
    rng = np.random.default_rng(cfg.seed)
    t = _table(cfg, "verify", ["check", "passed", "value", "tolerance"])

    def add(name, value, tol):
        t.add(name, bool(value <= tol), float(value), float(tol))

    add("chi CX(theta) vs oracle, 20 random theta", check_chi_cx_theta(rng.uniform(0, 2 * math.pi, 20)), 1e-10)
    add("chi bit-flip vs oracle, 20 random models", check_chi_bitflip(random_models(rng, 20)), 1e-10)
    add("appendix variants vs oracle", check_appendix(), 1e-10)
    for name in ("402", "602"):
        rep = verify_code(get_code(name))
        t.add(f"code [[{name[0]},0,2]] table and flags ({len(rep.checks)} checks)", rep.passed,
              float(len(rep.failures())), 0.0)
    add("rotated-plan probabilities, 100 theta", check_rotated_probs(np.linspace(0, 2 * math.pi, 100)), 1e-12)
    grid = [th for th in np.linspace(0.05, 2 * math.pi - 0.05, 40) if abs(th - math.pi) > 0.05]
    add("CRLB closed forms vs numeric Fisher (relative)", check_crlb(grid), 1e-6)
    add("rotated CRLB at pi is 4/3 per shot", abs(crlb_theta(math.pi, 1, "rotated") - 4 / 3), 1e-12)
    add("direct inversion identity, 100 models", check_direct_identity(random_models(rng, 100)), 1e-12)
    add("null expressions on p12 = 0 models", check_direct_identity(random_models(rng, 20, p12_zero=True)), 1e-12)
    kappa = calibrate_offdiag_prefactor()
    add(f"off-diagonal prefactor calibrated {kappa!r} vs pinned {OFFDIAG_PREFACTOR!r}", abs(kappa - OFFDIAG_PREFACTOR), 1e-12)
    add("off-diagonal extraction, P1/P8/P9, 10 models", check_offdiagonal(random_models(rng, 10)), 1e-10)
    return t


COMMANDS = {
    "variance-scan": cmd_variance_scan,
    "calibrate": cmd_calibrate,
    "roc": cmd_roc,
    "noise-contours": cmd_noise_contours,
    "bias-scan": cmd_bias_scan,
    "decision-scan": cmd_decision_scan,
    "verify": cmd_verify,
}


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    """Run ``cfg.experiment``, sharing one process pool when ``cfg.workers > 1``."""
    fn = COMMANDS[cfg.experiment]
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return fn(cfg, pool)
    return fn(cfg)

