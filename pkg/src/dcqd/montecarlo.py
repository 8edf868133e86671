"""Seeded Monte-Carlo trials of the end-to-end estimation pipelines.

Every trial draws from its own generator, seeded by (master seed, pipeline
key, trial index), and trials are processed in fixed-size blocks. Results are
therefore identical whatever the number of workers.
"""
from __future__ import annotations

import math
import zlib
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channels import BitFlipModel, NoiseSpec, bitflip_stack, cx_theta_channel
from .codes import get_code
from .estimation import (THETA_SUPPORT, EstimationError, crlb_theta, direct_bitflip,
                         ml_theta_batch)
from .inference import wald_statistic
from .tomography import (DIAGONAL, SyndromeCounts, plan_by_name, projector_plan, run_distribution)

BLOCK_SIZE = 500


def trial_rng(seed: int, key: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, key, trial])))


def stable_key(text: str) -> int:
    return zlib.crc32(text.encode())


@lru_cache(maxsize=256)
def theta_distribution(theta: float, code: str, plan: str, noise: NoiseSpec) -> np.ndarray:
    c = get_code(code)
    return run_distribution(c, [cx_theta_channel(theta)], plan_by_name(plan), noise).probs


@lru_cache(maxsize=256)
def bitflip_distributions(model: BitFlipModel, code: str, noise: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    c = get_code(code)
    stack = [bitflip_stack(model)]
    return (run_distribution(c, stack, DIAGONAL, noise).probs,
            run_distribution(c, stack, projector_plan(8), noise).probs)


def _multinomial(rng: np.random.Generator, n: int, probs: np.ndarray) -> np.ndarray:
    p = np.clip(probs.ravel(), 0, None)
    return rng.multinomial(n, p / p.sum()).reshape(probs.shape)


@dataclass(frozen=True)
class ThetaPipeline:
    """CX(theta) data -> ML estimate -> Wald statistic against ``null_theta``."""

    theta: float
    n_shots: int
    code: str = "402"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    plan: str = "rotated"
    null_theta: float = math.pi
    variance_at: str = "estimate"

    @property
    def key(self) -> int:
        return stable_key(f"theta|{self.theta!r}|{self.n_shots}|{self.code}|{self.noise.kind}|"
                          f"{self.noise.strength!r}|{self.plan}")

    def with_shots(self, n: int) -> "ThetaPipeline":
        return ThetaPipeline(self.theta, n, self.code, self.noise, self.plan, self.null_theta, self.variance_at)

    def run_block(self, seed: int, start: int, stop: int) -> dict[str, np.ndarray]:
        probs = theta_distribution(self.theta, str(self.code), self.plan, self.noise)
        m = stop - start
        x = np.zeros((m, 4))
        kept = np.zeros(m)
        for t in range(m):
            counts = _multinomial(trial_rng(seed, self.key, start + t), self.n_shots, probs)[0]
            x[t] = counts[list(THETA_SUPPORT)]
            kept[t] = counts[:16].sum()
        theta_hat = ml_theta_batch(x, self.plan)
        n_used = x.sum(axis=1)
        at = theta_hat if self.variance_at == "estimate" else np.full(m, self.null_theta)
        var = np.array([crlb_theta(a, int(k), self.plan) for a, k in zip(at, n_used)])
        return {
            "estimate": theta_hat,
            "W": wald_statistic(theta_hat, self.null_theta, var),
            "discarded": 1 - kept / self.n_shots,
        }


@dataclass(frozen=True)
class BitFlipPipeline:
    """CX plus bit flips -> direct p12 estimate -> Wald statistic against p12 = 0."""

    model: BitFlipModel
    n_shots: int
    code: str = "402"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    diag_fraction: float = 0.5
    variance_at: str = "estimate"
    all_pairs: bool = True

    @property
    def key(self) -> int:
        m = self.model
        return stable_key(f"bitflip|{m.p1!r}|{m.p2!r}|{m.p12!r}|{self.n_shots}|{self.code}|"
                          f"{self.noise.kind}|{self.noise.strength!r}|{self.diag_fraction!r}")

    def with_shots(self, n: int) -> "BitFlipPipeline":
        return BitFlipPipeline(self.model, n, self.code, self.noise, self.diag_fraction, self.variance_at,
                               self.all_pairs)

    def run_block(self, seed: int, start: int, stop: int) -> dict[str, np.ndarray]:
        diag_p, proj_p = bitflip_distributions(self.model, str(self.code), self.noise)
        n_diag = int(round(self.n_shots * self.diag_fraction))
        n_proj = self.n_shots - n_diag
        m = stop - start
        est = np.zeros(m)
        var = np.zeros(m)
        discarded = np.zeros(m)
        for t in range(m):
            rng = trial_rng(seed, self.key, start + t)
            d = _multinomial(rng, n_diag, diag_p)
            p = _multinomial(rng, n_proj, proj_p)
            discarded[t] = 1 - (d[:, :16].sum() + p[:, :16].sum()) / self.n_shots
            try:
                e = direct_bitflip(SyndromeCounts(d[:, :16]),
                                   SyndromeCounts(p[:, :16], ("plus", "minus"), 0, 8),
                                   self.variance_at, self.all_pairs)
                est[t], var[t] = e.p12_hat, e.crlb_variance_p12
            except EstimationError:
                est[t], var[t] = np.nan, np.nan
        return {"estimate": est, "W": wald_statistic(est, 0.0, var), "discarded": discarded}


def _run_block(args):
    pipeline, seed, start, stop = args
    return pipeline.run_block(seed, start, stop)


def run_trials(pipeline, m: int, seed: int, workers: int = 1, block_size: int = BLOCK_SIZE,
               executor: Executor | None = None) -> dict[str, np.ndarray]:
    """Run trials 0..m-1 and return per-trial arrays in trial order.

    ``executor`` lets a caller share one process pool across many calls;
    otherwise a pool is created when ``workers > 1``.
    """
    if m < 1:
        raise ValueError("need at least one trial")
    blocks = [(pipeline, seed, s, min(s + block_size, m)) for s in range(0, m, block_size)]
    if executor is not None and len(blocks) > 1:
        parts = list(executor.map(_run_block, blocks))
    elif workers <= 1 or len(blocks) == 1:
        parts = [_run_block(b) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, blocks))
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
