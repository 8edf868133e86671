"""Syndrome statistics of a code state sent through a channel stack.

Pipeline: code state -> channels (in order) -> optional pre-measurement
operation on the principal qubits -> syndrome readout. Probabilities are
exact; shot data is drawn from them with an explicit generator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import NoiseSpec, local_noise
from .codes import Code, SYNDROME_TABLE
from .qmath import (ATOL, DimensionError, KrausChannel, apply_channel, embed, is_cptp, is_unitary,
                    pauli_matrix, pure_density)
from .codes import pauli_phase

# Off-diagonal pairs measured by each projector, keyed by the located error it projects on.
OFFDIAG_PAIRS = {
    1: ((0, 1), (4, 5), (8, 9), (12, 13)),
    8: ((0, 8), (1, 9), (4, 12), (5, 13)),
    9: ((0, 9), (1, 8), (4, 13), (5, 12)),
}
# Branch difference of joint frequencies is twice the coherence; pinned by
# calibrate_offdiag_prefactor() against the oracle on the ideal CX.
OFFDIAG_PREFACTOR = 0.5


@dataclass(frozen=True)
class MeasurementPlan:
    """What happens between the channel and the syndrome readout.

    kind is ``"diagonal"`` (nothing), ``"unitary"`` (a two-qubit unitary on the
    principal qubits) or ``"projector"`` (two-outcome measurement of E_j).
    """

    kind: str = "diagonal"
    unitary: np.ndarray | None = None
    projector: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("diagonal", "unitary", "projector"):
            raise ValueError(f"unknown plan kind {self.kind!r}")
        if self.kind == "unitary" and (self.unitary is None or not is_unitary(self.unitary)):
            raise ValueError("unitary plan needs a unitary matrix")
        if self.kind == "projector" and self.projector not in range(1, 16):
            raise ValueError("projector plan needs a located error index in 1..15")

    @property
    def branches(self) -> tuple[str, ...]:
        return ("plus", "minus") if self.kind == "projector" else ("single",)


DIAGONAL = MeasurementPlan("diagonal", name="diagonal")


def rotation_unitary() -> np.ndarray:
    """(1 + iZ1)/sqrt2 (x) (1 + iX2)/sqrt2."""
    u1 = (np.eye(2) + 1j * pauli_matrix("Z")) / np.sqrt(2)
    u2 = (np.eye(2) + 1j * pauli_matrix("X")) / np.sqrt(2)
    return np.kron(u1, u2)


def rotated_plan() -> MeasurementPlan:
    return MeasurementPlan("unitary", unitary=rotation_unitary(), name="rotated")


def projector_plan(j: int) -> MeasurementPlan:
    return MeasurementPlan("projector", projector=j, name=f"P{j}")


def plan_by_name(name: str) -> MeasurementPlan:
    if name == "diagonal":
        return DIAGONAL
    if name == "rotated":
        return rotated_plan()
    if name.startswith("P") and name[1:].isdigit():
        return projector_plan(int(name[1:]))
    raise ValueError(f"unknown plan {name!r}")


@dataclass(frozen=True)
class SyndromeDistribution:
    """Exact outcome probabilities, shape (branches, syndromes).

    For projector plans row 0 is the +1 outcome and row 1 the -1 outcome, and
    entries are joint probabilities, so the whole array sums to one.
    """

    probs: np.ndarray
    branches: tuple[str, ...] = ("single",)
    n_flags: int = 0
    projector: int | None = None

    def branch(self, name: str) -> np.ndarray:
        return self.probs[self.branches.index(name)]

    @property
    def total(self) -> float:
        return float(self.probs.sum())


@dataclass(frozen=True)
class SyndromeCounts:
    """Shot histogram with the same layout as :class:`SyndromeDistribution`."""

    counts: np.ndarray
    branches: tuple[str, ...] = ("single",)
    n_flags: int = 0
    projector: int | None = None

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def branch(self, name: str) -> np.ndarray:
        return self.counts[self.branches.index(name)]


def _full_channel(code: Code, channel: KrausChannel) -> KrausChannel:
    if not is_cptp(channel):
        raise ValueError("channel stack element is not CPTP")
    if channel.n_qubits == code.n_qubits:
        return channel
    if channel.n_qubits == len(code.principal):
        return channel.embedded(code.principal[0], code.n_qubits)
    raise DimensionError(f"{channel.n_qubits}-qubit channel does not fit {code.name}")


def output_state(code: Code, stack: Sequence[KrausChannel], noise: NoiseSpec | None = None) -> np.ndarray:
    """Density matrix after the stack (first element applied first) and the per-qubit noise."""
    rho = pure_density(code.code_state)
    for ch in stack:
        rho = apply_channel(_full_channel(code, ch), rho)
    for ch in local_noise(code.n_qubits, noise or NoiseSpec()):
        rho = apply_channel(ch, rho)
    return rho


def _syndrome_probs(code: Code, rho: np.ndarray) -> np.ndarray:
    b = code.syndrome_basis
    p = np.real(np.einsum("ij,ik,kj->j", b.conj(), rho, b))
    p[np.abs(p) < 1e-15] = 0.0
    return p


def run_distribution(code: Code, stack: Sequence[KrausChannel], plan: MeasurementPlan = DIAGONAL,
                     noise: NoiseSpec | None = None) -> SyndromeDistribution:
    """Exact syndrome probabilities; ``noise`` acts after the stack and before the plan."""
    rho = output_state(code, stack, noise)
    first = code.principal[0]
    if plan.kind == "diagonal":
        probs = _syndrome_probs(code, rho)[None, :]
    elif plan.kind == "unitary":
        u = embed(plan.unitary, first, code.n_qubits)
        probs = _syndrome_probs(code, u @ rho @ u.conj().T)[None, :]
    else:
        e = embed(pauli_matrix(SYNDROME_TABLE[plan.projector][0]), first, code.n_qubits)
        eye = np.eye(e.shape[0])
        rows = []
        for sign in (1, -1):
            pi = (eye + sign * e) / 2
            rows.append(_syndrome_probs(code, pi @ rho @ pi))
        probs = np.array(rows)
    return SyndromeDistribution(probs, plan.branches, code.n_flags, plan.projector)


def sample_shots(dist: SyndromeDistribution, n: int, rng: np.random.Generator) -> SyndromeCounts:
    """Multinomial draw of ``n`` shots; each projector-plan shot lands in one branch."""
    if n < 1:
        raise ValueError("need at least one shot")
    p = np.clip(dist.probs.ravel(), 0, None)
    counts = rng.multinomial(n, p / p.sum()).reshape(dist.probs.shape)
    return SyndromeCounts(counts, dist.branches, dist.n_flags, dist.projector)


def filter_flagged(counts: SyndromeCounts) -> tuple[SyndromeCounts, float]:
    """Keep shots whose flag bits are all zero; those are the first 16 syndrome values."""
    if counts.n_flags == 0:
        raise ValueError("code has no flag bits to filter on")
    total = counts.total
    kept = counts.counts[:, :16]
    discarded = 1 - kept.sum() / total if total else 0.0
    return SyndromeCounts(kept.copy(), counts.branches, 0, counts.projector), float(discarded)


def filter_distribution(dist: SyndromeDistribution) -> tuple[SyndromeDistribution, float]:
    """Exact counterpart of :func:`filter_flagged`: conditional on clean flags."""
    if dist.n_flags == 0:
        return dist, 0.0
    kept = dist.probs[:, :16]
    mass = kept.sum()
    return SyndromeDistribution(kept / mass, dist.branches, 0, dist.projector), float(1 - mass)


def projector_phase(projector: int, row: int, col: int) -> complex:
    """Phase w with E_projector E_row = w E_col in the standard representatives."""
    return pauli_phase(SYNDROME_TABLE[projector][0], SYNDROME_TABLE[row][0], SYNDROME_TABLE[col][0])


def extract_offdiagonal(data: SyndromeCounts | SyndromeDistribution, element: tuple[int, int]) -> float:
    """Real part of chi_{row,col} from the two branches of a projector plan.

    The column operator is taken as E_proj E_row, i.e. the value returned is
    Re(w chi_{row,col}) with w from :func:`projector_phase`. Frequencies are relative
    to all shots in both branches.
    """
    j = data.projector
    if j not in OFFDIAG_PAIRS:
        raise ValueError(f"data must come from projector P1, P8 or P9, got {j}")
    row, col = element
    if (row, col) not in OFFDIAG_PAIRS[j] and (col, row) not in OFFDIAG_PAIRS[j]:
        raise ValueError(f"element {element} is not measured by P{j}")
    arr = data.counts if isinstance(data, SyndromeCounts) else data.probs
    if arr.shape[-1] != 16:
        raise ValueError("filter flagged syndromes before extraction")
    total = arr.sum()
    if total <= 0 or arr[0].sum() == 0 and arr[1].sum() == 0:
        raise ValueError("both branches are empty")
    f = arr / total
    return OFFDIAG_PREFACTOR * ((f[0, row] + f[0, col]) - (f[1, row] + f[1, col]))


def calibrate_offdiag_prefactor() -> float:
    """Ratio of the oracle coherence Re chi_{0,8} to the raw branch difference on the ideal CX."""
    from .channels import CX
    from .codes import get_code
    from .qmath import oracle_chi

    code = get_code(402)
    cx = KrausChannel.unitary(CX)
    target = oracle_chi(cx, code, (0, 8))[0, 8].real
    d = run_distribution(code, [cx], projector_plan(8)).probs
    raw = (d[0, 0] + d[0, 8]) - (d[1, 0] + d[1, 8])
    return float(target / raw)


def modeled_total(dist: SyndromeDistribution, support: Sequence[int]) -> float:
    return float(dist.probs[:, list(support)].sum())


__all__ = [
    "ATOL", "OFFDIAG_PAIRS", "OFFDIAG_PREFACTOR", "DIAGONAL", "MeasurementPlan", "SyndromeCounts",
    "SyndromeDistribution", "projector_phase", "calibrate_offdiag_prefactor", "extract_offdiagonal",
    "filter_distribution", "filter_flagged", "output_state", "plan_by_name", "projector_plan",
    "rotated_plan", "rotation_unitary", "run_distribution", "sample_shots",
]
