"""Model channels on the two principal qubits and their closed-form process matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmath import (H, I2, X, Y, Z, KrausChannel, ProcessMatrix, compose_all, embed, kron,
                    pauli_matrix)

# Located-error indices of the two process-matrix blocks.
UP_BASIS = (0, 8, 1, 9)          # II, ZI, IX, ZX
DOWN_BASIS = (4, 5, 12, 13)      # XI, XX, YI, YX
# The down block is written over X1-multiplied up-block operators, where X1*Z1 = -iY1.
DOWN_PHASES = (1, 1, -1j, -1j)
# Appendix ordering of the same operators: X1 * (II, ZI, IX, ZX).
X1_BASIS = (4, 12, 5, 13)
X1_PHASES = (1, -1j, 1, -1j)

P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
CX = kron(P0, I2) + kron(P1, X)

_CX_PATTERN = np.array([[1, 1, 1, -1], [1, 1, 1, -1], [1, 1, 1, -1], [-1, -1, -1, 1]]) / 4
_CX_X2_PATTERN = np.array([[1, -1, 1, 1], [-1, 1, -1, -1], [1, -1, 1, 1], [1, -1, 1, 1]]) / 4


def cx_theta(theta: float) -> np.ndarray:
    """Controlled phase e^{i theta} conjugated by a Hadamard on the target."""
    phase = np.diag([1, np.exp(1j * theta)])
    return kron(P0, I2) + kron(P1, H @ phase @ H)


def cx_theta_channel(theta: float) -> KrausChannel:
    return KrausChannel.unitary(cx_theta(theta))


def chi_cx_theta(theta: float) -> ProcessMatrix:
    c, s = np.cos(theta), np.sin(theta)
    a = 1 - c + 2j * s
    m = np.array([
        [3 * c + 5, a, a, -a],
        [np.conj(a), 1 - c, 1 - c, c - 1],
        [np.conj(a), 1 - c, 1 - c, c - 1],
        [-np.conj(a), c - 1, c - 1, 1 - c],
    ]) / 8
    return ProcessMatrix(UP_BASIS, m)


@dataclass(frozen=True)
class BitFlipModel:
    """Independent flips on qubits 1 and 2 plus a correlated X1X2 flip."""

    p1: float
    p2: float
    p12: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p12"):
            v = getattr(self, name)
            if not 0 <= v < 0.5:
                raise ValueError(f"{name}={v} outside [0, 0.5)")

    @classmethod
    def unchecked(cls, p1: float, p2: float, p12: float) -> "BitFlipModel":
        """Bypass the range check (boundary cases in tests)."""
        obj = object.__new__(cls)
        for k, v in (("p1", p1), ("p2", p2), ("p12", p12)):
            object.__setattr__(obj, k, float(v))
        return obj

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p12])


def coefficients(model: BitFlipModel) -> tuple[float, float, float, float]:
    """Weights of CX followed by nothing, X2, X1 and X1X2 respectively."""
    p1, p2, p12 = model.p1, model.p2, model.p12
    alpha = p1 * p2 * p12 + (1 - p1) * (1 - p2) * (1 - p12)
    beta = (1 - p1) * (1 - p12) * p2 + p1 * (1 - p2) * p12
    gamma = (1 - p2) * (1 - p12) * p1 + (1 - p1) * p2 * p12
    delta = p1 * (1 - p12) * p2 + (1 - p1) * (1 - p2) * p12
    return alpha, beta, gamma, delta


def coefficient_jacobian(model: BitFlipModel) -> np.ndarray:
    """d(alpha, beta, gamma, delta) / d(p1, p2, p12), shape (4, 3)."""
    p1, p2, p12 = model.p1, model.p2, model.p12
    return np.array([
        [p2 * p12 - (1 - p2) * (1 - p12), p1 * p12 - (1 - p1) * (1 - p12), p1 * p2 - (1 - p1) * (1 - p2)],
        [-(1 - p12) * p2 + (1 - p2) * p12, (1 - p1) * (1 - p12) - p1 * p12, -(1 - p1) * p2 + p1 * (1 - p2)],
        [(1 - p2) * (1 - p12) - p2 * p12, -(1 - p12) * p1 + (1 - p1) * p12, -(1 - p2) * p1 + (1 - p1) * p2],
        [(1 - p12) * p2 - (1 - p2) * p12, p1 * (1 - p12) - (1 - p1) * p12, -p1 * p2 + (1 - p1) * (1 - p2)],
    ])


def chi_bitflip_model(model: BitFlipModel) -> tuple[ProcessMatrix, ProcessMatrix]:
    """The two nonzero blocks of the CX-plus-bit-flip process matrix.

    The up block over (II, ZI, IX, ZX) is ``alpha * chi_CX + beta * chi_CX,X2``;
    the down block over (XI, XX, -iYI, -iYX) is the X1-shifted analogue in gamma, delta.
    """
    a, b, g, d = coefficients(model)
    s, t = a + b, a - b
    up = np.array([
        [s, t, s, -t],
        [t, s, t, -s],
        [s, t, s, -t],
        [-t, -s, -t, s],
    ]) / 4
    u, v = g + d, g - d
    down = np.array([
        [u, u, v, -v],
        [u, u, v, -v],
        [v, v, u, -u],
        [-v, -v, -u, u],
    ]) / 4
    return ProcessMatrix(UP_BASIS, up), ProcessMatrix(DOWN_BASIS, down, DOWN_PHASES)


def bit_flip(p: float, label: str) -> KrausChannel:
    """rho -> (1-p) rho + p P rho P for a Pauli string P."""
    n = len(label)
    return KrausChannel.mixture([(1 - p, np.eye(2**n)), (p, pauli_matrix(label))])


def bitflip_stack(model: BitFlipModel) -> KrausChannel:
    """Ideal CX, then the X2 flip, then the X1 flip, then the correlated X1X2 flip."""
    return compose_all([
        KrausChannel.unitary(CX),
        bit_flip(model.p2, "IX"),
        bit_flip(model.p1, "XI"),
        bit_flip(model.p12, "XX"),
    ])


def _check_unit(name: str, v: float):
    if not 0 <= v <= 1:
        raise ValueError(f"{name}={v} outside [0, 1]")


def amplitude_damping(gamma: float) -> KrausChannel:
    _check_unit("gamma", gamma)
    e0 = ((1 + np.sqrt(1 - gamma)) * I2 + (1 - np.sqrt(1 - gamma)) * Z) / 2
    e1 = np.sqrt(gamma) * (X + 1j * Y) / 2
    return KrausChannel((e0, e1))


def depolarizing(p: float) -> KrausChannel:
    _check_unit("p", p)
    return KrausChannel.mixture([(1 - p, I2), (p / 3, X), (p / 3, Y), (p / 3, Z)])


NOISE_KINDS = ("none", "ad", "dp")


@dataclass(frozen=True)
class NoiseSpec:
    """Single-qubit noise applied once to every physical qubit."""

    kind: str = "none"
    strength: float = 0.0

    def __post_init__(self):
        kind = {"amplitudedamping": "ad", "depolarizing": "dp"}.get(self.kind.lower(), self.kind.lower())
        if kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        _check_unit("strength", self.strength)

    @property
    def trivial(self) -> bool:
        return self.kind == "none" or self.strength == 0

    def qubit_channel(self) -> KrausChannel:
        if self.trivial:
            return KrausChannel.identity(1)
        return amplitude_damping(self.strength) if self.kind == "ad" else depolarizing(self.strength)


def local_noise(n_qubits: int, noise: NoiseSpec) -> list[KrausChannel]:
    """One full-register channel per physical qubit; empty when the noise is trivial."""
    if noise.trivial:
        return []
    ch = noise.qubit_channel()
    return [KrausChannel(tuple(embed(k, q, n_qubits) for k in ch.operators)) for q in range(n_qubits)]


APPENDIX_VARIANTS = ("cx", "cx_x2", "cx_x1", "cx_x1x2")


def appendix_chi(variant: str) -> ProcessMatrix:
    """Fixed process matrices of CX followed by no flip, X2, X1 or X1X2."""
    if variant == "cx":
        return ProcessMatrix(UP_BASIS, _CX_PATTERN)
    if variant == "cx_x2":
        return ProcessMatrix(UP_BASIS, _CX_X2_PATTERN)
    if variant == "cx_x1":
        return ProcessMatrix(X1_BASIS, _CX_PATTERN, X1_PHASES)
    if variant == "cx_x1x2":
        return ProcessMatrix(X1_BASIS, _CX_X2_PATTERN, X1_PHASES)
    raise ValueError(f"unknown variant {variant!r}; expected one of {APPENDIX_VARIANTS}")


def appendix_channel(variant: str) -> KrausChannel:
    """CX followed by the deterministic flip named by ``variant``."""
    flips = {"cx": "II", "cx_x2": "IX", "cx_x1": "XI", "cx_x1x2": "XX"}
    return KrausChannel.unitary(pauli_matrix(flips[variant]) @ CX)
