"""Dense complex linear algebra for small multi-qubit systems.

Conventions: qubit 1 is the leftmost tensor factor (most significant bit of a
computational-basis index), so the string "ZX" means Z on qubit 1 and X on
qubit 2. States and operators are plain ``numpy`` arrays of dtype complex128.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

ATOL = 1e-10
PSD_FLOOR = -1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = (X + Z) / np.sqrt(2)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

# single-qubit products a*b = phase * c
_PAULI_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


class DimensionError(ValueError):
    pass


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product, leftmost argument is the most significant factor."""
    if not ops or any(np.size(op) == 0 for op in ops):
        raise DimensionError("kron needs nonempty operands")
    return reduce(np.kron, ops)


def split_sign(label: str) -> tuple[int, str]:
    """Strip an optional leading '+'/'-' from a Pauli string."""
    if label.startswith("-"):
        return -1, label[1:]
    if label.startswith("+"):
        return 1, label[1:]
    return 1, label


def pauli_matrix(label: str) -> np.ndarray:
    """Matrix of a Pauli string such as ``"ZX"`` or ``"-XIXI"``."""
    sign, body = split_sign(label)
    if not body:
        raise ValueError("empty Pauli label")
    try:
        return sign * kron(*(PAULIS[c] for c in body))
    except KeyError as exc:
        raise ValueError(f"bad Pauli label {label!r}") from exc


def pauli_product(a: str, b: str) -> tuple[complex, str]:
    """Return ``(phase, c)`` with ``a @ b == phase * pauli_matrix(c)``; c is phase free."""
    sa, a = split_sign(a)
    sb, b = split_sign(b)
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {a!r} vs {b!r}")
    phase: complex = sa * sb
    out = []
    for x, y in zip(a, b):
        ph, c = _PAULI_MUL[x, y]
        phase *= ph
        out.append(c)
    return phase, "".join(out)


def anticommutes(a: str, b: str) -> bool:
    _, a = split_sign(a)
    _, b = split_sign(b)
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {a!r} vs {b!r}")
    n = sum(1 for x, y in zip(a, b) if x != "I" and y != "I" and x != y)
    return n % 2 == 1


def embed(op: np.ndarray, first_qubit: int, n_qubits: int) -> np.ndarray:
    """Place ``op`` on the contiguous qubits starting at ``first_qubit`` (0-based)."""
    k = int(round(np.log2(op.shape[0])))
    if 2**k != op.shape[0] or first_qubit < 0 or first_qubit + k > n_qubits:
        raise DimensionError(f"cannot embed {op.shape} at qubit {first_qubit} of {n_qubits}")
    left = np.eye(2**first_qubit, dtype=complex)
    right = np.eye(2 ** (n_qubits - first_qubit - k), dtype=complex)
    return kron(left, op, right)


def is_unitary(u: np.ndarray, tol: float = ATOL) -> bool:
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0)


def is_density_matrix(rho: np.ndarray, tol: float = ATOL) -> bool:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if not np.allclose(rho, rho.conj().T, atol=tol, rtol=0):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= PSD_FLOOR)


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map in operator-sum form, rho -> sum_a K_a rho K_a^dagger."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise DimensionError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if 2 ** int(round(np.log2(d))) != d:
            raise DimensionError(f"dimension {d} is not a power of two")
        for k in ops:
            if k.shape != (d, d):
                raise DimensionError("Kraus operators must share one square shape")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.dim)))

    @classmethod
    def unitary(cls, u: np.ndarray) -> "KrausChannel":
        return cls((u,))

    @classmethod
    def identity(cls, n_qubits: int) -> "KrausChannel":
        return cls((np.eye(2**n_qubits, dtype=complex),))

    @classmethod
    def mixture(cls, weighted: Sequence[tuple[float, np.ndarray]]) -> "KrausChannel":
        """Probabilistic mixture of unitaries; elements are scaled by sqrt(probability)."""
        return cls(tuple(np.sqrt(p) * u for p, u in weighted))

    def embedded(self, first_qubit: int, n_qubits: int) -> "KrausChannel":
        if self.n_qubits == n_qubits and first_qubit == 0:
            return self
        return KrausChannel(tuple(embed(k, first_qubit, n_qubits) for k in self.operators))


def apply_channel(channel: KrausChannel, rho: np.ndarray) -> np.ndarray:
    if rho.shape != (channel.dim, channel.dim):
        raise DimensionError(f"channel dim {channel.dim} vs state shape {rho.shape}")
    out = np.zeros_like(rho, dtype=complex)
    for k in channel.operators:
        out += k @ rho @ k.conj().T
    return out


def compose(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel that applies ``first`` and then ``second``."""
    if first.dim != second.dim:
        raise DimensionError(f"cannot compose dims {first.dim} and {second.dim}")
    return KrausChannel(tuple(b @ a for b in second.operators for a in first.operators))


def compose_all(channels: Sequence[KrausChannel]) -> KrausChannel:
    """Apply ``channels[0]`` first, ``channels[-1]`` last."""
    return reduce(compose, channels)


def is_cptp(channel: KrausChannel, tol: float = ATOL) -> bool:
    s = sum(k.conj().T @ k for k in channel.operators)
    return bool(np.max(np.abs(s - np.eye(channel.dim))) <= tol)


def superoperator(channel: KrausChannel) -> np.ndarray:
    """Row-stacking Liouville matrix: vec(E(rho)) = S @ vec(rho)."""
    return sum(np.kron(k, k.conj()) for k in channel.operators)


def same_map(a: KrausChannel, b: KrausChannel, atol: float = ATOL) -> bool:
    return a.dim == b.dim and np.allclose(superoperator(a), superoperator(b), atol=atol, rtol=0)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_channel(dim: int, n_ops: int, rng: np.random.Generator) -> KrausChannel:
    """Random CPTP map from a Haar isometry, for property tests."""
    u = random_unitary(dim * n_ops, rng)
    v = u[:, :dim]
    return KrausChannel(tuple(v[a * dim:(a + 1) * dim] for a in range(n_ops)))


@dataclass(frozen=True)
class ProcessMatrix:
    """Block of a process matrix over an ordered list of located-error indices.

    ``phases[k]`` multiplies the standard representative of ``basis[k]``; the
    block is defined relative to those rescaled operators.
    """

    basis: tuple[int, ...]
    entries: np.ndarray
    phases: tuple[complex, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(int(b) for b in self.basis))
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=complex))
        if self.phases is None:
            object.__setattr__(self, "phases", (1,) * len(self.basis))
        if self.entries.shape != (len(self.basis), len(self.basis)):
            raise DimensionError("entries must be square over the basis")

    def __getitem__(self, jk: tuple[int, int]) -> complex:
        """Element addressed by located-error indices, e.g. ``chi[0, 8]``."""
        j, k = jk
        return self.entries[self.basis.index(j), self.basis.index(k)]

    def is_hermitian(self, tol: float = ATOL) -> bool:
        return np.allclose(self.entries, self.entries.conj().T, atol=tol, rtol=0)

    def is_psd(self, floor: float = PSD_FLOOR) -> bool:
        h = (self.entries + self.entries.conj().T) / 2
        return bool(np.linalg.eigvalsh(h).min() >= floor)

    def allclose(self, other: "ProcessMatrix", atol: float = ATOL) -> bool:
        return (self.basis == other.basis
                and np.allclose(self.phases, other.phases)
                and np.allclose(self.entries, other.entries, atol=atol, rtol=0))


def oracle_chi(channel: KrausChannel, code, basis: Sequence[int],
               phases: Sequence[complex] | None = None) -> ProcessMatrix:
    """Brute-force process-matrix block: chi_jk = <j| E(rho0) |k> with |j> = E_j |code state>.

    ``channel`` acts on the code's principal qubits (or on the full register).
    """
    from .codes import located_basis_state

    if len(set(basis)) != len(basis):
        raise ValueError("basis indices must be distinct")
    psi = code.code_state
    if abs(np.linalg.norm(psi) - 1) > ATOL:
        raise ValueError("code state is not normalized")
    phases = tuple(phases) if phases is not None else (1,) * len(basis)
    full = channel.embedded(code.principal[0], code.n_qubits)
    rho = apply_channel(full, pure_density(psi))
    kets = np.column_stack([located_basis_state(code, i, ph) for i, ph in zip(basis, phases)])
    return ProcessMatrix(tuple(basis), kets.conj().T @ rho @ kets, phases)
