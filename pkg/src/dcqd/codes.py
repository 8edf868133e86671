"""The [[4,0,2]] and [[6,0,2]] tomography codes.

Both codes have a one-dimensional code space holding a state that is
maximally entangled between the two principal qubits (1 and 2) and the rest.
Every two-qubit Pauli on the principal pair moves the code state into its own
syndrome subspace, which is what makes syndrome frequencies read out process
matrix elements directly.

Syndrome bits are ordered like the generators. For the flagged code the two
flag generators come first, so a syndrome's integer value is
``flags << 4 | index`` and shots with clean flags have values below 16.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from itertools import combinations

import numpy as np

from .qmath import ATOL, anticommutes, pauli_matrix, pauli_product, split_sign

_CHARS = "IXZY"

# Located errors and their syndromes, indexed by the syndrome integer.
SYNDROME_TABLE: dict[int, tuple[str, str]] = {
    i: (_CHARS[i >> 2] + _CHARS[i & 3], format(i, "04b")) for i in range(16)
}


@dataclass(frozen=True)
class Syndrome:
    bits: tuple[int, ...]
    n_flags: int = 0

    @property
    def flags(self) -> tuple[int, ...]:
        return self.bits[: self.n_flags]

    @property
    def index(self) -> int:
        """Non-flag bits read as a binary integer (first bit most significant)."""
        return _to_int(self.bits[self.n_flags:])

    @property
    def value(self) -> int:
        return _to_int(self.bits)

    def __str__(self) -> str:
        body = "".join(map(str, self.bits[self.n_flags:]))
        if self.n_flags:
            return "(" + "".join(map(str, self.flags)) + ")" + body
        return body


def _to_int(bits) -> int:
    return reduce(lambda acc, b: 2 * acc + int(b), bits, 0)


@dataclass(frozen=True)
class Code:
    name: str
    n_qubits: int
    generators: tuple[str, ...]
    code_state: np.ndarray = field(repr=False, compare=False)
    principal: tuple[int, ...] = (0, 1)
    n_flags: int = 0

    @property
    def n_syndromes(self) -> int:
        return 2 ** len(self.generators)

    @property
    def located_errors(self) -> dict[int, str]:
        """Located-error representatives (standard-phase Y) on the principal qubits."""
        return {i: label for i, (label, _) in SYNDROME_TABLE.items()}

    def lift(self, label: str) -> str:
        """Extend a Pauli string on the principal qubits to the whole register."""
        if len(label) == self.n_qubits:
            return label
        if len(label) != len(self.principal):
            raise ValueError(f"{label!r} has wrong length for {self.name}")
        out = ["I"] * self.n_qubits
        for q, c in zip(self.principal, label):
            out[q] = c
        return "".join(out)

    @cached_property
    def syndrome_basis(self) -> np.ndarray:
        """Columns are the normalized states of each syndrome subspace, by syndrome value."""
        return np.column_stack([_rank_one_vector(syndrome_projector(self, s)) for s in self.all_syndromes()])

    def all_syndromes(self) -> list[Syndrome]:
        n = len(self.generators)
        return [Syndrome(tuple(int(b) for b in format(v, f"0{n}b")), self.n_flags) for v in range(2**n)]

    def __hash__(self):
        return hash((self.name, self.generators))


def _rank_one_vector(projector: np.ndarray) -> np.ndarray:
    col = int(np.argmax(np.linalg.norm(projector, axis=0)))
    v = projector[:, col]
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v) > 1e-12))
    return v * (abs(v[k]) / v[k])


def code_state_from_generators(generators) -> np.ndarray:
    n = len(split_sign(generators[0])[1])
    proj = np.eye(2**n, dtype=complex)
    for g in generators:
        proj = proj @ (np.eye(2**n) + pauli_matrix(g)) / 2
    if np.linalg.norm(proj) < 1e-9:
        raise RuntimeError("generators have no common +1 eigenstate")
    return _rank_one_vector(proj)


def build_402() -> Code:
    gens = ("XIXI", "ZIZI", "IXIX", "IZIZ")
    return Code("[[4,0,2]]", 4, gens, code_state_from_generators(gens))


def build_602() -> Code:
    """Six-qubit code: a [[4,2,2]] block on qubits 3-6 Bell-paired with the principal pair.

    The block's stabilizers XXXX and ZZZZ give the two flag bits, so any
    weight-one error on qubits 3-6 trips a flag. The block's logical operators
    (X3X4, Z3Z5) and (X3X5, Z3Z4) pair with qubit 1 and qubit 2 respectively.
    """
    gens = ("IIXXXX", "IIZZZZ", "XIXXII", "ZIZIZI", "IXXIXI", "IZZZII")
    code = Code("[[6,0,2]]", 6, gens, code_state_from_generators(gens), n_flags=2)
    report = verify_code(code)
    if not report.passed:
        raise RuntimeError(f"[[6,0,2]] construction failed: {report.failures()}")
    return code


def syndrome_of(code: Code, pauli: str) -> Syndrome:
    _, body = split_sign(pauli)
    if len(body) != code.n_qubits:
        raise ValueError(f"{pauli!r} does not act on {code.n_qubits} qubits")
    return Syndrome(tuple(int(anticommutes(g, body)) for g in code.generators), code.n_flags)


def syndrome_projector(code: Code, syndrome: Syndrome) -> np.ndarray:
    if len(syndrome.bits) != len(code.generators):
        raise ValueError("syndrome length does not match generator count")
    d = 2**code.n_qubits
    proj = np.eye(d, dtype=complex)
    for e, g in zip(syndrome.bits, code.generators):
        proj = proj @ (np.eye(d) + (-1) ** e * pauli_matrix(g)) / 2
    return proj


def located_basis_state(code: Code, i: int, phase: complex = 1) -> np.ndarray:
    if not 0 <= i < 16:
        raise IndexError(f"located error index {i} out of range")
    return phase * (pauli_matrix(code.lift(SYNDROME_TABLE[i][0])) @ code.code_state)


@dataclass
class VerificationReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failures(self) -> list[str]:
        return [f"{n}: {d}" for n, ok, d in self.checks if not ok]


def _gf2_rank(rows: list[list[int]]) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    for col in range(m.shape[1]):
        pivot = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank


def _symplectic(label: str) -> list[int]:
    _, body = split_sign(label)
    return [int(c in "XY") for c in body] + [int(c in "ZY") for c in body]


def verify_code(code: Code) -> VerificationReport:
    """Exhaustively check the generator, code-state and syndrome-table invariants."""
    rep = VerificationReport()
    gens = code.generators
    rep.add("generator count", len(gens) == code.n_qubits, f"{len(gens)} generators, {code.n_qubits} qubits")
    for a, b in combinations(gens, 2):
        rep.add(f"commute {a},{b}", not anticommutes(a, b))
    rep.add("independent", _gf2_rank([_symplectic(g) for g in gens]) == len(gens))

    psi = code.code_state
    rep.add("normalized", abs(np.linalg.norm(psi) - 1) < ATOL, f"norm {np.linalg.norm(psi):.3g}")
    for g in gens:
        dev = np.linalg.norm(pauli_matrix(g) @ psi - psi)
        rep.add(f"code state stabilized by {g}", dev < ATOL, f"deviation {dev:.3g}")

    seen = set()
    for i, (label, bits) in SYNDROME_TABLE.items():
        s = syndrome_of(code, code.lift(label))
        ok = all(b == 0 for b in s.flags) and "".join(map(str, s.bits[code.n_flags:])) == bits
        rep.add(f"syndrome row {i} ({label})", ok, f"got {s}, want {'(00)' if code.n_flags else ''}{bits}")
        seen.add(s.value)
    rep.add("located syndromes distinct", len(seen) == 16)

    if code.n_flags:
        for q in range(code.n_qubits):
            if q in code.principal:
                continue
            for c in "XYZ":
                label = "I" * q + c + "I" * (code.n_qubits - q - 1)
                s = syndrome_of(code, label)
                rep.add(f"flag {label}", any(s.flags), f"got {s}")
    return rep


def pauli_phase(proj: str, row: str, col: str) -> complex:
    """Phase w with proj @ row == w * col, all labels on the principal qubits."""
    phase, label = pauli_product(proj, row)
    if label != col:
        raise ValueError(f"{proj}*{row} is not proportional to {col}")
    return phase


_CODES = {}


def get_code(name) -> Code:
    """Cached code lookup by ``"402"`` / ``"602"``."""
    key = "".join(ch for ch in str(name) if ch.isdigit())
    if key not in ("402", "602"):
        raise ValueError(f"unknown code {name!r}; expected 402 or 602")
    if key not in _CODES:
        _CODES[key] = build_402() if key == "402" else build_602()
    return _CODES[key]
