import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from dcqd.codes import (SYNDROME_TABLE, Code, Syndrome, build_402, build_602, code_state_from_generators, get_code,
                        located_basis_state, syndrome_of, syndrome_projector, verify_code)
from dcqd.qmath import pauli_product, pure_density

paulis4 = st.text(alphabet="IXYZ", min_size=4, max_size=4)


@pytest.mark.parametrize("label, bits, index", [
    ("IIII", "0000", 0),
    ("ZXII", "1001", 9),
    ("IXII", "0001", 1),
    ("YIII", "1100", 12),
])
def test_402_table_rows(label, bits, index):
    s = syndrome_of(get_code("402"), label)
    assert "".join(map(str, s.bits)) == bits
    assert s.index == index


def test_402_code_state():
    psi = get_code("402").code_state
    want = np.zeros(16)
    want[[0b0000, 0b0101, 0b1010, 0b1111]] = 0.5
    assert_allclose(psi, want, atol=1e-12)


@pytest.mark.parametrize("build", [build_402, build_602])
def test_verify_code_passes(build):
    rep = verify_code(build())
    assert rep.passed, rep.failures()


def test_602_has_all_twelve_flag_checks():
    rep = verify_code(get_code("602"))
    flags = [c for c in rep.checks if c[0].startswith("flag")]
    assert len(flags) == 12 and all(ok for _, ok, _ in flags)


def test_602_table_rows_have_clean_flags():
    code = get_code("602")
    for i, (label, bits) in SYNDROME_TABLE.items():
        s = syndrome_of(code, code.lift(label))
        assert s.flags == (0, 0) and s.value == i
        assert str(s).startswith("(00)")


def test_sign_flipped_generator_fails_code_state_check():
    good = build_402()
    bad = Code("bad", 4, ("-XIXI",) + good.generators[1:], good.code_state)
    rep = verify_code(bad)
    assert not rep.passed
    assert any("stabilized" in f for f in rep.failures())


def test_no_common_eigenstate_raises():
    with pytest.raises(RuntimeError):
        code_state_from_generators(("ZI", "-ZI"))


@given(paulis4, paulis4)
def test_syndrome_is_homomorphism(a, b):
    code = get_code("402")
    _, ab = pauli_product(a, b)
    sa, sb, sab = (syndrome_of(code, p).bits for p in (a, b, ab))
    assert sab == tuple(x ^ y for x, y in zip(sa, sb))


def test_located_basis_is_orthonormal_and_complete():
    code = get_code("402")
    b = np.column_stack([located_basis_state(code, i) for i in range(16)])
    assert_allclose(b.conj().T @ b, np.eye(16), atol=1e-12)
    assert located_basis_state(code, 0) is not None
    assert_allclose(located_basis_state(code, 0), code.code_state)
    with pytest.raises(IndexError):
        located_basis_state(code, 16)


def test_syndrome_projector_selects_located_state():
    code = get_code("402")
    for i in range(16):
        proj = syndrome_projector(code, Syndrome(tuple(int(c) for c in SYNDROME_TABLE[i][1])))
        v = located_basis_state(code, i)
        assert_allclose(proj @ v, v, atol=1e-12)
        assert abs(np.trace(proj).real - 1) < 1e-12


def test_602_syndrome_basis_ordering():
    code = get_code("602")
    basis = code.syndrome_basis
    assert basis.shape == (64, 64)
    rho = pure_density(code.code_state)
    p = np.real(np.einsum("ij,ik,kj->j", basis.conj(), rho, basis))
    assert abs(p[0] - 1) < 1e-12


def test_get_code_names():
    assert get_code(402) is get_code("[[4,0,2]]")
    with pytest.raises(ValueError):
        get_code("713")
