import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from dcqd.channels import CX, BitFlipModel, NoiseSpec, bitflip_stack, coefficients, cx_theta_channel
from dcqd.codes import get_code
from dcqd.qmath import KrausChannel, oracle_chi, random_channel
from dcqd.tomography import (OFFDIAG_PAIRS, OFFDIAG_PREFACTOR, DIAGONAL, MeasurementPlan, SyndromeCounts,
                             SyndromeDistribution, projector_phase, calibrate_offdiag_prefactor, extract_offdiagonal,
                             filter_distribution, filter_flagged, plan_by_name, projector_plan, rotated_plan,
                             run_distribution, sample_shots)

angles = st.floats(0, 2 * math.pi, allow_nan=False)
probs = st.floats(0, 0.3, allow_nan=False)
SUPPORT = [0, 1, 8, 9]


def _cx(theta, plan, code="402", noise=None):
    return run_distribution(get_code(code), [cx_theta_channel(theta)], plan, noise)


def test_ideal_cx_diagonal_plan():
    p = run_distribution(get_code("402"), [KrausChannel.unitary(CX)]).probs[0]
    want = np.zeros(16)
    want[SUPPORT] = 0.25
    assert_allclose(p, want, atol=1e-12)


@given(angles)
def test_cx_theta_diagonal_plan(theta):
    c = math.cos(theta)
    p = _cx(theta, DIAGONAL).probs[0]
    assert_allclose(p[SUPPORT], [(3 * c + 5) / 8, (1 - c) / 8, (1 - c) / 8, (1 - c) / 8], atol=1e-12)


@given(angles)
def test_cx_theta_rotated_plan(theta):
    s, c = math.sin(theta), math.cos(theta)
    p = _cx(theta, rotated_plan()).probs[0]
    assert_allclose(p[SUPPORT], [(2 * s - c + 3) / 8, (c + 1) / 8, (c + 1) / 8, (-2 * s - c + 3) / 8], atol=1e-12)
    assert abs(p.sum() - 1) < 1e-12


def test_rotated_value_at_1_1_pi():
    assert abs(_cx(1.1 * math.pi, rotated_plan()).probs[0, 0] - 0.41663) < 1e-5


@given(st.integers(0, 2**32 - 1), st.sampled_from(["diagonal", "rotated", "P1", "P8", "P9"]))
def test_distributions_normalized(seed, plan):
    ch = random_channel(4, 2, np.random.default_rng(seed))
    d = run_distribution(get_code("402"), [ch], plan_by_name(plan))
    assert np.all(d.probs >= 0)
    assert abs(d.total - 1) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_diagonal_plan_is_chi_diagonal(seed):
    ch = random_channel(4, 3, np.random.default_rng(seed))
    code = get_code("402")
    chi = oracle_chi(ch, code, range(16))
    assert_allclose(run_distribution(code, [ch]).probs[0], np.diag(chi.entries).real, atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["diagonal", "rotated", "P8"]))
def test_602_filtered_equals_402_for_principal_channels(seed, plan):
    ch = random_channel(4, 2, np.random.default_rng(seed))
    p402 = run_distribution(get_code("402"), [ch], plan_by_name(plan))
    p602 = run_distribution(get_code("602"), [ch], plan_by_name(plan))
    kept, discarded = filter_distribution(p602)
    assert discarded < 1e-12
    assert_allclose(kept.probs, p402.probs, atol=1e-10)


def test_flag_filter_counts():
    counts = SyndromeCounts(np.array([[0] * 16 + [5] * 16 + [0] * 32]), n_flags=2)
    kept, discarded = filter_flagged(counts)
    assert kept.total == 0 and discarded == 1
    clean = SyndromeCounts(np.array([[3] * 16 + [0] * 48]), n_flags=2)
    assert filter_flagged(clean)[1] == 0
    with pytest.raises(ValueError):
        filter_flagged(SyndromeCounts(np.ones((1, 16), dtype=int)))


def test_amplitude_damping_trips_flags():
    d = _cx(math.pi, rotated_plan(), "602", NoiseSpec("ad", 0.1))
    assert filter_distribution(d)[1] > 0


def test_sampling_point_mass_and_determinism():
    probs = np.zeros((1, 16))
    probs[0, 9] = 1
    d = SyndromeDistribution(probs)
    c = sample_shots(d, 100, np.random.default_rng(1))
    assert c.counts[0, 9] == 100
    d = _cx(1.1 * math.pi, rotated_plan())
    a = sample_shots(d, 500, np.random.default_rng(7)).counts
    b = sample_shots(d, 500, np.random.default_rng(7)).counts
    assert np.array_equal(a, b)


def test_sampling_law_of_large_numbers():
    d = _cx(1.1 * math.pi, rotated_plan())
    n = 10**6
    f = sample_shots(d, n, np.random.default_rng(3)).counts[0] / n
    p = d.probs[0]
    assert np.all(np.abs(f - p) <= 5 * np.sqrt(p * (1 - p) / n) + 1e-12)


def test_projector_branches_sum_to_half_for_cx():
    d = run_distribution(get_code("402"), [KrausChannel.unitary(CX)], projector_plan(8))
    assert_allclose(d.probs.sum(axis=1), [0.5, 0.5], atol=1e-12)


def test_offdiag_prefactor_pinned():
    assert calibrate_offdiag_prefactor() == pytest.approx(OFFDIAG_PREFACTOR, abs=1e-12)


def test_extract_ideal_cx():
    d = run_distribution(get_code("402"), [KrausChannel.unitary(CX)], projector_plan(8))
    assert abs(extract_offdiagonal(d, (0, 8)) - 0.25) < 1e-12


def test_extract_noiseless_down_block_vanishes():
    d = run_distribution(get_code("402"), [bitflip_stack(BitFlipModel(0, 0, 0))], projector_plan(8))
    assert abs(extract_offdiagonal(d, (4, 12))) < 1e-12


def test_extract_bitflip_sign():
    m = BitFlipModel(0.1, 0.05, 0.02)
    a, b, g, dl = coefficients(m)
    d = run_distribution(get_code("402"), [bitflip_stack(m)], projector_plan(8))
    assert abs(extract_offdiagonal(d, (0, 8)) - (a - b) / 4) < 1e-12
    assert abs(extract_offdiagonal(d, (4, 12)) - (dl - g) / 4) < 1e-12


@given(probs, probs, probs)
def test_extract_all_offdiagonal_elements(p1, p2, p12):
    m = BitFlipModel(p1, p2, p12)
    code = get_code("402")
    ch = bitflip_stack(m)
    for j, pairs in OFFDIAG_PAIRS.items():
        d = run_distribution(code, [ch], projector_plan(j))
        for row, col in pairs:
            want = (projector_phase(j, row, col) * oracle_chi(ch, code, (row, col))[row, col]).real
            assert abs(extract_offdiagonal(d, (row, col)) - want) < 1e-10


def test_extract_rejects_bad_requests():
    d = run_distribution(get_code("402"), [KrausChannel.unitary(CX)], projector_plan(8))
    with pytest.raises(ValueError):
        extract_offdiagonal(d, (0, 1))
    diag = run_distribution(get_code("402"), [KrausChannel.unitary(CX)])
    with pytest.raises(ValueError):
        extract_offdiagonal(diag, (0, 8))
    full = run_distribution(get_code("602"), [KrausChannel.unitary(CX)], projector_plan(8))
    with pytest.raises(ValueError):
        extract_offdiagonal(full, (0, 8))


def test_plan_validation():
    with pytest.raises(ValueError):
        MeasurementPlan("unitary", unitary=np.ones((4, 4)))
    with pytest.raises(ValueError):
        projector_plan(0)
    with pytest.raises(ValueError):
        plan_by_name("sideways")
