import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from numpy.testing import assert_allclose

from dcqd.channels import BitFlipModel, appendix_channel, coefficients
from dcqd.codes import get_code
from dcqd.estimation import (EstimationError, SingularModelError, crlb_diagonal_closed, crlb_p12,
                             crlb_rotated_closed, crlb_theta, direct_bitflip, fisher_bitflip, fisher_theta,
                             invert_coefficients, ml_theta, ml_theta_batch, reconstruct_coefficients,
                             theta_probs)
from dcqd.montecarlo import bitflip_distributions
from dcqd.tomography import SyndromeCounts, projector_plan, run_distribution

angles = st.floats(0.05, 2 * math.pi - 0.05, allow_nan=False)
probs = st.floats(0.001, 0.3, allow_nan=False)


def _counts16(x):
    c = np.zeros(16)
    c[[0, 1, 8, 9]] = x
    return SyndromeCounts(c[None, :])


def _exact_bitflip_counts(model, n=10**6):
    diag, proj = bitflip_distributions(model, "402", None)
    # float counts proportional to the exact distributions
    return (SyndromeCounts(diag[:, :16] * n),
            SyndromeCounts(proj[:, :16] * n, ("plus", "minus"), 0, 8))


@pytest.mark.parametrize("x, plan, expected", [
    ((500, 0, 0, 500), "rotated", math.pi),
    ((1000, 0, 0, 0), "diagonal", 0.0),
])
def test_ml_theta_examples(x, plan, expected):
    est = ml_theta(_counts16(x), plan)
    err = (est.theta_hat - expected + math.pi) % (2 * math.pi) - math.pi
    assert abs(err) < 1e-6


@given(angles)
def test_ml_theta_recovers_exact_expected_counts(theta):
    x = theta_probs(theta, "rotated") * 10**6
    got = ml_theta_batch(x[None, :], "rotated")[0]
    assert abs(got - theta) < 1e-6


def test_ml_theta_batch_matches_single():
    rng = np.random.default_rng(5)
    x = rng.multinomial(1000, theta_probs(1.1 * math.pi, "rotated"), size=20)
    batch = ml_theta_batch(x, "rotated")
    single = [ml_theta(_counts16(row), "rotated").theta_hat for row in x]
    assert_allclose(batch, single, atol=1e-12)


def test_ml_theta_maximizes_likelihood():
    rng = np.random.default_rng(9)
    x = rng.multinomial(300, theta_probs(2.0, "rotated"))
    best = ml_theta_batch(x[None, :], "rotated")[0]
    grid = np.linspace(0, 2 * math.pi, 20001)
    p = theta_probs(grid, "rotated")
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.nansum(np.where(x > 0, x * np.log(p), 0.0), axis=1)
    pb = theta_probs(best, "rotated")
    assert np.sum(x * np.log(pb)) >= ll.max() - 1e-6


def test_ml_theta_rejects_empty():
    with pytest.raises(EstimationError):
        ml_theta(_counts16((0, 0, 0, 0)), "rotated")


@pytest.mark.parametrize("theta, n, expected", [
    (math.pi, 1000, 4 / 3000),
    (1.1 * math.pi, 1000, None),
])
def test_crlb_rotated(theta, n, expected):
    got = crlb_theta(theta, n, "rotated")
    assert got == pytest.approx(crlb_rotated_closed(theta, n), rel=1e-10)
    if expected is not None:
        assert got == pytest.approx(expected, rel=1e-12)


def test_crlb_diagonal_blows_up_at_pi():
    assert crlb_theta(0.0, 100, "diagonal") == pytest.approx(crlb_diagonal_closed(0.0, 100))
    assert math.isinf(crlb_theta(math.pi, 100, "diagonal"))


@given(angles, st.sampled_from(["rotated", "diagonal"]))
def test_fisher_theta_matches_finite_difference_score(theta, plan):
    h = 1e-6
    p = theta_probs(theta, plan)
    dp = (theta_probs(theta + h, plan) - theta_probs(theta - h, plan)) / (2 * h)
    mask = p > 1e-9
    assert fisher_theta(theta, plan) == pytest.approx(np.sum(dp[mask] ** 2 / p[mask]), rel=1e-5, abs=1e-8)


@given(angles)
def test_crlb_scales_inversely_with_shots(theta):
    assert crlb_theta(theta, 100, "rotated") == pytest.approx(10 * crlb_theta(theta, 1000, "rotated"))


@given(probs, probs, probs)
def test_invert_coefficients_round_trip(p1, p2, p12):
    a, b, g, d = coefficients(BitFlipModel(p1, p2, p12))
    q, r, s = 1 - 2 * a - 2 * b, 1 - 2 * b - 2 * g, 1 - 2 * a - 2 * g
    assume(min(abs(q), abs(r), abs(s)) > 1e-3)
    assert_allclose(invert_coefficients(a, b, g, d), (p1, p2, p12), atol=1e-8)


def test_invert_coefficients_singular():
    with pytest.raises(SingularModelError):
        invert_coefficients(0.25, 0.25, 0.25, 0.25)


@pytest.mark.parametrize("model", [(0.01, 0.02, 0.0), (0.01, 0.02, 0.01), (0.1, 0.05, 0.2)])
@pytest.mark.parametrize("all_pairs", [True, False])
def test_direct_estimator_on_exact_data(model, all_pairs):
    m = BitFlipModel(*model)
    est = direct_bitflip(*_exact_bitflip_counts(m), all_pairs=all_pairs)
    assert_allclose((est.p1_hat, est.p2_hat, est.p12_hat), model, atol=1e-9)
    assert_allclose(est.coefficients, coefficients(m), atol=1e-12)


def test_reconstruct_pairs_agree_on_exact_data():
    diag, proj = _exact_bitflip_counts(BitFlipModel(0.05, 0.1, 0.03))
    assert_allclose(reconstruct_coefficients(diag, proj, True), reconstruct_coefficients(diag, proj, False),
                    atol=1e-12)


def _mixture_counts(weights, n=10**6):
    """Exact data for a mixture of the four deterministic CX-plus-flip channels."""
    code = get_code("402")
    diag = sum(w * run_distribution(code, [appendix_channel(v)]).probs for v, w in weights.items())
    proj = sum(w * run_distribution(code, [appendix_channel(v)], projector_plan(8)).probs for v, w in weights.items())
    return SyndromeCounts(diag * n), SyndromeCounts(proj * n, ("plus", "minus"), 0, 8)


def test_direct_estimator_truncates():
    # these weights give q r s < 0: no bit-flip model produces them
    diag, proj = _mixture_counts({"cx": 0.4, "cx_x2": 0.4, "cx_x1": 0.05, "cx_x1x2": 0.15})
    est = direct_bitflip(diag, proj)
    assert math.isnan(est.raw[2])
    assert est.truncated and est.p12_hat == 0.0
    assert_allclose((est.p1_hat, est.p2_hat), (0.2, 0.5), atol=1e-9)


def test_direct_estimator_needs_p8():
    diag, proj = _exact_bitflip_counts(BitFlipModel(0.01, 0.02, 0))
    bad = SyndromeCounts(proj.counts, proj.branches, 0, 1)
    with pytest.raises(EstimationError):
        direct_bitflip(diag, bad)


@given(probs, probs, probs)
def test_fisher_bitflip_symmetric_psd(p1, p2, p12):
    info = fisher_bitflip(BitFlipModel(p1, p2, p12)).value
    assert_allclose(info, info.T, atol=1e-10)
    assert np.linalg.eigvalsh(info).min() > -1e-8 * max(1.0, np.abs(info).max())


def test_crlb_p12_vanishes_with_shots():
    m = BitFlipModel(0.01, 0.02, 0.01)
    v = [crlb_p12(m, n) for n in (10**3, 10**5, 10**7)]
    assert v[0] > v[1] > v[2] > 0
    assert v[2] * 10**7 == pytest.approx(v[0] * 10**3, rel=1e-9)


def test_all_pairs_estimator_variance():
    # averaging both coherence copies lowers the variance; neither beats the bound
    m = BitFlipModel(0.01, 0.02, 0.01)
    diag_p, proj_p = bitflip_distributions(m, "402", None)
    rng = np.random.default_rng(11)
    n = 10**4
    raw = {True: [], False: []}
    for _ in range(1500):
        d = SyndromeCounts(rng.multinomial(n // 2, diag_p.ravel()).reshape(diag_p.shape))
        p = SyndromeCounts(rng.multinomial(n // 2, proj_p.ravel()).reshape(proj_p.shape), ("plus", "minus"), 0, 8)
        for flag in raw:
            raw[flag].append(direct_bitflip(d, p, all_pairs=flag).raw[2])
    bound = crlb_p12(m, n)
    v4, v2 = np.var(raw[True]), np.var(raw[False])
    assert v4 < v2
    assert v4 > 0.85 * bound
    assert abs(np.mean(raw[True]) - 0.01) < 4 * math.sqrt(v4 / 1500)
