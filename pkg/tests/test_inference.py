import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from dcqd.inference import (calibrate_from_statistics, lambda_grid, overall_error, roc_from_statistics,
                            tail_probability, wald, wald_statistic)

finite = st.floats(-10, 10, allow_nan=False)
pos = st.floats(1e-3, 10, allow_nan=False)


def test_wald_example():
    r = wald(3.2, math.pi, 1 / 3000)
    assert r.statistic == pytest.approx(3000 * (3.2 - math.pi) ** 2)
    assert r.decision == "alternative"
    assert wald(0.55, 0.5, 1 / 3000).statistic == pytest.approx(7.5)


def test_wald_degenerate_is_zero():
    assert wald(0.0, 0.0, 0.0).statistic == 0.0
    assert wald(0.0, 0.0, 0.0).decision == "null"
    assert math.isinf(float(wald_statistic(0.1, 0.0, 0.0)))


def test_wald_negative_variance():
    with pytest.raises(ValueError):
        wald(1.0, 0.0, -1.0)
    with pytest.raises(ValueError):
        wald_statistic([1.0], 0.0, [-1e-3])


@given(finite, finite, pos, pos, finite)
def test_wald_affine_invariant(est, null, var, scale, shift):
    a = float(wald_statistic(est, null, var))
    b = float(wald_statistic(scale * est + shift, scale * null + shift, scale ** 2 * var))
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=1, max_size=200))
def test_tail_nonincreasing(ws):
    t = tail_probability(ws, lambda_grid(60))
    assert np.all(np.diff(t) <= 0)
    assert t[-1] == 0


def test_tail_is_strict_and_counts_nan():
    assert_allclose(tail_probability([1.0, 2.0, np.nan], [1.0, 2.0, 100.0]), [2 / 3, 1 / 3, 1 / 3])


def test_lambda_grid():
    g = lambda_grid(0.2, 0.05)
    assert_allclose(g, [0, 0.05, 0.1, 0.15, 0.2])


@given(st.lists(st.floats(0, 30, allow_nan=False), min_size=10, max_size=300), st.floats(0.0, 1.0))
def test_calibration_is_smallest_grid_point(ws, target):
    cal = calibrate_from_statistics(np.array(ws), target)
    assert cal.achieved_pfa <= target
    i = int(round(cal.lambda_star / 0.05))
    if i > 0:
        assert tail_probability(ws, [cal.lambda_star - 0.05])[0] > target


def test_calibration_target_one_gives_zero():
    assert calibrate_from_statistics(np.array([1.0, 5.0, 9.0]), 1.0).lambda_star == 0.0


def test_calibration_chi_square_quantile():
    w = np.random.default_rng(0).chisquare(1, 200000)
    # the 98th percentile of chi^2_1 is 5.4119
    assert calibrate_from_statistics(w, 0.02).lambda_star == pytest.approx(5.41, abs=0.1)


def test_calibration_fails_with_infinite_statistics():
    with pytest.raises(ValueError):
        calibrate_from_statistics(np.array([np.inf, np.inf]), 0.02)


def test_roc_endpoints():
    rng = np.random.default_rng(1)
    w0, w1 = rng.chisquare(1, 500), rng.noncentral_chisquare(1, 4, 500)
    pts = roc_from_statistics(w0, w1, [-1.0, 1e9])
    assert (pts[0].p_fa, pts[0].p_d) == (1.0, 1.0)
    assert (pts[1].p_fa, pts[1].p_d) == (0.0, 0.0)


@pytest.mark.parametrize("prior, expected", [(1.0, 0.02), (0.0, 0.1), (0.5, 0.06)])
def test_overall_error(prior, expected):
    assert overall_error(0.02, 0.9, prior) == pytest.approx(expected)


def test_overall_error_rejects_bad_prior():
    with pytest.raises(ValueError):
        overall_error(0.1, 0.5, 1.5)
