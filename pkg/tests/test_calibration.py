import math
from fractions import Fraction

import numpy as np
import pytest

from fractal_well.calibration import (
    CALIBRATION_PAIRS,
    WeierstrassParams,
    default_truncation,
    eval_weierstrass,
    hardy_exponent_check,
    sample_weierstrass,
    theoretical_dimension,
)
from fractal_well.experiments import calibration_params
from fractal_well.fractal_dim import DeltaLadder, fit_dimension_variation

LADDER = DeltaLadder(2, 4, 12)


@pytest.mark.parametrize("a,b,M", [(0.0, 4, 3), (1.0, 4, 3), (0.5, 1.5, 3), (0.2, 4, 3), (0.5, 1.9, 3), (0.5, 4, -1)])
def test_params_rejected(a, b, M):
    with pytest.raises(ValueError):
        WeierstrassParams(a, b, M)


def test_eval_examples():
    p = WeierstrassParams(0.6, 3, 9)
    assert eval_weierstrass(p, 0.0) == pytest.approx((1 - 0.6**10) / 0.4, rel=1e-15)
    q = WeierstrassParams(0.5, 2, 20)
    # cos(2**n pi) = 1 only for n >= 1; the n = 0 term is cos(pi) = -1
    assert eval_weierstrass(q, Fraction(1)) == pytest.approx(-(2.0**-20), abs=1e-15)
    assert eval_weierstrass(q, 1.0) == pytest.approx(-(2.0**-20), abs=1e-15)
    assert eval_weierstrass(q, Fraction(2)) == pytest.approx(2 - 2.0**-20, rel=1e-15)
    with pytest.raises(ValueError):
        eval_weierstrass(q, math.nan)


def test_eval_bounded_and_matches_naive_sum():
    p = WeierstrassParams(0.7, 5, 8)
    xs = np.random.default_rng(2).uniform(0, 1, 200)
    vals = eval_weierstrass(p, xs)
    assert np.all(np.abs(vals) <= 1 / (1 - p.a))
    naive = sum(p.a**n * np.cos(5.0**n * np.pi * xs) for n in range(p.M + 1))
    assert np.allclose(vals, naive, atol=1e-9)


def test_non_integer_base():
    p = WeierstrassParams(0.5, 2.5, 6)
    x = 0.37
    naive = sum(0.5**n * math.cos(2.5**n * math.pi * x) for n in range(7))
    assert eval_weierstrass(p, x) == pytest.approx(naive, abs=1e-13)
    g = sample_weierstrass(p, 64)
    assert g.ys[10] == pytest.approx(eval_weierstrass(p, 10 / 64), abs=1e-13)


def test_grid_sampling_matches_exact_rationals():
    p = WeierstrassParams(0.5, 4, 12)
    g = sample_weierstrass(p, 2**10)
    for j in (0, 1, 333, 512, 1024):
        assert g.ys[j] == pytest.approx(eval_weierstrass(p, Fraction(j, 2**10)), abs=1e-14)


def test_theoretical_dimension():
    assert theoretical_dimension(WeierstrassParams(0.5, 4, 1)) == pytest.approx(1.5)
    assert theoretical_dimension(WeierstrassParams(0.5, 3, 1)) == pytest.approx(1.3690702464, abs=1e-9)
    assert theoretical_dimension(WeierstrassParams(1 / 3, 3, 1)) == pytest.approx(1.0, abs=1e-6)
    assert WeierstrassParams(0.7, 5, 1).hurst == pytest.approx(0.2216, abs=1e-4)


def test_default_truncation():
    M = default_truncation(4, 2.0**-12)
    assert 4.0**M >= 16 * 2**12 > 4.0 ** (M - 1)
    assert calibration_params(0.5, 4, 2**20).M == 11


@pytest.fixture(scope="module")
def graphs():
    return {ab: sample_weierstrass(calibration_params(*ab), 2**20) for ab in CALIBRATION_PAIRS}


@pytest.mark.parametrize("ab", CALIBRATION_PAIRS)
def test_calibration_dimension_and_hardy_consistency(graphs, ab):
    p = calibration_params(*ab)
    fit = fit_dimension_variation(graphs[ab], LADDER)
    assert abs(fit.dimension - theoretical_dimension(p)) <= 0.05
    hardy, ok = hardy_exponent_check(p, LADDER)
    assert ok
    assert abs((2 - hardy.slope) - fit.dimension) <= 0.05
