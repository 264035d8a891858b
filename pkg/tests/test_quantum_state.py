import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_well.phase import PiRational
from fractal_well.quantum_state import (
    SineState,
    StateParams,
    Variant,
    eval_psi,
    eval_variant,
    fundamental_period,
    mean_position,
    mean_velocity,
    mean_velocity_bound,
    normalization,
    position_moments,
    prob_density,
    prob_density_grouped,
    psi_state,
    series_normalization,
    sine_coefficients,
    spectrum,
    time_independent_dimension,
    time_independent_part,
    variant_state,
    velocity_section,
)


def pi_frac(a, b):
    return PiRational(Fraction(a, b))


def gl_nodes(n_panels, order=24):
    gx, gw = np.polynomial.legendre.leggauss(order)
    width = math.pi / n_panels
    left = width * np.arange(n_panels)
    nodes = (left[:, None] + 0.5 * width * (gx + 1)).ravel()
    weights = np.tile(0.5 * width * gw, n_panels)
    return nodes, weights


def direct_psi(q, s, M, x, t):
    """Independent numpy evaluation of the truncated state (small q**M only)."""
    n = np.arange(M + 1)
    c = float(q) ** (n * (s - 2))
    norm = math.sqrt((2 / math.pi) / np.sum(c**2))
    x = np.asarray(x, dtype=float)[..., None]
    k = float(q) ** n
    return norm * np.sum(c * np.sin(k * x) * np.exp(-1j * k**2 * t), axis=-1)


P = StateParams(2, 1.5, 10)


# ------------------------------------------------------------ parameters

@pytest.mark.parametrize("q,s,M", [(1, 1.5, 3), (2.5, 1.5, 3), (2, 0.0, 3), (2, 2.0, 3),
                                   (2, -1, 3), (2, 2.1, 3), (2, 1.5, -1), (2, float("nan"), 2)])
def test_state_params_rejects(q, s, M):
    with pytest.raises(ValueError):
        StateParams(q, s, M)


def test_normalization_matches_series_limit():
    assert normalization(StateParams(2, 1.5, 60)) == pytest.approx(series_normalization(2, 1.5), rel=1e-15)
    c = 2.0 ** (np.arange(11) * -0.5)
    assert normalization(P) ** 2 * np.sum(c**2) == pytest.approx(2 / math.pi)


# ------------------------------------------------------------- eval_psi

def test_psi_vanishes_at_walls():
    for t in (0.0, 0.37, pi_frac(1, 5)):
        assert eval_psi(P, 0.0, t) == 0
        assert eval_psi(P, pi_frac(0, 1), t) == 0
        assert eval_psi(P, pi_frac(1, 1), t) == 0


def test_psi_at_half_pi_is_single_term():
    z = eval_psi(P, pi_frac(1, 2), 0.0)
    assert z == complex(normalization(P), 0.0)
    # frozen: sqrt((2/pi) / sum 2**-n, n=0..10) from a 50-digit evaluation
    assert z.real == pytest.approx(0.5643273756083155665, abs=1e-15)


def test_psi_at_third_pi_matches_extended_precision_sum():
    # frozen from a 50-digit mpmath term-by-term sum
    z = eval_psi(P, pi_frac(1, 3), 0.0)
    assert z.real == pytest.approx(0.6848309585704608106, abs=1e-14)
    assert z.imag == 0.0


def test_psi_large_multipliers_float_path():
    # q=3, M=15: phases 3**30 * t, oracle from 50-digit mpmath on the binary inputs
    z = eval_psi(StateParams(3, 1.3, 15), 2.0, 0.25)
    assert z.real == pytest.approx(0.57618795559951477581, abs=1e-13)
    assert z.imag == pytest.approx(0.031993118634153121929, abs=1e-13)


def test_psi_rejects_bad_input():
    with pytest.raises(ValueError):
        eval_psi(P, float("nan"), 0.0)
    with pytest.raises(ValueError):
        eval_psi(P, 1.0, float("inf"))
    with pytest.raises(ValueError):
        eval_psi(P, 4.0, 0.0)
    with pytest.raises(ValueError):
        eval_psi(P, pi_frac(3, 2), 0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, math.pi), st.floats(-5, 5))
def test_psi_matches_direct_numpy(x, t):
    p = StateParams(2, 1.3, 6)
    assert eval_psi(p, x, t) == pytest.approx(complex(direct_psi(2, 1.3, 6, x, t)), abs=1e-12)


# ---------------------------------------------------------------- density

def test_density_examples():
    assert prob_density(P, 0.0, 0.4) == 0.0
    for t in (0.0, 0.3, pi_frac(2, 7)):
        assert prob_density(P, pi_frac(1, 2), t) == pytest.approx(normalization(P) ** 2, rel=1e-15)
    p12 = StateParams(2, 1.5, 12)
    # frozen 50-digit values on the binary float inputs
    assert prob_density(p12, pi_frac(1, 3), 0.3) == pytest.approx(1.0424046903253692256, abs=1e-12)
    assert prob_density_grouped(p12, pi_frac(1, 3), 0.3) == pytest.approx(prob_density(p12, pi_frac(1, 3), 0.3), abs=1e-9)


def test_grouped_form_examples():
    p = StateParams(2, 1.2, 12)
    assert prob_density_grouped(p, 0.0, 0.5) == 0.0
    assert prob_density_grouped(p, 1.0, 0.7) == pytest.approx(0.59574130748232642712, abs=1e-12)
    assert abs(prob_density_grouped(p, 1.0, 0.7) - prob_density(p, 1.0, 0.7)) < 1e-9
    # t = 0: every cosine is 1, the grouped sum is a perfect square
    x = 0.9
    c = 2.0 ** (np.arange(13) * (1.2 - 2))
    square = normalization(p) ** 2 * float(np.sum(c * np.sin(2.0 ** np.arange(13) * x))) ** 2
    assert prob_density_grouped(p, x, 0.0) == pytest.approx(square, rel=1e-12)


def test_form_equivalence_on_random_sample():
    rng = np.random.default_rng(20240607)
    p = StateParams(2, 1.5, 8)
    xs = rng.uniform(0, math.pi, 1000)
    ts = rng.uniform(-10, 10, 1000)
    worst = max(abs(prob_density(p, x, t) - prob_density_grouped(p, x, t)) for x, t in zip(xs, ts))
    assert worst < 1e-9


def test_normalization_over_random_times():
    # integral of the density over the well is 1, quadrature with >= 4 q**M nodes
    p = StateParams(2, 1.5, 8)
    nodes, weights = gl_nodes(48)
    assert len(nodes) >= 4 * p.q**p.M
    rng = np.random.default_rng(1)
    for t in rng.uniform(0, 10, 20):
        dens = np.abs(direct_psi(2, 1.5, 8, nodes, t)) ** 2
        assert abs(float(np.dot(weights, dens)) - 1.0) < 1e-8
        # and the implementation's grid section integrates to 1 (trapezoid exact for sine products)
        xs, ys = psi_state(p).space_section(t, 2048)
        assert abs(np.trapezoid(ys, xs) - 1.0) < 1e-8


def test_space_section_matches_pointwise():
    p = StateParams(3, 1.4, 6)
    xs, ys = psi_state(p).space_section(0.77, 729)
    for j in (0, 1, 100, 243, 500, 729):
        assert ys[j] == pytest.approx(prob_density(p, pi_frac(j, 729), 0.77), abs=1e-13)


def test_time_section_matches_pointwise():
    p = StateParams(2, 1.5, 8)
    x = pi_frac(1, 3)
    ts, ys = psi_state(p).time_section(x, 4096)
    assert ts[-1] == pytest.approx(fundamental_period(p))
    for j in (0, 1, 1000, 4095, 4096):
        t = PiRational(Fraction(2 * j, 3 * 4096))
        assert ys[j] == pytest.approx(prob_density(p, x, t), abs=1e-12)


# ------------------------------------------------------ periodic structure

def test_fundamental_period_values():
    assert fundamental_period(StateParams(2, 1, 1)) == pytest.approx(2 * math.pi / 3)
    assert fundamental_period(StateParams(3, 1, 1)) == pytest.approx(math.pi / 4)


@pytest.mark.parametrize("q", [2, 3])
def test_density_periodicity(q):
    p = StateParams(q, 1.5, 9)
    period = PiRational(Fraction(2, q * q - 1))
    rng = np.random.default_rng(q)
    for _ in range(30):
        x = PiRational(Fraction(int(rng.integers(1, 997)), 997))
        t = PiRational(Fraction(int(rng.integers(0, 10**6)), 10**5))
        assert abs(prob_density(p, x, t + period) - prob_density(p, x, t)) < 1e-9
    # float times with a modest truncation
    p = StateParams(q, 1.5, 5)
    T = fundamental_period(p)
    for x, t in zip(rng.uniform(0, math.pi, 30), rng.uniform(0, 5, 30)):
        assert abs(prob_density(p, x, t + T) - prob_density(p, x, t)) < 1e-9


def test_spectrum_values():
    lines = spectrum(StateParams(2, 1.5, 3))
    assert [ln.omega for ln in lines] == [3, 12, 15, 48, 60, 63]
    first = {(ln.c, ln.d): ln.omega for ln in lines}
    assert first[(1, 1)] == 3 and first[(2, 1)] == 12 and first[(2, 2)] == 15


@pytest.mark.parametrize("q,M", [(2, 12), (3, 9), (5, 6), (7, 5)])
def test_spectrum_divisibility_and_brute_force(q, M):
    lines = spectrum(StateParams(q, 1.0, M))
    assert all(ln.omega % (q * q - 1) == 0 for ln in lines)
    # brute force: all positive differences q**(2c) - q**(2(c-d))
    brute = sorted(q ** (2 * c) - q ** (2 * (c - d)) for c in range(1, M + 1) for d in range(1, c + 1))
    assert [ln.omega for ln in lines] == brute
    assert [ln.omega for ln in lines] == sorted(ln.omega for ln in lines)


def test_spectrum_overflow_is_reported():
    with pytest.raises(OverflowError):
        spectrum(StateParams(3, 1.0, 25))
    with pytest.raises(OverflowError):
        spectrum(StateParams(2, 1.0, 4), max_omega=100)


# ------------------------------------------------------- smooth points

@pytest.mark.parametrize("q,k,m", [(2, 1, 1), (2, 3, 5), (3, 2, 4), (5, 2, 7)])
def test_smooth_points_are_finite_sums(q, k, m):
    x = PiRational(Fraction(m, q**k))
    short = StateParams(q, 1.5, k - 1)
    long = StateParams(q, 1.5, k + 10)
    for t in (0.0, 0.3, pi_frac(3, 11), 17.0):
        assert eval_psi(short, x, t, normalized=False) == eval_psi(long, x, t, normalized=False)


# ------------------------------------------------ time-independent part

def test_time_independent_part_integrates_to_one():
    p = StateParams(2, 1.5, 8)
    nodes, weights = gl_nodes(64)
    vals = np.array([time_independent_part(p, float(x)) for x in nodes])
    assert float(np.dot(weights, vals)) == pytest.approx(1.0, abs=1e-10)


def test_time_independent_part_is_time_average():
    p = StateParams(2, 1.5, 6)
    x = pi_frac(2, 7)
    _, ys = psi_state(p).time_section(x, 8192)
    assert float(np.mean(ys[:-1])) == pytest.approx(time_independent_part(p, x), abs=1e-13)


def test_time_independent_dimension():
    assert time_independent_dimension(1.0) == 1.0
    assert time_independent_dimension(1.5) == 1.0
    assert time_independent_dimension(1.8) == pytest.approx(1.6)


# --------------------------------------------------- position & velocity

def test_mean_position_odd_q_is_centre():
    p = StateParams(3, 1.5, 8)
    for t in (0.0, 0.4, 12.5):
        assert mean_position(p, t) == math.pi / 2


def test_mean_position_at_zero_time():
    p = StateParams(2, 1.5, 10)
    k = np.arange(1, 11)
    expected = math.pi / 2 - 8 * normalization(p) ** 2 * np.sum(2.0 ** (k * 0.5) / (4.0**k - 1) ** 2)
    assert mean_position(p, 0.0) == pytest.approx(expected, abs=1e-15)


def test_mean_position_matches_quadrature():
    # frozen 30-digit quadrature of x |psi|**2 for q=2, s=1.5, M=6, t=0.4
    p = StateParams(2, 1.5, 6)
    assert abs(mean_position(p, 0.4) - 1.400905441102892644) < 1e-6
    nodes, weights = gl_nodes(64)
    rng = np.random.default_rng(3)
    for t in rng.uniform(0, 3, 5):
        quad = float(np.dot(weights, nodes * np.abs(direct_psi(2, 1.5, 6, nodes, t)) ** 2))
        assert abs(mean_position(p, t) - quad) < 1e-6


def test_mean_velocity_examples():
    assert mean_velocity(StateParams(2, 1.5, 10), 0.0) == 0.0
    assert mean_velocity(StateParams(4, 1.1, 6), 0.0) == 0.0
    for t in (0.0, 0.3, 2.0):
        assert mean_velocity(StateParams(3, 1.5, 10), t) == 0.0


def test_mean_velocity_is_derivative_of_position():
    p = StateParams(2, 1.5, 6)
    h = 1e-6
    for t in (0.1, 0.77, 1.9):
        fd = (mean_position(p, t + h) - mean_position(p, t - h)) / (2 * h)
        assert abs(fd - mean_velocity(p, t)) < 1e-4


def test_mean_velocity_bound():
    p = StateParams(2, 1.5, 10)
    bound = mean_velocity_bound(p)
    _, vs = velocity_section(p, 2**14)
    assert np.max(np.abs(vs)) <= bound
    # the series bound 2c q**(s-3) / (1 - q**(s-3)) with c = 8 N**2 dominates too
    c = 8 * normalization(p) ** 2
    assert bound <= 2 * c * 2 ** (1.5 - 3) / (1 - 2 ** (1.5 - 3))


def test_position_moments_closed_form():
    modes = [1, 2, 3, 4, 8, 9, 27, 64]
    X = position_moments(modes)
    for i, a in enumerate(modes):
        for j, b in enumerate(modes):
            if a == b:
                expected = math.pi**2 / 4
            elif (a - b) % 2 == 0:
                expected = 0.0
            else:
                expected = -4 * a * b / (a * a - b * b) ** 2
            assert X[i, j] == pytest.approx(expected, abs=1e-13)


def test_quadrature_position_lines_agree_with_series():
    p = StateParams(2, 1.5, 7)
    omegas, amps = psi_state(p).position_lines()
    for t in (0.0, 0.5, 1.3):
        val = sum(b * math.cos(w * t) for w, b in zip(omegas, amps))
        assert val == pytest.approx(mean_position(p, t), abs=1e-12)


# ------------------------------------------------------------- variants

@pytest.mark.parametrize("which", list(Variant))
@pytest.mark.parametrize("q", [2, 3])
def test_variants_vanish_at_walls(which, q):
    p = StateParams(q, 1.5, 5)
    for t in (0.0, 0.7):
        assert eval_variant(which, p, 0.0, t) == 0
        assert eval_variant(which, p, pi_frac(1, 1), t) == 0


@pytest.mark.parametrize("which", list(Variant))
@pytest.mark.parametrize("q", [2, 3])
def test_variants_unit_norm_by_quadrature(which, q):
    p = StateParams(q, 1.5, 4)
    state = variant_state(which, p)
    nodes, weights = gl_nodes(4 * max(state.modes))
    for t in (0.0, 1.1):
        vals = np.array([abs(state(float(x), t)) ** 2 for x in nodes])
        assert abs(float(np.dot(weights, vals)) - 1.0) < 1e-8


def test_phi3_is_psi_without_ground_term():
    p = StateParams(2, 1.5, 6)
    c = 2.0 ** (np.arange(1, 7) * -0.5)
    norm = math.sqrt((2 / math.pi) / np.sum(c**2))
    for x, t in ((0.3, 0.0), (1.7, 0.9), (2.9, 4.0)):
        direct = norm * sum(cn * math.sin(2**n * x) * np.exp(-1j * 4**n * t)
                            for n, cn in zip(range(1, 7), c))
        assert eval_variant("phi3", p, x, t) == pytest.approx(complex(direct), abs=1e-13)


def test_phi1_and_phi2_modes():
    p = StateParams(3, 1.5, 3)
    s1 = variant_state("phi1", p)
    assert s1.modes == (2, 3, 9, 27)
    s2 = variant_state("phi2", p)
    assert s2.modes == (1, 2, 3, 9, 27)
    # for q=2 the added sin(2x) merges with the n=1 term
    s2_even = variant_state("phi2", StateParams(2, 1.5, 3))
    assert s2_even.modes == (1, 2, 4, 8)
    ratio = s2_even.coeffs[1] / s2_even.coeffs[2]
    assert ratio == pytest.approx(2 * 2**-0.5 / 2**-1.0)


def test_phi0_signs():
    p = StateParams(3, 1.5, 4)
    assert variant_state("phi0", p, sign=1).modes == (4, 10, 28, 82)
    assert variant_state("phi0", p, sign=-1).modes == (2, 8, 26, 80)
    a = variant_state("phi0", p, seed=11)
    b = variant_state("phi0", p, seed=11)
    assert a == b
    with pytest.raises(ValueError):
        variant_state("phi0", p, sign=0)


def test_sine_state_merges_and_validates():
    st_ = SineState.from_terms([(3, 1.0), (1, 1.0), (3, 1.0)], normalize=False)
    assert st_.modes == (1, 3) and st_.coeffs == (1.0, 2.0)
    assert st_.norm_squared() == pytest.approx(0.5 * math.pi * 5)
    with pytest.raises(ValueError):
        SineState.from_terms([(0, 1.0)])
    with pytest.raises(ValueError):
        SineState.from_terms([(2, 1.0), (2, -1.0)])


# --------------------------------------------------------- coefficients

def test_sine_coefficients():
    p = StateParams(2, 1.5, 6)
    a = sine_coefficients(p, 100)
    norm = normalization(p)
    for n in range(1, 101):
        if n & (n - 1) == 0 and n <= 2**6:
            k = n.bit_length() - 1
            assert a[n - 1] == pytest.approx(norm * 2 ** (k * -0.5), abs=1e-12)
        else:
            assert abs(a[n - 1]) < 1e-8
    assert float(np.sum(a**2)) == pytest.approx(2 / math.pi, abs=1e-12)


def test_sine_coefficients_rejects_coarse_grid():
    with pytest.raises(ValueError):
        sine_coefficients(StateParams(2, 1.5, 6), 100, n_intervals=80)
    with pytest.raises(ValueError):
        sine_coefficients(StateParams(2, 1.5, 6), 0)
