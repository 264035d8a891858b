"""Classical Weierstrass function as a calibration target.

``W(x) = sum_n a**n cos(b**n pi x)`` has graph dimension ``2 + ln a / ln b``
and Hölder exponent ``H = ln(1/a) / ln b``; both are used to check the
estimators before they are pointed at quantum states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fractal_dim import DeltaLadder, SampledGraph, ScalingFit, hardy_exponent
from .phase import cospi_ratio, reduce_phase_array

#: (a, b) pairs with H from 0.22 to 0.5
CALIBRATION_PAIRS = ((0.5, 4), (0.7, 5), (0.6, 3))


@dataclass(frozen=True)
class WeierstrassParams:
    a: float
    b: float
    M: int

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise ValueError(f"need 0 < a < 1, got {self.a}")
        if not (self.b > 1 and self.a * self.b >= 1):
            raise ValueError(f"need b > 1 and a*b >= 1, got a={self.a}, b={self.b}")
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"M must be a non-negative integer, got {self.M}")

    @property
    def hurst(self) -> float:
        return math.log(1.0 / self.a) / math.log(self.b)

    @property
    def integer_base(self) -> bool:
        return float(self.b).is_integer()


def eval_weierstrass(p: WeierstrassParams, x):
    """Truncated sum at a scalar, array, or exact ``Fraction`` x.

    Integer bases with rational x reduce ``b**n x`` modulo 2 exactly;
    otherwise each phase is reduced in extended precision.
    """
    if isinstance(x, Fraction) and p.integer_base:
        b = int(p.b)
        den = x.denominator
        total = 0.0
        for n in range(p.M + 1):
            num = pow(b, n, 2 * den) * x.numerator
            total += p.a**n * cospi_ratio(num, den)
        return total
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise ValueError("x must be finite")
    total = np.zeros_like(xa)
    for n in range(p.M + 1):
        if p.integer_base:
            ph = reduce_phase_array(int(p.b) ** n, math.pi * xa) if n else math.pi * xa
        else:
            ph = float(p.b) ** n * math.pi * xa
        total = total + p.a**n * np.cos(ph)
    return float(total) if np.ndim(x) == 0 else total


def sample_weierstrass(p: WeierstrassParams, n_intervals: int, a: float = 0.0, b: float = 1.0) -> SampledGraph:
    """W on ``x_j = j / n_intervals`` over [0, 1] (integer base: exact phases)."""
    if (a, b) != (0.0, 1.0) or not p.integer_base:
        xs = np.linspace(a, b, n_intervals + 1)
        return SampledGraph(a, b, xs, eval_weierstrass(p, xs))
    base = int(p.b)
    j = np.arange(n_intervals + 1, dtype=np.int64)
    two_n = 2 * n_intervals
    ys = np.zeros(n_intervals + 1)
    for n in range(p.M + 1):
        k = pow(base, n, two_n)
        ys += p.a**n * cospi_ratio(k * j % two_n, n_intervals)
    return SampledGraph(0.0, 1.0, j / n_intervals, ys)


def theoretical_dimension(p: WeierstrassParams) -> float:
    return 2.0 + math.log(p.a) / math.log(p.b)


def default_truncation(b: float, delta_min: float, margin: float = 16.0) -> int:
    """Smallest M with ``b**M >= margin / delta_min``."""
    return int(math.ceil(math.log(margin / delta_min) / math.log(b)))


def hardy_exponent_check(
    p: WeierstrassParams,
    ladder: DeltaLadder,
    n_intervals: int = 2**20,
    tolerance: float = 0.05,
) -> tuple[ScalingFit, bool]:
    """Fit the exponent of the global oscillation and compare with H."""
    fit = hardy_exponent(sample_weierstrass(p, n_intervals), ladder)
    return fit, abs(fit.slope - p.hurst) <= tolerance
