"""Argument reduction for sin/cos at very large multiples of a phase.

Two paths are provided.  When the argument is a rational multiple of pi
(``PiRational``) the product ``k * x`` is reduced modulo ``2*pi`` with
integer arithmetic, so ``sin(q**n * pi * a/b)`` is exact up to the final
libm call, and vanishes exactly when it should.  Plain floats go through
mpmath with enough working bits to keep ``k * x mod 2*pi`` accurate for
the exact binary value of ``x``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath
import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, order=True)
class PiRational:
    """The real number ``ratio * pi`` with an exact rational ``ratio``."""

    ratio: Fraction

    def __post_init__(self):
        object.__setattr__(self, "ratio", Fraction(self.ratio))

    def __float__(self) -> float:
        return float(self.ratio) * math.pi

    def __str__(self) -> str:
        return f"{self.ratio}pi"

    def __add__(self, other: "PiRational") -> "PiRational":
        return PiRational(self.ratio + other.ratio)


Angle = Union[float, int, PiRational]

_PI_RE = re.compile(r"^\s*([-+]?[\d./]*?)\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$", re.IGNORECASE)


def parse_angle(text: str) -> Angle:
    """Parse ``"1/2pi"``, ``"pi/3"``, ``"2/3 pi"``, ``"pi"`` or a bare decimal.

    Anything mentioning ``pi`` becomes a :class:`PiRational`; bare numbers
    become floats and take the extended-precision path.
    """
    m = _PI_RE.match(text)
    if m is None:
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"cannot parse angle {text!r}") from None
    coef, tail = m.group(1), m.group(2)
    if coef in ("", "+"):
        r = Fraction(1)
    elif coef == "-":
        r = Fraction(-1)
    else:
        r = Fraction(coef)
    if tail:
        r /= int(tail)
    return PiRational(r)


def as_float(x: Angle) -> float:
    return float(x)


def check_finite(x: Angle, name: str = "x") -> None:
    if isinstance(x, PiRational):
        return
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")


# ---------------------------------------------------------------- exact path

def sinpi_ratio(num, den: int):
    """``sin(pi * num / den)`` for integer ``num`` (scalar or int array).

    The integer numerator is folded into ``[0, den/2]`` before the float
    division so multiples of pi give exactly 0.0 and half-multiples exactly
    +-1.0.
    """
    two_den = 2 * den
    scalar = np.ndim(num) == 0
    if scalar:
        n = int(num) % two_den
        sign = 1.0
        if n >= den:
            n -= den
            sign = -1.0
        if 2 * n > den:
            n = den - n
        return sign * math.sin(math.pi * n / den)
    n = np.mod(np.asarray(num, dtype=np.int64), two_den)
    neg = n >= den
    n = np.where(neg, n - den, n)
    n = np.where(2 * n > den, den - n, n)
    out = np.sin(np.pi * (n / den))
    return np.where(neg, -out, out)


def cospi_ratio(num, den: int):
    """``cos(pi * num / den)`` via ``sin(pi * (2*num + den) / (2*den))``."""
    if np.ndim(num) == 0:
        return sinpi_ratio(2 * int(num) + den, 2 * den)
    return sinpi_ratio(2 * np.asarray(num, dtype=np.int64) + den, 2 * den)


def _exact_parts(k: int, r: Fraction) -> tuple[int, int]:
    """``k * r`` reduced modulo 2 as ``(num, den)``; ``k`` may be huge."""
    den = r.denominator
    num = (k % (2 * den)) * (r.numerator % (2 * den)) % (2 * den)
    return num, den


# ---------------------------------------------------------- float/extended

def _mp_reduce(k: int, x: float) -> float:
    """``k * x mod 2*pi`` for the exact binary value of ``x``."""
    if x == 0.0 or k == 0:
        return 0.0
    mant, exp = math.frexp(x)
    bits = 80 + k.bit_length() + max(exp, 0)
    with mpmath.workprec(bits):
        prod = mpmath.mpf(k) * mpmath.mpf(x)
        red = prod - mpmath.floor(prod / (2 * mpmath.pi)) * 2 * mpmath.pi
        return float(red)


def reduce_phase(k: int, x: Angle) -> float:
    """Return ``k * x`` reduced to ``[0, 2*pi)``."""
    if isinstance(x, PiRational):
        num, den = _exact_parts(k, x.ratio)
        return math.pi * num / den
    return _mp_reduce(int(k), float(x))


def sin_mul(k: int, x: Angle) -> float:
    """``sin(k * x)`` with exact or extended-precision reduction."""
    if isinstance(x, PiRational):
        num, den = _exact_parts(k, x.ratio)
        return sinpi_ratio(num, den)
    return math.sin(_mp_reduce(int(k), float(x)))


def cos_mul(k: int, x: Angle) -> float:
    if isinstance(x, PiRational):
        num, den = _exact_parts(k, x.ratio)
        return cospi_ratio(num, den)
    return math.cos(_mp_reduce(int(k), float(x)))


_LD_SAFE = 2.0 ** 40
# 2*pi to long-double precision as a double-double sum
with mpmath.workprec(200):
    _TWO_PI_LD = np.longdouble(TWO_PI) + np.longdouble(float(2 * mpmath.pi - mpmath.mpf(TWO_PI)))


def reduce_phase_array(k: int, x: np.ndarray) -> np.ndarray:
    """Vectorised ``k * x mod 2*pi`` for a float array.

    Uses 80-bit long doubles while ``k * max|x|`` stays below ``2**40``
    (absolute error well under 1e-12); beyond that falls back to the
    per-element mpmath path.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return x.copy()
    if abs(k) * float(np.max(np.abs(x))) < _LD_SAFE:
        two_pi = _TWO_PI_LD
        prod = np.longdouble(k) * x.astype(np.longdouble)
        return np.mod(prod, two_pi).astype(float)
    return np.array([_mp_reduce(int(k), float(v)) for v in x.ravel()]).reshape(x.shape)
