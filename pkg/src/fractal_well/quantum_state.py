"""Weierstrass-type states of a particle in the infinite well on [0, pi].

The eigenstates are ``sin(k x) exp(-i k**2 t)``.  The lacunary state keeps
the modes ``k = q**n`` with amplitudes ``q**(n (s - 2))``, n = 0..M, and is
normalised to unit L2 norm over the well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Iterable, Optional, Sequence

import numpy as np

from .phase import (
    Angle,
    PiRational,
    check_finite,
    cos_mul,
    cospi_ratio,
    reduce_phase,
    reduce_phase_array,
    sin_mul,
    sinpi_ratio,
)

# Frequencies travel through int64 arrays when sampling on grids.
INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class StateParams:
    """Base ``q``, dimension parameter ``s`` and truncation order ``M``."""

    q: int
    s: float
    M: int

    def __post_init__(self):
        if isinstance(self.q, bool) or int(self.q) != self.q or self.q < 2:
            raise ValueError(f"q must be an integer >= 2, got {self.q!r}")
        if not (math.isfinite(self.s) and 0.0 < self.s < 2.0):
            raise ValueError(f"s must lie in (0, 2), got {self.s!r}")
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 0:
            raise ValueError(f"M must be an integer >= 0, got {self.M!r}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "s", float(self.s))

    def modes(self) -> list[int]:
        return [self.q**n for n in range(self.M + 1)]

    def amplitudes(self) -> np.ndarray:
        n = np.arange(self.M + 1)
        return float(self.q) ** (n * (self.s - 2.0))


def normalization(p: StateParams) -> float:
    """Unit-L2 constant of the truncated state, ``sqrt((2/pi) / sum c_n**2)``."""
    c = p.amplitudes()
    return math.sqrt((2.0 / math.pi) / float(np.sum(c * c)))


def series_normalization(q: int, s: float) -> float:
    """Normalisation of the untruncated series."""
    return math.sqrt(2.0 / math.pi * (1.0 - float(q) ** (2.0 * (s - 2.0))))


def _check_x(x: Angle) -> None:
    check_finite(x, "x")
    if isinstance(x, PiRational):
        if not 0 <= x.ratio <= 1:
            raise ValueError(f"x must lie in [0, pi], got {x}")
    elif not (-1e-12 <= x <= math.pi + 1e-12):
        raise ValueError(f"x must lie in [0, pi], got {x!r}")


def _phase_factor(energy: int, t: Angle) -> complex:
    if isinstance(t, PiRational) or t != 0:
        th = reduce_phase(energy, t)
        return complex(math.cos(th), -math.sin(th))
    return 1.0 + 0.0j


# ----------------------------------------------------------------- states

@dataclass(frozen=True)
class SineState:
    """Finite superposition ``sum_j c_j sin(k_j x) exp(-i k_j**2 t)``.

    Repeated modes are merged on construction, so the L2 norm is
    ``(pi/2) * sum c_j**2``.
    """

    modes: tuple[int, ...]
    coeffs: tuple[float, ...]

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, float]], normalize: bool = True) -> "SineState":
        merged: dict[int, float] = {}
        for k, c in terms:
            k = int(k)
            if k <= 0:
                raise ValueError(f"mode numbers must be positive, got {k}")
            merged[k] = merged.get(k, 0.0) + float(c)
        items = sorted((k, c) for k, c in merged.items() if c != 0.0)
        if not items:
            raise ValueError("state has no non-zero terms")
        modes = tuple(k for k, _ in items)
        coeffs = np.array([c for _, c in items])
        if normalize:
            coeffs = coeffs * math.sqrt((2.0 / math.pi) / float(np.sum(coeffs**2)))
        return cls(modes, tuple(float(c) for c in coeffs))

    @property
    def energies(self) -> list[int]:
        return [k * k for k in self.modes]

    def norm_squared(self) -> float:
        return 0.5 * math.pi * float(np.sum(np.square(self.coeffs)))

    def frequency_gcd(self) -> int:
        e = self.energies
        diffs = [b - e[0] for b in e[1:]]
        if not diffs:
            raise ValueError("a single eigenstate has no time dependence")
        return reduce(math.gcd, diffs)

    def period(self) -> float:
        """Smallest common period of all the Bohr frequencies in |psi|**2."""
        return 2.0 * math.pi / self.frequency_gcd()

    def __call__(self, x: Angle, t: Angle) -> complex:
        _check_x(x)
        check_finite(t, "t")
        total = 0.0 + 0.0j
        for k, c in zip(self.modes, self.coeffs):
            sx = sin_mul(k, x)
            if sx == 0.0:
                continue
            total += c * sx * _phase_factor(k * k, t)
        return total

    def density(self, x: Angle, t: Angle) -> float:
        z = self(x, t)
        return z.real * z.real + z.imag * z.imag

    # -- grid sampling with exact integer phases

    def space_section(self, t: Angle, n_intervals: int) -> tuple[np.ndarray, np.ndarray]:
        """|psi(x, t)|**2 on ``x_j = pi j / n_intervals``, j = 0..n_intervals."""
        check_finite(t, "t")
        j = np.arange(n_intervals + 1, dtype=np.int64)
        two_n = 2 * n_intervals
        psi = np.zeros(n_intervals + 1, dtype=complex)
        for k, c in zip(self.modes, self.coeffs):
            num = (k % two_n) * j % two_n
            psi += (c * _phase_factor(k * k, t)) * sinpi_ratio(num, n_intervals)
        xs = np.pi * j / n_intervals
        return xs, (psi.real**2 + psi.imag**2)

    def time_lines(self, x: Angle) -> tuple[list[int], np.ndarray]:
        """Spectral lines of ``t -> |psi(x, t)|**2`` as ``sum_w B_w cos(w t)``."""
        _check_x(x)
        a = [c * sin_mul(k, x) for k, c in zip(self.modes, self.coeffs)]
        e = self.energies
        lines: dict[int, float] = {0: 0.0}
        for i in range(len(a)):
            lines[0] += a[i] * a[i]
            for j in range(i + 1, len(a)):
                w = e[j] - e[i]
                lines[w] = lines.get(w, 0.0) + 2.0 * a[i] * a[j]
        omegas = sorted(lines)
        return omegas, np.array([lines[w] for w in omegas])

    def time_section(self, x: Angle, n_intervals: int) -> tuple[np.ndarray, np.ndarray]:
        """|psi(x, t)|**2 on one period, ``t_j = T j / n_intervals``."""
        omegas, amps = self.time_lines(x)
        g = self.frequency_gcd()
        return sample_lines(omegas, amps, g, n_intervals, kind="cos")

    def position_lines(self, nodes_per_panel: int = 20) -> tuple[list[int], np.ndarray]:
        """Lines of ``<x>(t) = sum_w B_w cos(w t)`` from quadrature of x |psi|**2."""
        X = position_moments(self.modes, nodes_per_panel)
        c = np.asarray(self.coeffs)
        e = self.energies
        lines: dict[int, float] = {0: 0.0}
        for i in range(len(c)):
            lines[0] += c[i] * c[i] * X[i, i]
            for j in range(i + 1, len(c)):
                w = e[j] - e[i]
                lines[w] = lines.get(w, 0.0) + 2.0 * c[i] * c[j] * X[i, j]
        omegas = sorted(lines)
        return omegas, np.array([lines[w] for w in omegas])


def position_moments(modes: Sequence[int], nodes_per_panel: int = 20) -> np.ndarray:
    """Matrix ``X[i, j] = int_0^pi x sin(k_i x) sin(k_j x) dx`` by quadrature.

    Composite Gauss-Legendre, one panel per half period of the fastest
    product term.  Sines are evaluated after long-double argument reduction
    so entries are accurate to ~1e-15 even for k ~ 1e4.
    """
    kmax = max(modes)
    n_panels = max(8, 2 * kmax)
    gx, gw = np.polynomial.legendre.leggauss(nodes_per_panel)
    width = math.pi / n_panels
    X = np.zeros((len(modes), len(modes)))
    chunk = max(1, 2**20 // nodes_per_panel)
    for start in range(0, n_panels, chunk):
        left = width * np.arange(start, min(start + chunk, n_panels))
        nodes = (left[:, None] + 0.5 * width * (gx[None, :] + 1.0)).ravel()
        weights = np.tile(0.5 * width * gw, len(left)) * nodes
        F = np.array([np.sin(reduce_phase_array(k, nodes)) for k in modes])
        X += (F * weights) @ F.T
    return X


def sample_lines(
    omegas: Sequence[int],
    amps: np.ndarray,
    g: int,
    n_intervals: int,
    kind: str = "cos",
    shift: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``sum_w B_w f(w t)`` on ``t_j = (2 pi / g) j / n_intervals``.

    Every ``w`` must be a multiple of ``g``; ``w t_j`` then reduces exactly
    to ``2 pi ((w/g) j mod n) / n``.  ``kind`` is ``"cos"`` or ``"sin"``.
    A nonzero ``shift`` returns the centred difference
    ``(F(t + shift) - F(t - shift)) / (2 shift)`` of the cosine series,
    computed line by line as ``-B_w sin(w t) sin(w shift) / shift`` to avoid
    cancellation.
    """
    j = np.arange(n_intervals + 1, dtype=np.int64)
    n = n_intervals
    live = sum(1 for b in amps if b != 0.0)
    if live > FFT_MIN_LINES:
        return (2.0 * math.pi / g) * j / n, _sample_lines_fft(omegas, amps, g, n, kind, shift)
    out = np.zeros(n + 1)
    for w, b in zip(omegas, amps):
        if b == 0.0:
            continue
        if w % g:
            raise ValueError(f"frequency {w} is not a multiple of {g}")
        m = (w // g) % n
        num = 2 * m * j % (2 * n)
        if shift:
            if w == 0:
                continue
            factor = -b * math.sin(reduce_phase(w, shift)) / shift
            out += factor * sinpi_ratio(num, n)
        elif kind == "cos":
            out += b * cospi_ratio(num, n)
        else:
            out += b * sinpi_ratio(num, n)
    ts = (2.0 * math.pi / g) * j / n
    return ts, out


#: above this many lines the grid sum is folded into a single FFT
FFT_MIN_LINES = 48


def _sample_lines_fft(omegas, amps, g: int, n: int, kind: str, shift: float) -> np.ndarray:
    # On the grid, exp(i w t_j) depends only on (w/g) mod n, so the whole
    # series is one inverse DFT of the folded line amplitudes.
    bins = np.zeros(n, dtype=complex)
    for w, b in zip(omegas, amps):
        if b == 0.0:
            continue
        if w % g:
            raise ValueError(f"frequency {w} is not a multiple of {g}")
        if shift:
            if w == 0:
                continue
            bins[(w // g) % n] += -b * math.sin(reduce_phase(w, shift)) / shift
        else:
            bins[(w // g) % n] += b
    vals = np.fft.ifft(bins) * n
    part = vals.real if (kind == "cos" and not shift) else vals.imag
    return np.append(part, part[0])


def psi_state(p: StateParams) -> SineState:
    return SineState.from_terms(zip(p.modes(), p.amplitudes()))


# ------------------------------------------------------------ operations

def eval_psi(p: StateParams, x: Angle, t: Angle, normalized: bool = True) -> complex:
    """Truncated state at (x, t).  ``normalized=False`` gives the bare sum."""
    _check_x(x)
    check_finite(t, "t")
    total = 0.0 + 0.0j
    for k, c in zip(p.modes(), p.amplitudes()):
        sx = sin_mul(k, x)
        if sx == 0.0:
            continue
        total += float(c) * sx * _phase_factor(k * k, t)
    return normalization(p) * total if normalized else total


def prob_density(p: StateParams, x: Angle, t: Angle) -> float:
    z = eval_psi(p, x, t)
    return z.real * z.real + z.imag * z.imag


def prob_density_grouped(p: StateParams, x: Angle, t: Angle) -> float:
    """Density from the diagonal-sum regrouping (index k = m + n, l = n).

    Only pairs with ``l <= M`` and ``k - l <= M`` enter, which makes this
    algebraically identical to :func:`prob_density`.
    """
    _check_x(x)
    check_finite(t, "t")
    q, M = p.q, p.M
    sines = [sin_mul(q**n, x) for n in range(M + 1)]
    total = 0.0
    for k in range(2 * M + 1):
        inner = 0.0
        for l in range(max(0, k - M), min(k, M) + 1):
            a, b = sines[l], sines[k - l]
            if a == 0.0 or b == 0.0:
                continue
            w = q ** (2 * l) - q ** (2 * (k - l))
            inner += a * b * (cos_mul(abs(w), t) if w else 1.0)
        total += float(q) ** (k * (p.s - 2.0)) * inner
    return normalization(p) ** 2 * total


def time_independent_part(p: StateParams, x: Angle) -> float:
    """Time average of the density, ``1/pi - (N**2/2) sum c_m**2 cos(2 q**m x)``."""
    _check_x(x)
    c2 = p.amplitudes() ** 2
    cos_terms = np.array([cos_mul(2 * k, x) for k in p.modes()])
    return 1.0 / math.pi - 0.5 * normalization(p) ** 2 * float(np.dot(c2, cos_terms))


def time_independent_dimension(s: float) -> float:
    """Graph dimension predicted for the time-independent part."""
    return max(2.0 * s - 2.0, 1.0)


@dataclass(frozen=True)
class SpectrumLine:
    c: int
    d: int
    omega: int


def spectrum(p: StateParams, max_omega: int = INT64_MAX) -> list[SpectrumLine]:
    """All Bohr frequencies ``(q**2-1)(q**(2(c-1)) + ... + q**(2(c-d)))``, c <= M.

    Computed with exact integers.  Frequencies beyond ``max_omega`` (the
    int64 range by default, which is what the grid samplers accept) raise
    ``OverflowError`` instead of being silently wrapped.
    """
    q2 = p.q * p.q
    lines = []
    for c in range(1, p.M + 1):
        for d in range(1, c + 1):
            omega = (q2 - 1) * sum(q2 ** (c - a) for a in range(1, d + 1))
            if omega > max_omega:
                raise OverflowError(
                    f"frequency omega_({c},{d}) = {omega} exceeds {max_omega}")
            lines.append(SpectrumLine(c, d, omega))
    lines.sort(key=lambda ln: (ln.omega, ln.c, ln.d))
    return lines


def fundamental_period(p: StateParams) -> float:
    return 2.0 * math.pi / (p.q * p.q - 1)


def _position_weights(p: StateParams) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, p.M + 1)
    q = float(p.q)
    pref = 8.0 * normalization(p) ** 2
    w = q ** (2 * k) - 1.0
    return pref * q ** (k * (p.s - 1.0)), w


def mean_position(p: StateParams, t: Angle) -> float:
    """<x>(t).  Only odd/even mode pairs couple, so odd q gives exactly pi/2."""
    check_finite(t, "t")
    if p.q % 2 == 1 or p.M == 0:
        return math.pi / 2
    a, w = _position_weights(p)
    cos_t = np.array([cos_mul(p.q ** (2 * k) - 1, t) for k in range(1, p.M + 1)])
    return math.pi / 2 - float(np.sum(a / w**2 * cos_t))


def mean_velocity(p: StateParams, t: Angle) -> float:
    """d<x>/dt, the term-by-term derivative of :func:`mean_position`."""
    check_finite(t, "t")
    if p.q % 2 == 1 or p.M == 0:
        return 0.0
    a, w = _position_weights(p)
    sin_t = np.array([sin_mul(p.q ** (2 * k) - 1, t) for k in range(1, p.M + 1)])
    return float(np.sum(a / w * sin_t))


def mean_velocity_bound(p: StateParams) -> float:
    """Absolute-convergence bound ``8 N**2 sum q**(k(s-1)) / (q**(2k) - 1)``."""
    if p.M == 0:
        return 0.0
    a, w = _position_weights(p)
    return float(np.sum(a / w))


def position_lines(p: StateParams) -> tuple[list[int], np.ndarray]:
    """Closed-form lines of <x>(t) - pi/2 for the lacunary state."""
    if p.q % 2 == 1 or p.M == 0:
        return [], np.zeros(0)
    a, w = _position_weights(p)
    omegas = [p.q ** (2 * k) - 1 for k in range(1, p.M + 1)]
    return omegas, -a / w**2


def velocity_section(p: StateParams, n_intervals: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean velocity on one fundamental period, exact grid phases."""
    g = p.q * p.q - 1
    if p.q % 2 == 1 or p.M == 0:
        ts = (2.0 * math.pi / g) * np.arange(n_intervals + 1) / n_intervals
        return ts, np.zeros(n_intervals + 1)
    a, w = _position_weights(p)
    omegas = [p.q ** (2 * k) - 1 for k in range(1, p.M + 1)]
    return sample_lines(omegas, a / w, g, n_intervals, kind="sin")


# --------------------------------------------------------------- variants

class Variant(str, Enum):
    PHI0 = "phi0"
    PHI1 = "phi1"
    PHI2 = "phi2"
    PHI3 = "phi3"


def variant_state(
    which: Variant | str,
    p: StateParams,
    sign: int = 1,
    seed: Optional[int] = None,
) -> SineState:
    """Perturbed lacunary states, each normalised to unit L2 norm.

    ``phi0`` shifts every mode ``q**n`` (n >= 1) to ``q**n + sign``; with a
    ``seed`` the signs are drawn independently per term instead.
    ``phi1`` replaces the n = 0 term by ``2**(s-2) sin(2x)``, ``phi2`` adds
    that term to the full state, ``phi3`` drops the n = 0 term.
    """
    which = Variant(which)
    q, s, M = p.q, p.s, p.M
    c = p.amplitudes()
    first = (2, 2.0 ** (s - 2.0))
    if which is Variant.PHI0:
        if M < 1:
            raise ValueError("phi0 needs M >= 1")
        if seed is not None:
            signs = np.random.default_rng(seed).choice([-1, 1], size=M)
        else:
            if sign not in (1, -1):
                raise ValueError(f"sign must be +1 or -1, got {sign!r}")
            signs = [sign] * M
        terms = [(q**n + int(signs[n - 1]), c[n]) for n in range(1, M + 1)]
    elif which is Variant.PHI1:
        terms = [first] + [(q**n, c[n]) for n in range(1, M + 1)]
    elif which is Variant.PHI2:
        terms = [first] + [(q**n, c[n]) for n in range(M + 1)]
    else:
        if M < 1:
            raise ValueError("phi3 needs M >= 1")
        terms = [(q**n, c[n]) for n in range(1, M + 1)]
    return SineState.from_terms(terms)


def eval_variant(
    which: Variant | str,
    p: StateParams,
    x: Angle,
    t: Angle,
    sign: int = 1,
    seed: Optional[int] = None,
) -> complex:
    return variant_state(which, p, sign=sign, seed=seed)(x, t)


# ----------------------------------------------------------- coefficients

def sine_coefficients(p: StateParams, n_max: int, n_intervals: Optional[int] = None) -> np.ndarray:
    """``a_n = (2/pi) int_0^pi sin(n x) psi(x, 0) dx`` for n = 1..n_max.

    Trapezoid rule on a uniform grid, which is exact for sine products as
    long as both frequencies stay below the number of intervals.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    need = max(n_max, p.q**p.M) + 1
    if n_intervals is None:
        n_intervals = 1 << (need - 1).bit_length()
    if n_intervals < need:
        raise ValueError(
            f"{n_intervals} intervals cannot resolve frequency {need - 1}; need at least {need}")
    j = np.arange(n_intervals + 1, dtype=np.int64)
    two_n = 2 * n_intervals
    psi = np.zeros(n_intervals + 1)
    norm = normalization(p)
    for k, c in zip(p.modes(), p.amplitudes()):
        psi += norm * c * sinpi_ratio((k % two_n) * j % two_n, n_intervals)
    h = math.pi / n_intervals
    out = np.empty(n_max)
    for n in range(1, n_max + 1):
        basis = sinpi_ratio((n % two_n) * j % two_n, n_intervals)
        out[n - 1] = (2.0 / math.pi) * h * float(np.dot(basis, psi))
    return out
