"""Box-counting dimension of sampled graphs.

Estimators:

* grid box counting of the piecewise-linear interpolant,
* delta-oscillation / delta-variation (Tricot), with sliding extrema from a
  monotone-deque scan so each scale costs O(n),
* the two-sided shift functional ``int |f(x+d) - f(x-d)| dx`` that gives a
  lower bound on the variation.

Scaling exponents come from least-squares fits of log-log ladders with
residual-based trimming of the end points.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

#: relative slack when converting a window length into a sample count
_SNAP = 1e-9
#: minimum number of ladder points a fit may be trimmed to
MIN_FIT_POINTS = 4


class DegenerateGraphError(ValueError):
    """Raised for constant graphs where the variation method has no exponent."""


class ResolutionError(ValueError):
    """Raised when a scale is below what the sampling can resolve."""


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """Samples of f on a uniform grid covering [a, b]."""

    a: float
    b: float
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be 1-D arrays of equal length")
        if len(xs) < 2:
            raise ValueError("need at least two samples")
        if not self.b > self.a:
            raise ValueError("need b > a")
        if not np.all(np.isfinite(ys)):
            raise ValueError("ys must be finite")
        steps = np.diff(xs)
        h = (self.b - self.a) / (len(xs) - 1)
        if np.any(steps <= 0) or np.max(np.abs(steps - h)) > 1e-12 * max(1.0, abs(self.b), abs(self.a)):
            raise ValueError("xs must be uniformly spaced and increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def uniform(cls, a: float, b: float, ys) -> "SampledGraph":
        ys = np.asarray(ys, dtype=float)
        xs = np.linspace(a, b, len(ys))
        return cls(a, b, xs, ys)

    @classmethod
    def from_function(cls, f, a: float, b: float, n_samples: int) -> "SampledGraph":
        xs = np.linspace(a, b, n_samples)
        return cls(a, b, xs, f(xs))

    @property
    def spacing(self) -> float:
        return (self.b - self.a) / (len(self.xs) - 1)

    def __len__(self):
        return len(self.xs)

    def scaled(self, factor: float, offset: float = 0.0) -> "SampledGraph":
        return SampledGraph(self.a, self.b, self.xs, factor * self.ys + offset)

    def is_constant(self) -> bool:
        return bool(np.all(self.ys == self.ys[0]))


@dataclass(frozen=True)
class DeltaLadder:
    """Scales ``base**-n`` for n = n_min..n_max."""

    base: float
    n_min: int
    n_max: int

    def __post_init__(self):
        if not self.base > 1:
            raise ValueError("ladder base must exceed 1")
        if self.n_max <= self.n_min:
            raise ValueError("need n_max > n_min")

    @property
    def exponents(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def deltas(self) -> np.ndarray:
        return float(self.base) ** (-self.exponents.astype(float))

    def __len__(self):
        return self.n_max - self.n_min + 1

    def validate(self, g: SampledGraph, samples_per_delta: float = 8.0) -> None:
        """Largest scale below half the domain; smallest spans enough samples."""
        d = self.deltas
        if d.max() >= (g.b - g.a) / 2:
            raise ResolutionError(
                f"largest delta {d.max():g} not below half the domain {(g.b - g.a) / 2:g}")
        if d.min() < samples_per_delta * g.spacing * (1 - _SNAP):
            raise ResolutionError(
                f"smallest delta {d.min():g} needs spacing <= {d.min() / samples_per_delta:g}, "
                f"graph has {g.spacing:g}")


@dataclass
class ScalingFit:
    """Least-squares line through a log-log ladder."""

    slope: float
    intercept: float
    dimension: float
    r_squared: float
    window: tuple[int, int]
    residuals: np.ndarray
    deltas: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    out_of_range: bool = False
    degenerate: bool = False

    def table(self) -> list[dict]:
        return [{"delta": float(d), "value": float(v)} for d, v in zip(self.deltas, self.values)]


@dataclass(frozen=True)
class SectionDims:
    """Per-axis suprema of section dimensions (lower estimates of the sup)."""

    sups: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.sups)


# ------------------------------------------------------------ sliding range

@njit(cache=True)
def _sliding_range(ys, left, right):
    n = ys.shape[0]
    out = np.empty(n)
    qmax = np.empty(n, dtype=np.int64)
    qmin = np.empty(n, dtype=np.int64)
    hmax = tmax = 0
    hmin = tmin = 0
    nxt = 0
    for i in range(n):
        hi = min(i + right, n - 1)
        while nxt <= hi:
            v = ys[nxt]
            while tmax > hmax and ys[qmax[tmax - 1]] <= v:
                tmax -= 1
            qmax[tmax] = nxt
            tmax += 1
            while tmin > hmin and ys[qmin[tmin - 1]] >= v:
                tmin -= 1
            qmin[tmin] = nxt
            tmin += 1
            nxt += 1
        lo = i - left
        while qmax[hmax] < lo:
            hmax += 1
        while qmin[hmin] < lo:
            hmin += 1
        out[i] = ys[qmax[hmax]] - ys[qmin[hmin]]
    return out


def sliding_range(ys: np.ndarray, left: int, right: int | None = None) -> np.ndarray:
    """``max - min`` of ``ys[i-left : i+right+1]`` (clipped) for every i.

    Monotone deques of indices for the running max and min; each sample is
    pushed and popped at most once.
    """
    if right is None:
        right = left
    if left < 0 or right < 0:
        raise ValueError("window extents must be non-negative")
    return _sliding_range(np.ascontiguousarray(ys, dtype=np.float64), int(left), int(right))


def _window_samples(g: SampledGraph, delta: float) -> int:
    if not delta > 0:
        raise ValueError("delta must be positive")
    return int(math.floor(delta / g.spacing * (1 + _SNAP)))


# ---------------------------------------------------------------- counting

def box_count(g: SampledGraph, delta: float) -> int:
    """Number of delta-grid squares met by the piecewise-linear interpolant.

    The grid is anchored at the origin.  Columns are those overlapping
    (a, b) in their interior; inside a column the interpolant spans
    ``[lo, hi]`` and meets ``floor(hi/d) - floor(lo/d) + 1`` rows.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if delta < 2 * g.spacing * (1 - _SNAP):
        raise ResolutionError(f"delta {delta:g} below twice the sample spacing {g.spacing:g}")
    xs, ys = g.xs, g.ys
    c_lo = math.floor(g.a / delta + _SNAP)
    c_hi = math.ceil(g.b / delta - _SNAP) - 1
    edges = delta * np.arange(c_lo, c_hi + 2, dtype=float)
    edges[0] = max(edges[0], g.a)
    edges[-1] = min(edges[-1], g.b)
    edge_y = np.interp(edges, xs, ys)
    col = np.floor(xs / delta).astype(np.int64) - c_lo
    col = np.clip(col, 0, c_hi - c_lo)
    n_cols = c_hi - c_lo + 1
    lo = np.minimum(edge_y[:-1], edge_y[1:])
    hi = np.maximum(edge_y[:-1], edge_y[1:])
    # xs is sorted, so each column is a contiguous run of samples
    starts = np.searchsorted(col, np.arange(n_cols), side="left")
    occupied = starts < np.searchsorted(col, np.arange(n_cols), side="right")
    if occupied.any():
        idx = starts[occupied]
        lo[occupied] = np.minimum(lo[occupied], np.minimum.reduceat(ys, idx))
        hi[occupied] = np.maximum(hi[occupied], np.maximum.reduceat(ys, idx))
    rows = np.floor(hi / delta) - np.floor(lo / delta) + 1
    return int(rows.sum())


def oscillation(g: SampledGraph, x: float, delta: float) -> float:
    """Sample range of f over ``[x - delta, x + delta]`` clipped to [a, b]."""
    if not (g.a <= x <= g.b):
        raise ValueError(f"x={x} outside [{g.a}, {g.b}]")
    if not delta > 0:
        raise ValueError("delta must be positive")
    tol = _SNAP * max(delta, g.spacing)
    mask = np.abs(g.xs - x) <= delta + tol
    if mask.sum() < 2:
        raise ResolutionError(f"window around x={x} with delta={delta:g} holds fewer than 2 samples")
    window = g.ys[mask]
    return float(window.max() - window.min())


def oscillation_profile(g: SampledGraph, delta: float) -> np.ndarray:
    """osc_delta at every sample point."""
    w = _window_samples(g, delta)
    if w < 1:
        raise ResolutionError(f"delta {delta:g} below the sample spacing {g.spacing:g}")
    return sliding_range(g.ys, w)


def variation(g: SampledGraph, delta: float) -> float:
    """``Var_delta(f) = int_a^b osc_delta(x) dx`` by the trapezoid rule.

    Windows are snapped down to whole samples, so the effective scale is
    :func:`effective_delta`.
    """
    osc = oscillation_profile(g, delta)
    return float(np.trapezoid(osc, dx=g.spacing))


def effective_delta(g: SampledGraph, delta: float) -> float:
    return _window_samples(g, delta) * g.spacing


def shift_lower_functional(g: SampledGraph, delta: float) -> float:
    """``int |f(x + delta) - f(x - delta)| dx`` over ``[a + delta, b - delta]``.

    Shifts are snapped down to whole samples like the variation windows,
    which keeps the functional below ``variation(g, 2*delta)``.
    """
    w = _window_samples(g, delta)
    if w < 1:
        raise ResolutionError(f"delta {delta:g} below the sample spacing {g.spacing:g}")
    n = len(g.ys)
    if 2 * w >= n:
        raise ResolutionError(f"delta {delta:g} leaves no interior")
    diff = np.abs(g.ys[2 * w:] - g.ys[: n - 2 * w])
    return float(np.trapezoid(diff, dx=g.spacing))


# ------------------------------------------------------------------ fitting

def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, np.ndarray, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), resid, max(0.0, min(1.0, r2))


def trimmed_loglog_fit(log_x: np.ndarray, log_y: np.ndarray, min_points: int = MIN_FIT_POINTS):
    """Fit a line, then drop end points whose residual exceeds 3x the interior RMS.

    One end point is removed per round (the worse of the two) and the line
    refitted, never going below ``min_points``.  Returns
    ``(slope, intercept, residuals, r2, (lo, hi))`` with ``hi`` exclusive.
    """
    log_x = np.asarray(log_x, dtype=float)
    log_y = np.asarray(log_y, dtype=float)
    if len(log_x) < min_points:
        raise ValueError(f"need at least {min_points} ladder points, got {len(log_x)}")
    lo, hi = 0, len(log_x)
    while True:
        slope, icpt, resid, r2 = _linfit(log_x[lo:hi], log_y[lo:hi])
        if hi - lo <= min_points:
            break
        interior = resid[1:-1]
        rms = math.sqrt(float(np.mean(interior**2)))
        first, last = abs(resid[0]), abs(resid[-1])
        limit = max(3.0 * rms, 1e-9)
        if max(first, last) <= limit:
            break
        if first >= last:
            lo += 1
        else:
            hi -= 1
    return slope, icpt, resid, r2, (lo, hi)


def _make_fit(deltas, values, log_x, log_y, dimension_of_slope) -> ScalingFit:
    slope, icpt, resid, r2, window = trimmed_loglog_fit(log_x, log_y)
    dim = dimension_of_slope(slope)
    fit = ScalingFit(slope, icpt, dim, r2, window, resid, np.asarray(deltas), np.asarray(values))
    if not (1.0 - 0.05 <= dim <= 2.0 + 0.05):
        fit.out_of_range = True
        warnings.warn(f"fitted dimension {dim:.4f} outside [1, 2]", RuntimeWarning, stacklevel=3)
    return fit


def variation_ladder(g: SampledGraph, ladder: DeltaLadder) -> tuple[np.ndarray, np.ndarray]:
    """Effective scales and variations along the ladder."""
    ladder.validate(g)
    eff = np.array([effective_delta(g, d) for d in ladder.deltas])
    var = np.array([variation(g, d) for d in ladder.deltas])
    return eff, var


def fit_dimension_variation(g: SampledGraph, ladder: DeltaLadder) -> ScalingFit:
    """Dimension ``2 - slope`` of ``ln Var_delta`` against ``ln delta``."""
    if len(ladder) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} ladder points")
    if g.is_constant():
        raise DegenerateGraphError("variation of a constant graph vanishes at every scale")
    eff, var = variation_ladder(g, ladder)
    if np.any(var <= 0):
        raise DegenerateGraphError("variation vanishes at some ladder scale")
    return _make_fit(eff, var, np.log(eff), np.log(var), lambda k: 2.0 - k)


def fit_dimension_boxcount(g: SampledGraph, ladder: DeltaLadder) -> ScalingFit:
    """Dimension = slope of ``ln N(delta)`` against ``ln(1/delta)``."""
    if len(ladder) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} ladder points")
    ladder.validate(g)
    deltas = ladder.deltas
    counts = np.array([box_count(g, d) for d in deltas], dtype=float)
    if g.is_constant():
        n = len(deltas)
        return ScalingFit(1.0, 0.0, 1.0, 1.0, (0, n), np.zeros(n), deltas, counts, degenerate=True)
    return _make_fit(deltas, counts, np.log(1.0 / deltas), np.log(counts), lambda k: k)


def fit_dimension_shift(g: SampledGraph, ladder: DeltaLadder) -> ScalingFit:
    """Same fit as the variation method, applied to the shift functional."""
    ladder.validate(g)
    eff = np.array([effective_delta(g, d) for d in ladder.deltas])
    vals = np.array([shift_lower_functional(g, d) for d in ladder.deltas])
    if np.any(vals <= 0):
        raise DegenerateGraphError("shift functional vanishes at some ladder scale")
    return _make_fit(eff, vals, np.log(eff), np.log(vals), lambda k: 2.0 - k)


def sandwich_check(g: SampledGraph, delta: float) -> tuple[float, float]:
    """Ratios tying box counts to variations at one scale.

    ``ratio_lo = delta**2 N(delta) / Var_{sqrt(2) delta}`` is bounded above
    and ``ratio_hi = 16 delta**2 N(delta) / Var_delta`` is bounded below by
    1 through the sausage-area inequalities; across a ladder both should
    stay within delta-independent bounds.
    """
    if g.is_constant():
        raise DegenerateGraphError("sandwich ratios are undefined for a constant graph")
    n = box_count(g, delta)
    v1 = variation(g, delta)
    v2 = variation(g, math.sqrt(2.0) * delta)
    if v1 <= 0 or v2 <= 0:
        raise DegenerateGraphError("variation vanishes")
    return delta * delta * n / v2, 16.0 * delta * delta * n / v1


def section_dims(*axes: Sequence[ScalingFit]) -> SectionDims:
    for fits in axes:
        if len(fits) == 0:
            raise ValueError("every axis needs at least one section fit")
    return SectionDims(tuple(max(f.dimension for f in fits) for fits in axes))


def surface_dimension(sections_x: Sequence[ScalingFit], sections_t: Sequence[ScalingFit]) -> float:
    """``n - 1 + max_i sup(section dims along axis i)`` for a surface (n = 2).

    The sup over finitely many sampled sections can only underestimate the
    true supremum.
    """
    dims = section_dims(sections_x, sections_t)
    return dims.n - 1 + max(dims.sups)


def hardy_exponent(g: SampledGraph, ladder: DeltaLadder) -> ScalingFit:
    """Exponent of ``sup{|f(x) - f(y)| : |x - y| <= delta}`` against delta.

    ``dimension`` on the returned fit is ``2 - exponent``.
    """
    ladder.validate(g)
    eff, sup = [], []
    for d in ladder.deltas:
        w = _window_samples(g, d)
        eff.append(w * g.spacing)
        sup.append(float(sliding_range(g.ys, w, 0).max()))
    eff, sup = np.array(eff), np.array(sup)
    if np.any(sup <= 0):
        raise DegenerateGraphError("constant graph has no Hölder exponent")
    return _make_fit(eff, sup, np.log(eff), np.log(sup), lambda k: 2.0 - k)
