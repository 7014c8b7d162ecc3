"""Piecewise-linear function algebra for potential functions.

A :class:`PLFunction` is stored by its breakpoints ``xs`` and values ``vals``
together with the slopes used to the left of ``xs[0]`` and to the right of
``xs[-1]``. Potentials ``U(mu)(x) = sum w |y - x|`` of atomic measures are
convex members of this class (:class:`PotentialFn`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import config
from .errors import AsymptoticMismatch, NoConvexMinorant, NotAPotential
from .kernels import lower_hull
from .measure import Measure


def _union(*arrays: np.ndarray) -> np.ndarray:
    xs = np.sort(np.concatenate(arrays))
    if xs.size == 0:
        return xs
    return xs[np.concatenate(([True], np.diff(xs) >= config.MERGE_TOL))]


@dataclass(frozen=True)
class PLFunction:
    """Continuous piecewise-linear function with linear tails."""

    xs: np.ndarray
    vals: np.ndarray
    left_slope: float
    right_slope: float

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vals = np.asarray(self.vals, dtype=float)
        if xs.ndim != 1 or xs.shape != vals.shape or xs.size == 0:
            raise ValueError("need at least one breakpoint and matching values")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.isfinite(self.left_slope) and np.isfinite(self.right_slope)):
            raise ValueError("slopes must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vals", vals)
        object.__setattr__(self, "left_slope", float(self.left_slope))
        object.__setattr__(self, "right_slope", float(self.right_slope))

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        out = np.interp(k, self.xs, self.vals)
        left = k < self.xs[0]
        right = k > self.xs[-1]
        out = np.where(left, self.vals[0] + self.left_slope * (k - self.xs[0]), out)
        out = np.where(right, self.vals[-1] + self.right_slope * (k - self.xs[-1]), out)
        return out

    def slopes(self) -> np.ndarray:
        """All segment slopes, including both tails (length ``len(xs) + 1``)."""
        inner = np.diff(self.vals) / np.diff(self.xs)
        return np.concatenate(([self.left_slope], inner, [self.right_slope]))

    def is_convex(self, tol: float | None = None) -> bool:
        tol = config.tolerance() if tol is None else tol
        return bool(np.all(np.diff(self.slopes()) >= -tol))

    def on_grid(self, grid: np.ndarray) -> "PLFunction":
        """Same function re-expressed on a grid containing its breakpoints."""
        return PLFunction(grid, self(grid), self.left_slope, self.right_slope)

    def __add__(self, other: "PLFunction") -> "PLFunction":
        g = _union(self.xs, other.xs)
        return PLFunction(g, self(g) + other(g), self.left_slope + other.left_slope,
                          self.right_slope + other.right_slope)

    def __sub__(self, other: "PLFunction") -> "PLFunction":
        g = _union(self.xs, other.xs)
        return PLFunction(g, self(g) - other(g), self.left_slope - other.left_slope,
                          self.right_slope - other.right_slope)

    def to_csv(self) -> str:
        lines = ["x,value"] + [f"{x!r},{v!r}" for x, v in zip(self.xs.tolist(), self.vals.tolist())]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PotentialFn(PLFunction):
    """Convex piecewise-linear function (validated on construction)."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_convex():
            raise NotAPotential("slopes are not non-decreasing")


def potential_of(m: Measure) -> PotentialFn:
    """Exact potential ``x -> sum w |y - x|`` with kinks at the support."""
    if len(m) == 0:
        return PotentialFn(np.zeros(1), np.zeros(1), 0.0, 0.0)
    return PotentialFn(m.xs.copy(), m.potential_values(m.xs), -m.mass, m.mass)


def measure_of(u: PLFunction, tol: float | None = None) -> Measure:
    """Invert :func:`potential_of`: atoms at kinks with weight jump / 2."""
    tol = config.tolerance() if tol is None else tol
    scale = max(1.0, float(np.max(np.abs(u.vals))))
    if abs(u.left_slope + u.right_slope) > tol or u.right_slope < -tol:
        raise NotAPotential("tail slopes must be -m and +m with m >= 0")
    jumps = np.diff(u.slopes())
    if np.any(jumps < -tol):
        raise NotAPotential("function is not convex")
    m = 0.5 * (u.right_slope - u.left_slope)
    # outside the support U equals m |x - x*|, hence u(x0) + u(xn) = m (xn - x0)
    if abs(u.vals[0] + u.vals[-1] - m * (u.xs[-1] - u.xs[0])) > tol * scale:
        raise NotAPotential("affine asymptotes do not meet the potential identity")
    if u.xs.size == 1 and abs(u.vals[0]) > tol * scale:
        raise NotAPotential("single-kink potential must vanish at its kink")
    return Measure.from_signed(u.xs, 0.5 * jumps, tol).cleaned(config.NOISE_TOL * max(1.0, m))


def _envelope_indices(x: np.ndarray, y: np.ndarray, sl: float, sr: float) -> np.ndarray:
    """Vertex indices of the greatest convex minorant with tail slopes sl, sr."""
    n = x.size
    scale = 1e-13 * (1.0 + float(np.max(np.abs(y))) + max(abs(sl), abs(sr)) * float(np.max(np.abs(x))))
    # the left ray of slope sl touches the points minimizing y - sl x
    left_key = y - sl * x
    a = int(np.nonzero(left_key <= left_key.min() + scale)[0][-1])
    right_key = y - sr * x
    b = int(np.nonzero(right_key <= right_key.min() + scale)[0][0])
    if b < a:
        # only possible when sl and sr are (nearly) equal: the envelope is a line
        b = a
    if n == 1 or a == b:
        return np.asarray([a], dtype=np.intp)
    return lower_hull(np.ascontiguousarray(x), np.ascontiguousarray(y), a, b)


def lower_convex_envelope(f: PLFunction, tol: float | None = None) -> PLFunction:
    """Greatest convex function below ``f`` with the same tail slopes."""
    tol = config.tolerance() if tol is None else tol
    if f.left_slope > f.right_slope + tol:
        raise NoConvexMinorant(
            f"left slope {f.left_slope} exceeds right slope {f.right_slope}")
    sl = f.left_slope
    sr = max(f.right_slope, sl)
    idx = _envelope_indices(f.xs, f.vals, sl, sr)
    return PLFunction(f.xs[idx], f.vals[idx], sl, sr)


def _check_asymptotics(us: Sequence[PLFunction], tol: float) -> None:
    if not us:
        raise ValueError("need at least one function")
    ref = us[0]
    lo = min(float(u.xs[0]) for u in us)
    hi = max(float(u.xs[-1]) for u in us)
    for u in us[1:]:
        if abs(u.left_slope - ref.left_slope) > tol or abs(u.right_slope - ref.right_slope) > tol:
            raise AsymptoticMismatch("tail slopes differ (masses differ)")
        if abs(float(u(lo) - ref(lo))) > tol or abs(float(u(hi) - ref(hi))) > tol:
            raise AsymptoticMismatch("affine asymptotes differ (first moments differ)")


def _with_crossings(us: Sequence[PLFunction]) -> np.ndarray:
    """Merged breakpoints plus every pairwise crossing inside each segment."""
    g = _union(*[u.xs for u in us])
    vals = np.vstack([u(g) for u in us])
    extra = []
    for i in range(len(us)):
        for j in range(i + 1, len(us)):
            d = vals[i] - vals[j]
            s = np.nonzero(d[:-1] * d[1:] < 0)[0]
            if s.size:
                t = d[s] / (d[s] - d[s + 1])
                extra.append(g[s] + t * (g[s + 1] - g[s]))
    if extra:
        g = _union(g, *extra)
    return g


def pointwise_sup(us: Sequence[PLFunction], tol: float | None = None) -> PotentialFn:
    """Exact pointwise maximum of convex PL functions sharing asymptotes."""
    tol = config.tolerance() if tol is None else tol
    _check_asymptotics(us, tol)
    g = _with_crossings(us)
    vals = np.max(np.vstack([u(g) for u in us]), axis=0)
    return PotentialFn(g, vals, us[0].left_slope, us[0].right_slope)


def pointwise_inf_then_envelope(us: Sequence[PLFunction], tol: float | None = None) -> PotentialFn:
    """Lower convex envelope of the pointwise minimum."""
    tol = config.tolerance() if tol is None else tol
    _check_asymptotics(us, tol)
    g = _with_crossings(us)
    vals = np.min(np.vstack([u(g) for u in us]), axis=0)
    env = lower_convex_envelope(PLFunction(g, vals, us[0].left_slope, us[0].right_slope), tol)
    return PotentialFn(env.xs, env.vals, env.left_slope, env.right_slope)


def csup(measures: Sequence[Measure]) -> Measure:
    """Convex supremum: the measure whose potential is the pointwise sup."""
    return measure_of(pointwise_sup([potential_of(m) for m in measures]))


def cinf(measures: Sequence[Measure]) -> Measure:
    """Convex infimum: the measure whose potential is conv(inf of potentials)."""
    return measure_of(pointwise_inf_then_envelope([potential_of(m) for m in measures]))
