"""Finite atomic measures on the real line and their order relations.

A :class:`Measure` is an immutable pair of arrays ``(xs, ws)`` with strictly
increasing positions and positive weights. All comparisons use the global
absolute tolerance from :mod:`shadowmart.config`.
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence

import numpy as np

from . import config
from .errors import MassMismatch, NotASubmeasure, QuantileOutOfRange


def _merge_sorted(xs: np.ndarray, ws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge atoms of sorted arrays whose positions differ by < MERGE_TOL."""
    if xs.size < 2:
        return xs, ws
    gaps = np.diff(xs)
    if np.all(gaps >= config.MERGE_TOL):
        return xs, ws
    group = np.concatenate(([0], np.cumsum(gaps >= config.MERGE_TOL)))
    n = int(group[-1]) + 1
    w = np.zeros(n)
    np.add.at(w, group, ws)
    # keep the first position of each group so merged supports are stable
    first = np.concatenate(([True], gaps >= config.MERGE_TOL))
    return xs[first], w


class Measure:
    """Finite nonnegative atomic measure with sorted, distinct positions."""

    __slots__ = ("_xs", "_ws")

    def __init__(self, xs: Iterable[float] = (), ws: Iterable[float] = ()):
        x = np.asarray(list(xs) if not isinstance(xs, np.ndarray) else xs, dtype=float).ravel()
        w = np.asarray(list(ws) if not isinstance(ws, np.ndarray) else ws, dtype=float).ravel()
        if x.shape != w.shape:
            raise ValueError("positions and weights must have the same length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise ValueError("positions and weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        order = np.argsort(x, kind="stable")
        x, w = _merge_sorted(x[order], w[order])
        keep = w > 0
        self._xs = x[keep]
        self._ws = w[keep]
        self._xs.flags.writeable = False
        self._ws.flags.writeable = False

    @classmethod
    def _raw(cls, xs: np.ndarray, ws: np.ndarray) -> "Measure":
        """Build from already sorted, merged, positive arrays without checks."""
        m = cls.__new__(cls)
        m._xs = np.ascontiguousarray(xs, dtype=float)
        m._ws = np.ascontiguousarray(ws, dtype=float)
        m._xs.flags.writeable = False
        m._ws.flags.writeable = False
        return m

    @classmethod
    def dirac(cls, x: float, w: float = 1.0) -> "Measure":
        return cls([x], [w])

    @classmethod
    def zero(cls) -> "Measure":
        return cls()

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "Measure":
        pairs = list(atoms)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @classmethod
    def from_signed(cls, xs: np.ndarray, ws: np.ndarray, tol: float | None = None) -> "Measure":
        """Build from sorted merged arrays that may carry rounding noise.

        Weights in ``(-tol, 0]`` are dropped; anything below ``-tol`` raises
        :class:`NotASubmeasure`.
        """
        tol = config.tolerance() if tol is None else tol
        ws = np.asarray(ws, dtype=float)
        if ws.size and ws.min() < -tol:
            i = int(np.argmin(ws))
            raise NotASubmeasure(f"weight {ws[i]:.3e} at x={xs[i]:.6g} is below -{tol:g}")
        keep = ws > 0
        return cls._raw(np.asarray(xs, dtype=float)[keep], ws[keep])

    # basic accessors
    @property
    def xs(self) -> np.ndarray:
        return self._xs

    @property
    def ws(self) -> np.ndarray:
        return self._ws

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self._xs.tolist(), self._ws.tolist()))

    def __len__(self) -> int:
        return int(self._xs.size)

    def __repr__(self) -> str:
        body = ", ".join(f"{w:.6g}@{x:.6g}" for x, w in self.atoms[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"Measure([{body}{more}])"

    def __add__(self, other: "Measure") -> "Measure":
        return add(self, other)

    def __sub__(self, other: "Measure") -> "Measure":
        return subtract(self, other)

    def __mul__(self, c: float) -> "Measure":
        return scale(self, c)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Measure):
            return NotImplemented
        return equal(self, other)

    __hash__ = None  # type: ignore[assignment]

    @property
    def mass(self) -> float:
        return float(self._ws.sum())

    @property
    def first_moment(self) -> float:
        return float(self._ws @ self._xs)

    @property
    def barycenter(self) -> float:
        m = self.mass
        if m <= 0:
            raise ValueError("barycenter of the zero measure is undefined")
        return self.first_moment / m

    def support(self, threshold: float | None = None) -> np.ndarray:
        """Positions whose weight exceeds ``threshold`` (default: tolerance)."""
        thr = config.tolerance() if threshold is None else threshold
        return self._xs[self._ws > thr]

    def cleaned(self, threshold: float | None = None) -> "Measure":
        """Drop atoms whose weight is at most ``threshold``."""
        thr = config.tolerance() if threshold is None else threshold
        keep = self._ws > thr
        return Measure._raw(self._xs[keep], self._ws[keep])

    def normalized(self) -> "Measure":
        return scale(self, 1.0 / self.mass)

    def weight_at(self, x: float) -> float:
        i = np.searchsorted(self._xs, x - config.MERGE_TOL)
        if i < self._xs.size and abs(self._xs[i] - x) < config.MERGE_TOL:
            return float(self._ws[i])
        return 0.0

    def integrate(self, f) -> float:
        """Integral of a vectorized function against the measure."""
        if len(self) == 0:
            return 0.0
        return float(self._ws @ np.asarray(f(self._xs), dtype=float))

    # potential-type transforms, vectorized over k
    def _split_sums(self, ks: np.ndarray):
        cw = np.concatenate(([0.0], np.cumsum(self._ws)))
        cm = np.concatenate(([0.0], np.cumsum(self._ws * self._xs)))
        idx = np.searchsorted(self._xs, ks, side="right")
        return cw[idx], cm[idx], cw[-1], cm[-1]

    def potential_values(self, ks) -> np.ndarray:
        """U(k) = sum_i w_i |x_i - k| evaluated at every k."""
        k = np.asarray(ks, dtype=float)
        lw, lm, tw, tm = self._split_sums(k)
        return (k * lw - lm) + ((tm - lm) - k * (tw - lw))

    def call_values(self, ks) -> np.ndarray:
        """Integral of (y - k)^+ at every k."""
        k = np.asarray(ks, dtype=float)
        lw, lm, tw, tm = self._split_sums(k)
        return (tm - lm) - k * (tw - lw)

    def put_values(self, ks) -> np.ndarray:
        """Integral of (k - y)^+ at every k."""
        k = np.asarray(ks, dtype=float)
        lw, lm, _, _ = self._split_sums(k)
        return k * lw - lm

    def cdf(self, x: float) -> float:
        return cdf(self, x)

    def quantile(self, alpha: float) -> float:
        return quantile(self, alpha)

    def to_dict(self) -> dict:
        return {"atoms": [{"x": x, "w": w} for x, w in self.atoms]}

    @classmethod
    def from_dict(cls, d: dict) -> "Measure":
        if not isinstance(d, dict) or "atoms" not in d:
            raise ValueError("measure JSON needs an 'atoms' list")
        atoms = d["atoms"]
        if not isinstance(atoms, list):
            raise ValueError("'atoms' must be a list")
        xs, ws = [], []
        for a in atoms:
            if not isinstance(a, dict) or "x" not in a or "w" not in a:
                raise ValueError("each atom needs numeric 'x' and 'w'")
            xs.append(float(a["x"]))
            ws.append(float(a["w"]))
        return cls(xs, ws)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Measure":
        return cls.from_dict(json.loads(text))


def merged_grid(*measures: Measure) -> np.ndarray:
    """Sorted union of supports, with near-equal positions merged."""
    if not measures:
        return np.empty(0)
    xs = np.concatenate([m.xs for m in measures])
    if xs.size == 0:
        return xs
    xs = np.sort(xs)
    keep = np.concatenate(([True], np.diff(xs) >= config.MERGE_TOL))
    return xs[keep]


def weights_on(m: Measure, grid: np.ndarray) -> np.ndarray:
    """Weights of ``m`` on a grid that contains its support (up to merging)."""
    out = np.zeros(grid.size)
    if len(m) == 0:
        return out
    idx = np.searchsorted(grid, m.xs - config.MERGE_TOL)
    np.minimum(idx, grid.size - 1, out=idx)
    if np.any(np.abs(grid[idx] - m.xs) >= config.MERGE_TOL):
        raise ValueError("grid does not contain the support")
    # support points are MERGE_TOL apart, so indices are distinct
    out[idx] = m.ws
    return out


def grid_transforms(w: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Call and put transforms of grid weights ``w`` evaluated on the grid itself."""
    cw = np.cumsum(w)
    cm = np.cumsum(w * g)
    tw, tm = cw[-1], cm[-1]
    # strictly-below sums at each grid point
    lw = cw - w
    lm = cm - w * g
    calls = (tm - cm) - g * (tw - cw)
    puts = g * lw - lm
    return calls, puts


def aligned(a: Measure, b: Measure) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the merged support and both weight vectors on it."""
    g = merged_grid(a, b)
    return g, weights_on(a, g), weights_on(b, g)


def mass(m: Measure) -> float:
    return m.mass


def first_moment(m: Measure) -> float:
    return m.first_moment


def barycenter(m: Measure) -> float:
    """Normalized barycenter; raises for the zero measure."""
    return m.barycenter


def add(a: Measure, b: Measure) -> Measure:
    g, wa, wb = aligned(a, b)
    return Measure._raw(g, wa + wb) if g.size else Measure.zero()


def scale(m: Measure, c: float) -> Measure:
    if c < 0:
        raise ValueError("scale factor must be nonnegative")
    if c == 0 or len(m) == 0:
        return Measure.zero()
    return Measure._raw(m.xs.copy(), m.ws * float(c))


def subtract(a: Measure, b: Measure, tol: float | None = None) -> Measure:
    """Atomwise ``a - b``; weights in (-tol, 0) are clamped to 0."""
    g, wa, wb = aligned(a, b)
    return Measure.from_signed(g, wa - wb, tol)


def linear_combination(coeffs: Sequence[float], measures: Sequence[Measure]) -> Measure:
    """Signed combination; result must be nonnegative within tolerance."""
    g = merged_grid(*measures)
    w = np.zeros(g.size)
    for c, m in zip(coeffs, measures):
        w += c * weights_on(m, g)
    return Measure.from_signed(g, w)


def max_abs_diff(a: Measure, b: Measure) -> float:
    """Largest atomwise weight difference on the merged support."""
    g, wa, wb = aligned(a, b)
    return float(np.max(np.abs(wa - wb))) if g.size else 0.0


def equal(a: Measure, b: Measure, tol: float | None = None) -> bool:
    tol = config.tolerance() if tol is None else tol
    return max_abs_diff(a, b) <= tol


def cdf(m: Measure, x: float) -> float:
    i = np.searchsorted(m.xs, x, side="right")
    return float(m.ws[:i].sum())


def quantile(m: Measure, alpha: float) -> float:
    """Generalized inverse ``inf{x : F(x) >= alpha}`` for 0 < alpha <= mass."""
    tol = config.tolerance()
    total = m.mass
    if not (0 < alpha <= total + tol):
        raise QuantileOutOfRange(f"level {alpha} outside (0, {total}]")
    cw = np.cumsum(m.ws)
    # tolerate rounding in the cumulative sums
    i = int(np.searchsorted(cw, alpha - 1e-14 * max(1.0, total), side="left"))
    return float(m.xs[min(i, len(m) - 1)])


def restrict(m: Measure, lo: float = -np.inf, hi: float = np.inf, closed: bool = False) -> Measure:
    """Restriction to the open interval (lo, hi), or the closed one."""
    if closed:
        keep = (m.xs >= lo) & (m.xs <= hi)
    else:
        keep = (m.xs > lo) & (m.xs < hi)
    return Measure._raw(m.xs[keep], m.ws[keep])


def check_positive_order(nu: Measure, mu: Measure, tol: float | None = None) -> bool:
    """True iff ``nu`` is atomwise dominated by ``mu``."""
    tol = config.tolerance() if tol is None else tol
    g, wn, wm = aligned(nu, mu)
    return bool(np.all(wn <= wm + tol))


def check_convex_order(nu: Measure, mu: Measure, tol: float | None = None) -> bool:
    """True iff ``nu <=_c mu``: equal mass and mean, dominated potential."""
    tol = config.tolerance() if tol is None else tol
    if abs(nu.mass - mu.mass) > tol or abs(nu.first_moment - mu.first_moment) > tol:
        return False
    g = merged_grid(nu, mu)
    return bool(np.all(nu.potential_values(g) <= mu.potential_values(g) + tol))


def check_cs_order(nu: Measure, mu: Measure, tol: float | None = None) -> bool:
    """True iff ``nu`` is below ``mu`` for increasing convex test functions."""
    tol = config.tolerance() if tol is None else tol
    if abs(nu.mass - mu.mass) > tol:
        return False
    if nu.first_moment > mu.first_moment + tol:
        return False
    g = merged_grid(nu, mu)
    return bool(np.all(nu.call_values(g) <= mu.call_values(g) + tol))


def check_c_plus_order(nu: Measure, mu: Measure, tol: float | None = None) -> bool:
    """True iff ``nu`` is below ``mu`` for nonnegative convex test functions."""
    tol = config.tolerance() if tol is None else tol
    if nu.mass > mu.mass + tol:
        return False
    g = merged_grid(nu, mu)
    if g.size == 0:
        return True
    return bool(
        np.all(nu.call_values(g) <= mu.call_values(g) + tol)
        and np.all(nu.put_values(g) <= mu.put_values(g) + tol)
    )


def w1_distance(a: Measure, b: Measure, tol: float | None = None) -> float:
    """Wasserstein-1 distance between measures of equal mass."""
    tol = config.tolerance() if tol is None else tol
    if abs(a.mass - b.mass) > tol:
        raise MassMismatch(f"masses differ: {a.mass} vs {b.mass}")
    g, wa, wb = aligned(a, b)
    if g.size < 2:
        return 0.0
    diff = np.cumsum(wa - wb)[:-1]
    return float(np.abs(diff) @ np.diff(g))
