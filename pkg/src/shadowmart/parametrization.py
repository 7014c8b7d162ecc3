"""Parametrizations of an initial marginal: nested submeasures of mass alpha."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import config
from .errors import MassMismatch, NoSolution
from .measure import Measure, check_cs_order, linear_combination, scale, weights_on

KINDS = ("left_curtain", "sunset", "middle_curtain", "intervals", "explicit_grid", "right_curtain")

_JSON_KIND = {
    "left_curtain": "left-curtain",
    "sunset": "sunset",
    "middle_curtain": "middle-curtain",
    "intervals": "intervals",
    "explicit_grid": "grid",
    "right_curtain": "right-curtain",
}
_KIND_FROM_JSON = {v: k for k, v in _JSON_KIND.items()}


def _clip_alpha(mu0: Measure, alpha: float) -> float:
    tol = config.tolerance()
    total = mu0.mass
    if alpha < -tol or alpha > total + tol:
        raise ValueError(f"alpha={alpha} outside [0, {total}]")
    return min(max(float(alpha), 0.0), total)


def _quantile_cut(ws: np.ndarray, alpha: float) -> np.ndarray:
    """Weights of the lowest-mass-first restriction of total mass alpha."""
    cw = np.cumsum(ws)
    before = cw - ws
    return np.clip(alpha - before, 0.0, ws)


def left_curtain(mu0: Measure, alpha: float) -> Measure:
    """Restriction of ``mu0`` below its alpha-quantile plus a fractional atom."""
    a = _clip_alpha(mu0, alpha)
    if a >= mu0.mass:
        return mu0
    return Measure.from_signed(mu0.xs, _quantile_cut(mu0.ws, a))


def right_curtain(mu0: Measure, alpha: float) -> Measure:
    """Restriction above the (1 - alpha)-quantile (mirror of the left curtain)."""
    a = _clip_alpha(mu0, alpha)
    if a >= mu0.mass:
        return mu0
    return Measure.from_signed(mu0.xs, _quantile_cut(mu0.ws[::-1], a)[::-1])


def sunset(mu0: Measure, alpha: float) -> Measure:
    """Proportional submeasure ``alpha * mu0``."""
    a = _clip_alpha(mu0, alpha)
    return scale(mu0, a / mu0.mass) if mu0.mass > 0 else Measure.zero()


def _middle_fractions(xs: np.ndarray, ws: np.ndarray, alpha: float, mean: float):
    """Search atom pairs (i, j) for boundary fractions solving mass and moment.

    Returns ``(i, j, c, c2)`` for the feasible pair with the shortest interval.
    """
    tol = config.tolerance()
    n = xs.size
    cw = np.concatenate(([0.0], np.cumsum(ws)))
    cm = np.concatenate(([0.0], np.cumsum(ws * xs)))
    best = None
    target_m = alpha * mean
    # a single atom at the mean
    for i in range(n):
        if abs(xs[i] - mean) <= 1e-12 * max(1.0, abs(mean)) and alpha <= ws[i] * (1 + 1e-13):
            return i, i, min(alpha, ws[i]), 0.0
    # exactly feasible pairs win (shortest interval first); tolerance only
    # rescues pairs that miss by rounding, preferring the smallest miss
    strict = 1e-13 * max(1.0, float(cw[-1]))
    loose = None
    for gap in range(1, n):
        i = np.arange(0, n - gap)
        j = i + gap
        m_in = cw[j] - cw[i + 1]
        s_in = cm[j] - cm[i + 1]
        rest_m = alpha - m_in
        rest_s = target_m - s_in
        c2 = (rest_s - rest_m * xs[i]) / (xs[j] - xs[i])
        c1 = rest_m - c2
        miss = np.max(np.vstack((-c1, c1 - ws[i], -c2, c2 - ws[j], np.zeros_like(c1))), axis=0)
        for h in np.nonzero(miss <= strict)[0]:
            length = xs[j[h]] - xs[i[h]]
            if best is None or length < best[0] - 1e-15:
                best = (length, int(i[h]), int(j[h]), float(c1[h]), float(c2[h]))
        h = int(np.argmin(miss))
        if miss[h] <= tol and (loose is None or miss[h] < loose[0]):
            loose = (float(miss[h]), int(i[h]), int(j[h]), float(c1[h]), float(c2[h]))
    if best is None:
        best = loose
    if best is None:
        raise NoSolution(f"no middle-curtain solution at alpha={alpha}")
    _, i, j, c1, c2 = best
    return i, j, c1, c2


def middle_curtain(mu0: Measure, alpha: float) -> Measure:
    """Mass-alpha restriction of ``mu0`` to a central interval, preserving the mean."""
    a = _clip_alpha(mu0, alpha)
    if a == 0.0:
        return Measure.zero()
    if a >= mu0.mass:
        return mu0
    xs, ws = mu0.xs, mu0.ws
    mean = mu0.first_moment / mu0.mass
    i, j, c1, c2 = _middle_fractions(xs, ws, a, mean)
    w = np.zeros(xs.size)
    if i == j:
        w[i] = c1
    else:
        w[i + 1:j] = ws[i + 1:j]
        w[i] = min(max(c1, 0.0), ws[i])
        w[j] = min(max(c2, 0.0), ws[j])
    return Measure.from_signed(xs, w)


def restrict_to_interval(mu0: Measure, lo: float, hi: float, alpha: float) -> Measure:
    """Restriction of ``mu0`` to [lo, hi] with boundary atoms cut to mass alpha.

    The interior (lo, hi) is kept whole; the remainder is taken from the
    boundary atoms in proportion to their weights.
    """
    tol = config.tolerance()
    xs, ws = mu0.xs, mu0.ws
    inner = (xs > lo + config.MERGE_TOL) & (xs < hi - config.MERGE_TOL)
    at_lo = np.abs(xs - lo) < config.MERGE_TOL
    at_hi = np.abs(xs - hi) < config.MERGE_TOL
    if lo == hi:
        at_hi = np.zeros_like(at_lo)
    m_in = float(ws[inner].sum())
    m_bd = float(ws[at_lo].sum() + ws[at_hi].sum())
    need = alpha - m_in
    if need < -tol or need > m_bd + tol:
        raise MassMismatch(f"interval [{lo}, {hi}] cannot carry mass {alpha}")
    frac = 0.0 if m_bd == 0 else min(max(need / m_bd, 0.0), 1.0)
    w = np.where(inner, ws, 0.0) + np.where(at_lo | at_hi, frac * ws, 0.0)
    return Measure.from_signed(xs, w)


@dataclass
class Parametrization:
    """A nested family ``alpha -> nu^alpha`` of submeasures of ``base``.

    ``intervals`` may be a callable ``alpha -> (lo, hi)`` or a list of
    ``(alpha, lo, hi)`` knots. ``grid`` holds ``(alpha, Measure)`` knots for the
    explicit kind; between knots both list forms interpolate linearly.
    """

    kind: str
    base: Measure
    intervals: Callable[[float], tuple[float, float]] | list | None = None
    grid: list[tuple[float, Measure]] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parametrization kind {self.kind!r}")
        if self.kind == "intervals" and self.intervals is None:
            raise ValueError("interval parametrization needs an interval family")
        if self.kind == "explicit_grid":
            if not self.grid:
                raise ValueError("explicit parametrization needs grid knots")
            self.grid = sorted(((float(a), m) for a, m in self.grid), key=lambda t: t[0])

    def _interp_knots(self, knots: list[tuple[float, Measure]], alpha: float) -> Measure:
        alphas = [a for a, _ in knots]
        k = int(np.searchsorted(alphas, alpha, side="left"))
        if k < len(alphas) and abs(alphas[k] - alpha) <= 1e-15:
            return knots[k][1]
        if k == 0 or k == len(alphas):
            raise ValueError(f"alpha={alpha} outside the knot range")
        a0, m0 = knots[k - 1]
        a1, m1 = knots[k]
        t = (alpha - a0) / (a1 - a0)
        return linear_combination([1 - t, t], [m0, m1])

    def at_alpha(self, alpha: float) -> Measure:
        a = _clip_alpha(self.base, alpha)
        if self.kind == "left_curtain":
            return left_curtain(self.base, a)
        if self.kind == "right_curtain":
            return right_curtain(self.base, a)
        if self.kind == "sunset":
            return sunset(self.base, a)
        if self.kind == "middle_curtain":
            return middle_curtain(self.base, a)
        if self.kind == "explicit_grid":
            return self._interp_knots(self.grid, a)
        # intervals
        if a == 0.0:
            return Measure.zero()
        if callable(self.intervals):
            lo, hi = self.intervals(a)
            return restrict_to_interval(self.base, lo, hi, a)
        knots = [(float(al), restrict_to_interval(self.base, lo, hi, float(al)) if al > 0 else Measure.zero())
                 for al, lo, hi in self.intervals]
        return self._interp_knots(knots, a)

    def breakpoints(self) -> list[float]:
        """Alphas where the family changes its linear regime (atom boundaries)."""
        if self.kind in ("left_curtain", "right_curtain"):
            ws = self.base.ws if self.kind == "left_curtain" else self.base.ws[::-1]
            return sorted({0.0, *np.cumsum(ws).tolist()})
        if self.kind == "explicit_grid":
            return [a for a, _ in self.grid]
        if self.kind == "intervals" and not callable(self.intervals):
            return sorted({0.0, *(float(k[0]) for k in self.intervals)})
        return [0.0, self.base.mass]

    def to_dict(self) -> dict:
        d: dict = {"kind": _JSON_KIND[self.kind], "base": self.base.to_dict()}
        if self.kind == "intervals":
            if callable(self.intervals):
                raise ValueError("callable interval families cannot be serialized")
            d["intervals"] = [[float(a), float(lo), float(hi)] for a, lo, hi in self.intervals]
        if self.kind == "explicit_grid":
            d["grid"] = [{"alpha": a, "measure": m.to_dict()} for a, m in self.grid]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Parametrization":
        kind = _KIND_FROM_JSON.get(d.get("kind"))
        if kind is None:
            raise ValueError(f"unknown parametrization kind {d.get('kind')!r}")
        base = Measure.from_dict(d["base"])
        if kind == "intervals":
            return cls(kind, base, intervals=[tuple(map(float, k)) for k in d["intervals"]])
        if kind == "explicit_grid":
            grid = [(float(g["alpha"]), Measure.from_dict(g["measure"])) for g in d["grid"]]
            return cls(kind, base, grid=grid)
        return cls(kind, base)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def from_intervals(mu0: Measure, intervals) -> Parametrization:
    """Parametrization by restriction of ``mu0`` to nested intervals."""
    return Parametrization("intervals", mu0, intervals=intervals)


def explicit_grid(mu0: Measure, knots: Sequence[tuple[float, Measure]]) -> Parametrization:
    return Parametrization("explicit_grid", mu0, grid=list(knots))


@dataclass
class ConvexityWitness:
    """First grid triple whose difference quotients violate the order."""

    alphas: tuple[float, float, float]
    lower: Measure
    upper: Measure


def check_cs_convex(param: Parametrization, grid: Sequence[float]):
    """Test consecutive difference quotients for convex-stochastic monotonicity.

    Returns ``(True, None)`` or ``(False, witness)``.
    """
    g = [float(a) for a in grid]
    if len(g) < 3:
        raise ValueError("need at least three grid points")
    nus = [param.at_alpha(a) for a in g]
    quot = []
    for k in range(len(g) - 1):
        d = linear_combination([1.0, -1.0], [nus[k + 1], nus[k]])
        quot.append(scale(d, 1.0 / (g[k + 1] - g[k])))
    for k in range(len(quot) - 1):
        if not check_cs_order(quot[k], quot[k + 1]):
            return False, ConvexityWitness((g[k], g[k + 1], g[k + 2]), quot[k], quot[k + 1])
    return True, None


def weights_grid(mu0: Measure, nus: Sequence[Measure]) -> np.ndarray:
    """Stack the weights of several submeasures of ``mu0`` on its support."""
    return np.vstack([weights_on(n, mu0.xs) for n in nus])
