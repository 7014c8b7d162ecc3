"""Shadow martingales on a finite time grid.

The martingale is assembled from a shadow table: the difference of two
consecutive rows is a *slice*, a small peacock of mass ``a_hi - a_lo``. Each
slice is turned into a chain of Kellerer dilations, and the martingale is the
mixture of these chains weighted by slice width.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

from . import config
from .coupling import Coupling
from .dilation import _split, finite_nsi, push_forward
from .errors import BadSpec, NegativeSlice, NonBinomialMixture, NotASubmeasure
from .kernels import dilate_step
from .measure import (
    Measure,
    add,
    check_convex_order,
    check_cs_order,
    max_abs_diff,
    merged_grid,
    scale,
    subtract,
    w1_distance,
    weights_on,
)
from .parametrization import Parametrization
from .shadow import Peacock, ShadowTable, shadow_row, simple_shadow, validate_table


@dataclass
class SliceChain:
    """Slice ``[a_lo, a_hi]`` of the mixture: marginals and dilation targets."""

    a_lo: float
    a_hi: float
    marginals: list[Measure]
    kernels: list[np.ndarray]
    binomial_ok: list[bool]

    @property
    def width(self) -> float:
        return self.a_hi - self.a_lo

    def normalized(self) -> list[Measure]:
        return [scale(m, 1.0 / self.width) for m in self.marginals]

    def peacock(self, times: Sequence[float]) -> Peacock:
        return Peacock(list(times), self.normalized(), validate=False)

    def to_dict(self) -> dict:
        return {
            "a_lo": self.a_lo,
            "a_hi": self.a_hi,
            "marginals": [m.to_dict() for m in self.marginals],
            "kernels": [k.tolist() for k in self.kernels],
            "binomial_ok": list(map(bool, self.binomial_ok)),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SliceChain":
        return cls(
            float(d["a_lo"]),
            float(d["a_hi"]),
            [Measure.from_dict(m) for m in d["marginals"]],
            [np.asarray(k, dtype=float) for k in d["kernels"]],
            [bool(b) for b in d["binomial_ok"]],
        )


@dataclass
class MartingaleMixture:
    """Mixture of slice chains covering the parameter range ``[0, 1]``."""

    times: list[float]
    slices: list[SliceChain]
    peacock: Peacock | None = None
    param: Parametrization | None = None
    alphas: list[float] | None = None
    table: ShadowTable | None = field(default=None, repr=False)

    @property
    def all_binomial(self) -> bool:
        return all(all(s.binomial_ok) for s in self.slices)

    def non_binomial_links(self) -> list[tuple[int, int]]:
        return [(k, i) for k, s in enumerate(self.slices) for i, ok in enumerate(s.binomial_ok) if not ok]

    def marginal(self, i: int) -> Measure:
        out = Measure.zero()
        for s in self.slices:
            out = add(out, s.marginals[i])
        return out

    def to_dict(self) -> dict:
        prov: dict = {}
        if self.peacock is not None:
            prov["peacock"] = self.peacock.to_dict()
        if self.param is not None:
            prov["parametrization"] = self.param.to_dict()
        if self.alphas is not None:
            prov["alphas"] = list(self.alphas)
        return {"times": list(self.times), "slices": [s.to_dict() for s in self.slices],
                "provenance": prov}

    @classmethod
    def from_dict(cls, d: dict) -> "MartingaleMixture":
        prov = d.get("provenance", {})
        p = Peacock.from_dict(prov["peacock"]) if "peacock" in prov else None
        par = Parametrization.from_dict(prov["parametrization"]) if "parametrization" in prov else None
        alphas = [float(a) for a in prov["alphas"]] if "alphas" in prov else None
        return cls([float(t) for t in d["times"]], [SliceChain.from_dict(s) for s in d["slices"]],
                   p, par, alphas)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MartingaleMixture":
        return cls.from_dict(json.loads(text))


@dataclass
class Trajectory:
    slice: int
    values: list[float]


# ---------------------------------------------------------------------------
# grids


def default_alphas(param: Parametrization, subdivide: int = 0) -> list[float]:
    """Regime breakpoints of ``param``, each gap cut into ``subdivide + 1`` pieces."""
    bps = param.breakpoints()
    total = param.base.mass
    bps = sorted({0.0, total, *[b for b in bps if 0.0 <= b <= total]})
    out = []
    for a, b in zip(bps, bps[1:]):
        out.extend(np.linspace(a, b, subdivide + 2)[:-1].tolist())
    out.append(total)
    return _dedupe(out)


def _dedupe(alphas: Sequence[float], eps: float = 1e-14) -> list[float]:
    out: list[float] = []
    for a in sorted(float(x) for x in alphas):
        if not out or a - out[-1] > eps:
            out.append(a)
    return out


class _RowCache:
    """Shadow rows keyed by alpha, flattened onto the marginal supports."""

    def __init__(self, p: Peacock, param: Parametrization):
        self.p = p
        self.param = param
        self.supports = [m.xs for m in p.marginals]
        self.rows: dict[float, list[Measure]] = {}
        self.vecs: dict[float, np.ndarray] = {}

    def row(self, a: float) -> list[Measure]:
        if a not in self.rows:
            self.rows[a] = shadow_row(self.p, self.param.at_alpha(a))
        return self.rows[a]

    def vec(self, a: float) -> np.ndarray:
        if a not in self.vecs:
            r = self.row(a)
            self.vecs[a] = np.concatenate([weights_on(m, s) for m, s in zip(r, self.supports)])
        return self.vecs[a]


_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def refine_alphas(p: Peacock, param: Parametrization, alphas: Sequence[float],
                  lin_tol: float = 1e-13, min_width: float = 1e-11,
                  max_evals: int = 500_000, cache: _RowCache | None = None) -> list[float]:
    """Insert every alpha where the shadow table stops being linear in alpha.

    Table entries are piecewise linear in alpha. On each gap the table is
    probed at two interior points; a nonlinear gap is first tested for a
    single kink (the intersection of the two one-sided secant lines) and split
    otherwise. Slices between consecutive returned alphas are linear.
    """
    cache = cache or _RowCache(p, param)
    accepted = set(_dedupe(alphas))
    stack = list(zip(sorted(accepted), sorted(accepted)[1:]))
    evals = 0
    while stack:
        a, b = stack.pop()
        if b - a <= min_width:
            continue
        m1 = a + (1.0 - _PHI) * (b - a)
        m2 = a + _PHI * (b - a)
        Fa, Fb, F1, F2 = cache.vec(a), cache.vec(b), cache.vec(m1), cache.vec(m2)
        evals += 2
        if evals > max_evals:
            raise RuntimeError("alpha refinement exceeded its evaluation budget")
        chord1 = Fa + (Fb - Fa) * (1.0 - _PHI)
        chord2 = Fa + (Fb - Fa) * _PHI
        if max(np.max(np.abs(F1 - chord1)), np.max(np.abs(F2 - chord2))) <= lin_tol:
            continue
        sl = (F1 - Fa) / (m1 - a)
        sr = (Fb - F2) / (b - m2)
        d = sl - sr
        c = (Fa - sl * a) - (Fb - sr * b)
        dd = float(d @ d)
        star = -float(c @ d) / dd if dd > 0 else None
        # a kink outside (m1, m2) makes the secant lines meet at m1 or m2 itself
        margin = 1e-6 * (m2 - m1)
        if star is not None and m1 + margin < star < m2 - margin:
            Fs = cache.vec(star)
            evals += 1
            left = Fa + sl * (star - a)
            right = Fb + sr * (star - b)
            if max(np.max(np.abs(Fs - left)), np.max(np.abs(Fs - right))) <= lin_tol:
                # both halves are re-examined in case they hide further kinks
                accepted.add(star)
                stack.extend([(a, star), (star, b)])
                continue
        accepted.update((m1, m2))
        stack.extend([(a, m1), (m1, m2), (m2, b)])
    merged = _merge_slivers(sorted(accepted), set(_dedupe(alphas)), cache)
    return _drop_collinear(merged, cache, 10 * lin_tol)


def _merge_slivers(alphas: list[float], fixed: set[float], cache: _RowCache,
                   sliver: float = 1e-9) -> list[float]:
    """Replace clusters of alphas closer than ``sliver`` by one kink estimate.

    Bisection stalls at a kink it cannot resolve to rounding accuracy; the
    cluster it leaves is collapsed to the intersection of the two linear
    pieces on either side. Points of the input grid are never moved.
    """
    out: list[float] = []
    k = 0
    n = len(alphas)
    while k < n:
        j = k
        while j + 1 < n and alphas[j + 1] - alphas[j] < sliver:
            j += 1
        if j == k:
            out.append(alphas[k])
            k += 1
            continue
        cluster = alphas[k: j + 1]
        pinned = [a for a in cluster if a in fixed]
        if pinned:
            out.extend(pinned)
        elif k == 0 or j == n - 1:
            out.append(cluster[0] if k == 0 else cluster[-1])
        else:
            lo, hi = cluster[0], cluster[-1]
            L, R = alphas[k - 1], alphas[j + 1]
            sl = (cache.vec(lo) - cache.vec(L)) / (lo - L)
            sr = (cache.vec(R) - cache.vec(hi)) / (R - hi)
            d = sl - sr
            c = (cache.vec(lo) - sl * lo) - (cache.vec(hi) - sr * hi)
            dd = float(d @ d)
            star = -float(c @ d) / dd if dd > 0 else 0.5 * (lo + hi)
            if not lo - sliver <= star <= hi + sliver:
                star = 0.5 * (lo + hi)
            out.append(star)
        k = j + 1
    return out


def _drop_collinear(alphas: list[float], cache: _RowCache, tol: float) -> list[float]:
    """Remove interior points where two adjacent linear pieces continue each other."""
    kept = [alphas[0]]
    for k in range(1, len(alphas) - 1):
        a, b, c = kept[-1], alphas[k], alphas[k + 1]
        t = (b - a) / (c - a)
        chord = cache.vec(a) + (cache.vec(c) - cache.vec(a)) * t
        if np.max(np.abs(cache.vec(b) - chord)) > tol:
            kept.append(b)
    kept.append(alphas[-1])
    return kept


# ---------------------------------------------------------------------------
# construction


def binomial_tolerance(width: float) -> float:
    """Atomwise tolerance for normalized slice comparisons.

    Table entries carry absolute rounding of order 1e-14; normalizing by the
    slice width amplifies it, so the allowance grows like ``1e-12 / width``.
    """
    return config.tolerance() + 1e-12 / width


def _slice_from_rows(p: Peacock, lo_row: list[Measure], hi_row: list[Measure],
                     a_lo: float, a_hi: float) -> SliceChain:
    tol = config.tolerance()
    width = a_hi - a_lo
    margs = []
    for i, (lo, hi) in enumerate(zip(lo_row, hi_row)):
        try:
            margs.append(subtract(hi, lo))
        except NotASubmeasure as exc:
            raise NegativeSlice(f"slice [{a_lo}, {a_hi}] at time index {i}: {exc}") from exc
    normed = [scale(m, 1.0 / width) for m in margs]
    btol = binomial_tolerance(width)
    kernels, ok = [], []
    for i in range(len(margs) - 1):
        F = normed[i + 1].support(tol)
        if F.size == 0:
            F = normed[i + 1].xs
        kernels.append(F)
        src = normed[i].cleaned(tol)
        try:
            image = push_forward(src, F)
            ok.append(max_abs_diff(image, normed[i + 1]) <= btol)
        except Exception:
            ok.append(False)
    return SliceChain(a_lo, a_hi, margs, kernels, ok)


def slices_from_table(p: Peacock, table: ShadowTable) -> list[SliceChain]:
    out = []
    for k in range(len(table.alphas) - 1):
        a_lo, a_hi = table.alphas[k], table.alphas[k + 1]
        if a_hi - a_lo <= 0:
            continue
        out.append(_slice_from_rows(p, table.entries[k], table.entries[k + 1], a_lo, a_hi))
    return out


def build(p: Peacock, param: Parametrization, alphas: Sequence[float] | None = None, *,
          refine: bool = False, subdivide: int = 0, threads: int = 1,
          validate: bool = True) -> MartingaleMixture:
    """Assemble the shadow martingale of ``p`` for ``param`` on an alpha grid.

    Without ``alphas`` the grid is :func:`default_alphas`. With ``refine`` every
    kink of the table in alpha is added so that every slice is linear.
    """
    total = param.base.mass
    grid = default_alphas(param, subdivide) if alphas is None else _dedupe(alphas)
    if abs(grid[0]) > 1e-12 or abs(grid[-1] - total) > 1e-12:
        raise ValueError("alpha grid must start at 0 and end at the base mass")
    grid[0], grid[-1] = 0.0, total
    cache = _RowCache(p, param)
    if refine:
        grid = refine_alphas(p, param, grid, cache=cache)
    missing = [a for a in grid if a not in cache.rows]
    if threads > 1 and missing:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for a, r in zip(missing, ex.map(lambda a: shadow_row(p, param.at_alpha(a)), missing)):
                cache.rows[a] = r
    entries = [cache.row(a) for a in grid]
    table = ShadowTable(grid, list(p.times), entries)
    if validate:
        validate_table(table, p)
    slices = slices_from_table(p, table)
    return MartingaleMixture(list(p.times), slices, p, param, grid, table)


# ---------------------------------------------------------------------------
# audits


def partial_sums(m: MartingaleMixture) -> list[list[Measure]]:
    """Cumulative slice marginals, one row per slice boundary (first row zero)."""
    rows = [[Measure.zero() for _ in m.times]]
    for s in m.slices:
        rows.append([add(a, b) for a, b in zip(rows[-1], s.marginals)])
    return rows


def verify_marginals(m: MartingaleMixture, table: ShadowTable | None = None) -> float:
    """Largest W1 distance between partial slice sums and table entries."""
    table = table or m.table
    if table is None:
        if m.peacock is None or m.param is None or m.alphas is None:
            raise ValueError("need a shadow table or full provenance")
        cache = _RowCache(m.peacock, m.param)
        table = ShadowTable(m.alphas, m.times, [cache.row(a) for a in m.alphas])
    sums = partial_sums(m)
    bounds = [0.0] + [s.a_hi for s in m.slices]
    dev = 0.0
    for k, a in enumerate(table.alphas):
        j = int(np.argmin(np.abs(np.asarray(bounds) - a)))
        if abs(bounds[j] - a) > 1e-12:
            raise ValueError(f"alpha {a} is not a slice boundary")
        for i in range(len(m.times)):
            dev = max(dev, w1_distance(sums[j][i], table.entries[k][i], tol=1e-6))
    return dev


@dataclass
class MartingaleAudit:
    kernel_error: float
    non_binomial: list[tuple[int, int]]
    max_link_w1: float


def verify_martingale(m: MartingaleMixture) -> MartingaleAudit:
    """Kernel barycenter error and dilation-image defects for every link."""
    tol = config.tolerance()
    kerr = 0.0
    bad = []
    worst = 0.0
    for k, s in enumerate(m.slices):
        normed = s.normalized()
        for i, F in enumerate(s.kernels):
            src = normed[i].cleaned(tol)
            F = np.asarray(F, dtype=float)
            try:
                lo, hi, pu = _split(F, src.xs, tol)
            except Exception:
                bad.append((k, i))
                worst = math.inf
                continue
            bary = (1 - pu) * F[lo] + pu * F[hi]
            kerr = max(kerr, float(np.max(np.abs(bary - src.xs))) if len(src) else 0.0)
            image = push_forward(src, F)
            d = w1_distance(image, normed[i + 1], tol=1e-6)
            worst = max(worst, d)
            if max_abs_diff(image, normed[i + 1]) > binomial_tolerance(s.width) or not s.binomial_ok[i]:
                bad.append((k, i))
    return MartingaleAudit(kerr, bad, worst)


def slice_nsi_report(m: MartingaleMixture) -> list[bool]:
    """NSI status of each normalized slice peacock."""
    out = []
    for s in m.slices:
        try:
            out.append(finite_nsi(s.peacock(m.times)).ok)
        except Exception:
            out.append(False)
    return out


# ---------------------------------------------------------------------------
# sampling


def _uniforms(seed: int, start: int, count: int, width: int) -> np.ndarray:
    """Uniforms for paths ``start .. start+count-1``, ``width`` per path.

    The stream is a Philox counter sequence keyed by ``seed``; path ``p`` owns
    the block of ``width`` doubles starting at ``p * width`` (``width`` is a
    multiple of 4 so each block begins on a counter boundary).
    """
    bg = np.random.Philox(key=int(seed) & ((1 << 64) - 1))
    if start:
        bg.advance(start * width // 4)
    return np.random.Generator(bg).random(count * width).reshape(count, width)


def _sample_chunk(m: MartingaleMixture, seed: int, start: int, count: int):
    n_t = len(m.times)
    width = 4 * ((n_t + 1 + 3) // 4)
    U = _uniforms(seed, start, count, width)
    tol = config.tolerance()
    his = np.asarray([s.a_hi for s in m.slices])
    lo0 = m.slices[0].a_lo
    span = his[-1] - lo0
    k = np.searchsorted(his, lo0 + U[:, 0] * span, side="right")
    k = np.minimum(k, len(m.slices) - 1).astype(np.intp)
    # initial values via a stacked inverse CDF: slice j owns keys in (j, j + 1]
    keys, vals = [], []
    for j, s in enumerate(m.slices):
        init = scale(s.marginals[0], 1.0 / s.width).cleaned(tol)
        c = np.cumsum(init.ws)
        c = c / c[-1]
        keys.append(j + c)
        vals.append(init.xs)
    keys_all = np.concatenate(keys)
    vals_all = np.concatenate(vals)
    pos = np.searchsorted(keys_all, k + U[:, 1], side="right")
    pos = np.minimum(pos, keys_all.size - 1)
    X = np.empty((count, n_t))
    X[:, 0] = vals_all[pos]
    for i in range(n_t - 1):
        targets = [np.asarray(s.kernels[i], dtype=float) for s in m.slices]
        offsets = np.concatenate(([0], np.cumsum([t.size for t in targets]))).astype(np.intp)
        flat = np.ascontiguousarray(np.concatenate(targets))
        X[:, i + 1] = dilate_step(np.ascontiguousarray(X[:, i]), np.ascontiguousarray(U[:, i + 2]),
                                  flat, offsets, k, tol)
    return k, X


def sample_arrays(m: MartingaleMixture, n: int, seed: int, force: bool = False,
                  threads: int = 1, chunk: int = 50_000) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``n`` paths; returns ``(slice_index[n], values[n, len(times)])``."""
    if not force and not m.all_binomial:
        raise NonBinomialMixture(f"{len(m.non_binomial_links())} links are not dilation images")
    starts = list(range(0, n, chunk))
    jobs = [(s, min(chunk, n - s)) for s in starts]

    def run(job):
        return _sample_chunk(m, seed, job[0], job[1])

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    if not parts:
        return np.empty(0, dtype=np.intp), np.empty((0, len(m.times)))
    return np.concatenate([p[0] for p in parts]), np.vstack([p[1] for p in parts])


def sample(m: MartingaleMixture, n: int, seed: int, force: bool = False,
           threads: int = 1) -> list[Trajectory]:
    """Sample ``n`` trajectories (deterministic in ``seed``)."""
    k, X = sample_arrays(m, n, seed, force=force, threads=threads)
    return [Trajectory(int(a), row.tolist()) for a, row in zip(k, X)]


# ---------------------------------------------------------------------------
# joint laws and costs


def _dilation_matrix(src: np.ndarray, F: np.ndarray) -> np.ndarray:
    lo, hi, pu = _split(F, src, config.tolerance())
    K = np.zeros((src.size, F.size))
    np.add.at(K, (np.arange(src.size), lo), 1.0 - pu)
    np.add.at(K, (np.arange(src.size), hi), pu)
    return K


def slice_joint(s: SliceChain, i: int, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint law of ``(X_i, X_j)`` within one slice (unnormalized).

    A slice whose marginal at ``i`` is a single atom has joint law
    ``delta_x (x) eta_j``. Otherwise the law is propagated through the chain
    of dilations, which is exact when the links are dilation images.
    """
    src = s.marginals[i]
    if j == i:
        return src.xs, src.xs, np.diag(src.ws)
    tol = config.tolerance() * s.width
    if len(src.cleaned(tol)) == 1:
        x = src.cleaned(tol)
        tgt = s.marginals[j]
        return x.xs, tgt.xs, (tgt.ws * (src.mass / tgt.mass))[None, :]
    J = np.diag(src.ws)
    cur = src.xs
    for link in range(i, j):
        F = np.asarray(s.kernels[link], dtype=float)
        J = J @ _dilation_matrix(cur, F)
        cur = F
    return src.xs, cur, J


def joint_law(m: MartingaleMixture, i: int, j: int) -> Coupling:
    """Coupling of ``(X_{t_i}, X_{t_j})`` under the mixture."""
    parts = [slice_joint(s, i, j) for s in m.slices]
    xs = merged_grid(*[Measure(p[0], np.ones(p[0].size)) for p in parts])
    ys = merged_grid(*[Measure(p[1], np.ones(p[1].size)) for p in parts])
    W = np.zeros((xs.size, ys.size))
    for px, py, J in parts:
        ix = np.searchsorted(xs, px - config.MERGE_TOL)
        iy = np.searchsorted(ys, py - config.MERGE_TOL)
        W[np.ix_(ix, iy)] += J
    return Coupling(xs, ys, W)


def mixture_cost(m: MartingaleMixture, cost, i: int = 0, j: int | None = None) -> float:
    """E[c(X_{t_i}, X_{t_j})] under the mixture (``j`` defaults to the last time)."""
    j = len(m.times) - 1 if j is None else j
    return joint_law(m, i, j).expectation(cost)


def aux_cost(a: float, slice_marginal: Measure) -> float:
    """``(1 - a) * integral of x + sqrt(1 + x^2)``."""
    x = slice_marginal.xs
    return float((1.0 - a) * (slice_marginal.ws @ (x + np.sqrt(1.0 + x * x))))


def total_aux_cost(m: MartingaleMixture, i: int) -> float:
    """Sum over slices of width times the auxiliary cost of the normalized slice."""
    return sum(aux_cost(s.a_lo, s.marginals[i]) for s in m.slices)


@dataclass
class OrderingWitness:
    slice_index: int
    time_index: int
    lower: Measure
    upper: Measure


def check_slice_ordering(m: MartingaleMixture):
    """Test the convex-stochastic ordering of consecutive slices.

    For slices ``a < a'`` with normalized chains ``theta``, ``theta'`` the check
    at time index ``i`` is
    ``2 theta_i - S^{(2 theta_s)_{s<=i}}(theta_0) <=_cs S^{(2 theta'_s)_{s<=i}}(theta'_0)``.
    Returns ``(True, None)`` or ``(False, witness)``.
    """
    normed = [s.normalized() for s in m.slices]
    doubled = [[scale(x, 2.0) for x in chain] for chain in normed]
    for k in range(len(m.slices) - 1):
        th, th2 = normed[k], normed[k + 1]
        lo_path = _path(th[0], doubled[k])
        hi_path = _path(th2[0], doubled[k + 1])
        for i in range(len(m.times)):
            lhs = subtract(scale(th[i], 2.0), lo_path[i])
            if not check_cs_order(lhs, hi_path[i]):
                return False, OrderingWitness(k, i, lhs, hi_path[i])
    return True, None


def _path(nu: Measure, chain: list[Measure]) -> list[Measure]:
    out, eta = [], nu
    for mu in chain:
        eta = simple_shadow(eta, mu)
        out.append(eta)
    return out


# ---------------------------------------------------------------------------
# discretization and structural checks


def discretize(spec, m: int) -> Measure:
    """Equal-mass quantile buckets collapsed to their conditional means.

    ``spec`` is a :class:`Measure` (returned unchanged) or a dict with
    ``type`` in ``uniform`` (``lo``, ``hi``), ``gaussian`` (``mean``, ``var``) or
    ``atomic`` (``atoms``).
    """
    if isinstance(spec, Measure):
        return spec
    if not isinstance(spec, dict) or "type" not in spec:
        raise BadSpec("distribution spec must be a dict with a 'type'")
    if int(m) != m or m < 1:
        raise BadSpec("bucket count must be a positive integer")
    m = int(m)
    kind = spec["type"]
    try:
        if kind == "uniform":
            lo, hi = float(spec["lo"]), float(spec["hi"])
            if not hi > lo:
                raise BadSpec("uniform needs lo < hi")
            xs = lo + (np.arange(m) + 0.5) * (hi - lo) / m
            return Measure(xs, np.full(m, 1.0 / m))
        if kind == "gaussian":
            mean, var = float(spec["mean"]), float(spec["var"])
            if not var > 0:
                raise BadSpec("gaussian needs var > 0")
            z = norm.ppf(np.arange(m + 1) / m)
            dens = norm.pdf(z)
            xs = mean + math.sqrt(var) * m * (dens[:-1] - dens[1:])
            return Measure(xs, np.full(m, 1.0 / m))
        if kind == "atomic":
            return Measure.from_dict({"atoms": spec["atoms"]})
    except (KeyError, TypeError, ValueError) as exc:
        raise BadSpec(f"malformed {kind} spec: {exc}") from exc
    raise BadSpec(f"unknown distribution type {kind!r}")


def non_obstructed_check(p: Peacock, nu: Measure) -> bool:
    """True iff simple shadows of ``nu`` increase in convex order along ``p``."""
    shadows = [simple_shadow(nu, mu) for mu in p.marginals]
    for i in range(len(shadows)):
        for j in range(i + 1, len(shadows)):
            if not check_convex_order(shadows[i], shadows[j]):
                return False
    return True


def obstructed_equals_simple(p: Peacock, nu: Measure) -> bool:
    """True iff the obstructed shadow equals the simple one at every time."""
    path = shadow_row(p, nu)
    return all(max_abs_diff(a, simple_shadow(nu, mu)) <= config.tolerance()
               for a, mu in zip(path, p.marginals))
