"""Brute-force oracles: LP shadows, martingale transport LPs and MSM costs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import config
from .coupling import Coupling
from .errors import Infeasible, SizeLimit
from .lp import LPProblem, LPResult, lp_solve
from .measure import Measure, merged_grid, weights_on
from .shadow import Peacock

__all__ = [
    "Coupling",
    "LPProblem",
    "lp_solve",
    "MSMCost",
    "COSTS",
    "get_cost",
    "custom_cost",
    "brute_force_shadow",
    "mot_lp",
    "mot_lp_multistep",
    "PathLaw",
    "c_uv_expectation",
    "coupling_vertices",
    "mixed_difference_probe",
    "msm_representation_check",
    "swap_competitors",
]


# ---------------------------------------------------------------------------
# cost catalogue


@dataclass(frozen=True)
class MSMCost:
    """A vectorized cost ``c(x, y)``; ``msm`` records the sign of the third mixed derivative."""

    name: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    msm: bool

    def __call__(self, x, y):
        return self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def _cubic(x, y):
    return (y - x) ** 3


def _tanh_sqrt(x, y):
    return np.tanh(-x) * np.sqrt(1.0 + y * y)


def _exp_diff(x, y):
    return np.exp(y - x)


def _exp_rev(x, y):
    return np.exp(x - y)


COSTS: dict[str, MSMCost] = {
    "cubic": MSMCost("cubic", _cubic, True),
    "tanh_sqrt": MSMCost("tanh_sqrt", _tanh_sqrt, True),
    # d_122 exp(y - x) = -exp(y - x) < 0, so this one satisfies the MSM sign
    "exp_diff": MSMCost("exp_diff", _exp_diff, True),
    # d_122 exp(x - y) = exp(x - y) > 0: the sign-flipped control
    "exp_rev": MSMCost("exp_rev", _exp_rev, False),
}


def get_cost(name: str) -> MSMCost:
    try:
        return COSTS[name]
    except KeyError:
        raise ValueError(f"unknown cost {name!r}; choose from {sorted(COSTS)}") from None


def custom_cost(xs: Sequence[float], ys: Sequence[float], values, name: str = "custom") -> MSMCost:
    """Cost tabulated on a rectangular grid, bilinearly interpolated.

    The MSM flag is set from the discrete mixed-difference probe on the grid.
    """
    from scipy.interpolate import RegularGridInterpolator

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    vals = np.asarray(values, dtype=float).reshape(xs.size, ys.size)
    interp = RegularGridInterpolator((xs, ys), vals, method="linear", bounds_error=True)

    def fn(x, y):
        x, y = np.broadcast_arrays(x, y)
        return interp(np.stack([x.ravel(), y.ravel()], axis=-1)).reshape(x.shape)

    msm = bool(xs.size >= 2 and ys.size >= 3 and _mixed_differences(vals).max() < 0)
    return MSMCost(name, fn, msm)


def _mixed_differences(vals: np.ndarray) -> np.ndarray:
    d2 = vals[:, :-2] - 2.0 * vals[:, 1:-1] + vals[:, 2:]
    return d2[1:] - d2[:-1]


def mixed_difference_probe(cost: MSMCost, xs: Sequence[float], ys: Sequence[float]) -> float:
    """Largest ``Delta_x Delta_y^2 c`` over the cells of a probe grid (negative for MSM costs).

    ``ys`` must be equally spaced for the second difference to be meaningful.
    """
    X, Y = np.meshgrid(np.asarray(xs, float), np.asarray(ys, float), indexing="ij")
    return float(_mixed_differences(cost(X, Y)).max())


# ---------------------------------------------------------------------------
# shadow oracle


def _potential_rows(points: np.ndarray, ks: np.ndarray) -> np.ndarray:
    return np.abs(points[None, :] - ks[:, None])


def brute_force_shadow(nu: Measure, mu: Measure) -> Measure:
    """Shadow of ``nu`` in ``mu`` as the solution of a linear program.

    Minimizes ``sum eta(y) sqrt(1 + y^2)`` over ``0 <= eta <= mu`` with the
    mass and first moment of ``nu`` and ``U(eta) >= U(nu)`` on the merged
    support. Raises :class:`Infeasible` when ``nu`` is not below ``mu`` in
    the convex-positive order.
    """
    y = mu.xs
    n = y.size
    if len(nu) == 0:
        return Measure.zero()
    if n == 0:
        raise Infeasible("target measure is empty")
    ks = merged_grid(nu, mu)
    A_eq = np.vstack((np.ones(n), y))
    b_eq = np.array([nu.mass, nu.first_moment])
    A_ub = np.vstack((np.eye(n), _potential_rows(y, ks)))
    b_ub = np.concatenate((mu.ws, nu.potential_values(ks)))
    senses = ["<="] * n + [">="] * ks.size
    res = lp_solve(LPProblem(np.sqrt(1.0 + y * y), A_eq, b_eq, A_ub, b_ub, senses))
    w = res.x
    keep = w > config.NOISE_TOL * max(1.0, mu.mass)
    return Measure(y[keep], w[keep])


# ---------------------------------------------------------------------------
# martingale transport


def _coupling_system(mu0: Measure, mu1: Measure) -> tuple[np.ndarray, np.ndarray]:
    x, y = mu0.xs, mu1.xs
    nx, ny = x.size, y.size
    rows = []
    rhs = []
    for i in range(nx):
        r = np.zeros((nx, ny))
        r[i] = 1.0
        rows.append(r.ravel())
        rhs.append(mu0.ws[i])
    for j in range(ny):
        r = np.zeros((nx, ny))
        r[:, j] = 1.0
        rows.append(r.ravel())
        rhs.append(mu1.ws[j])
    for i in range(nx):
        r = np.zeros((nx, ny))
        r[i] = y - x[i]
        rows.append(r.ravel())
        rhs.append(0.0)
    return np.asarray(rows), np.asarray(rhs)


def mot_lp(mu0: Measure, mu1: Measure, cost: MSMCost | Callable, sense: str = "min") -> tuple[float, Coupling]:
    """Optimal martingale coupling of ``mu0`` and ``mu1`` for ``cost``.

    Raises :class:`Infeasible` exactly when ``mu0`` is not below ``mu1`` in
    convex order.
    """
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    X, Y = np.meshgrid(mu0.xs, mu1.xs, indexing="ij")
    C = np.asarray(cost(X, Y), dtype=float).ravel()
    A, b = _coupling_system(mu0, mu1)
    sign = 1.0 if sense == "min" else -1.0
    res = lp_solve(LPProblem(sign * C, A, b))
    W = res.x.reshape(X.shape)
    return sign * res.value, Coupling(mu0.xs, mu1.xs, W)


@dataclass
class PathLaw:
    """Weights of the paths ``supports[0][i0], supports[1][i1], ...``."""

    times: list[float]
    supports: list[np.ndarray]
    paths: np.ndarray
    weights: np.ndarray

    def pair(self, i: int, j: int) -> Coupling:
        """Two-time coupling of ``(X_{t_i}, X_{t_j})``."""
        W = np.zeros((self.supports[i].size, self.supports[j].size))
        np.add.at(W, (self.paths[:, i], self.paths[:, j]), self.weights)
        return Coupling(self.supports[i], self.supports[j], W)

    def marginal(self, i: int) -> Measure:
        w = np.zeros(self.supports[i].size)
        np.add.at(w, self.paths[:, i], self.weights)
        return Measure(self.supports[i], w)


def _multistep_system(p: Peacock, size_limit: int):
    supports = [m.xs for m in p.marginals]
    sizes = [s.size for s in supports]
    n_paths = math.prod(sizes)
    if n_paths > size_limit:
        raise SizeLimit(f"{n_paths} path variables exceed the limit {size_limit}")
    paths = np.array(list(itertools.product(*[range(k) for k in sizes])), dtype=np.intp)
    rows, rhs = [], []
    for t, m in enumerate(p.marginals):
        for i in range(sizes[t]):
            rows.append((paths[:, t] == i).astype(float))
            rhs.append(m.ws[i])
    for t in range(len(sizes) - 1):
        step = supports[t + 1][paths[:, t + 1]] - supports[t][paths[:, t]]
        # one conditional-barycenter equation per prefix (x_0, ..., x_t)
        prefix_ids = np.ravel_multi_index(paths[:, : t + 1].T, sizes[: t + 1])
        for pid in np.unique(prefix_ids):
            rows.append(np.where(prefix_ids == pid, step, 0.0))
            rhs.append(0.0)
    return supports, paths, np.asarray(rows), np.asarray(rhs)


def mot_lp_multistep(p: Peacock, cost: MSMCost | Callable, cost_times: Sequence[int] | None = None,
                     size_limit: int = 10_000) -> tuple[float, PathLaw]:
    """Optimal martingale path law for ``sum_t E[c(X_0, X_t)]`` over ``cost_times``.

    ``cost_times`` defaults to the last time only. The LP has one variable per
    path through the product of the supports; :class:`SizeLimit` is raised
    beyond ``size_limit`` paths.
    """
    if len(p) > 4:
        raise SizeLimit("multistep LPs are limited to at most three steps")
    supports, paths, A, b = _multistep_system(p, size_limit)
    cost_times = [len(p) - 1] if cost_times is None else list(cost_times)
    C = np.zeros(paths.shape[0])
    for t in cost_times:
        C += np.asarray(cost(supports[0][paths[:, 0]], supports[t][paths[:, t]]), dtype=float)
    res = lp_solve(LPProblem(C, A, b))
    return res.value, PathLaw(list(p.times), supports, paths, res.x)


def c_uv_expectation(cpl: Coupling, u: float, v: float) -> float:
    """``sum_{x <= u} sum_y w(x, y) (v - y)^+``."""
    rows = cpl.xs <= u
    if not np.any(rows):
        return 0.0
    return float(cpl.w[rows].sum(axis=0) @ np.maximum(v - cpl.ys, 0.0))


def coupling_vertices(mu0: Measure, mu1: Measure, tol: float = 1e-10) -> list[Coupling]:
    """All vertices of the martingale coupling polytope (tiny supports only).

    Every vertex is a basic feasible solution, so the enumeration runs over
    column subsets of the size of the constraint rank.
    """
    A, b = _coupling_system(mu0, mu1)
    n = A.shape[1]
    if n > 16:
        raise SizeLimit("vertex enumeration is limited to 16 coupling weights")
    # keep a maximal independent set of rows
    rank = np.linalg.matrix_rank(A)
    rows: list[int] = []
    for r in range(A.shape[0]):
        if np.linalg.matrix_rank(A[rows + [r]]) > len(rows):
            rows.append(r)
        if len(rows) == rank:
            break
    A, b = A[rows], b[rows]
    found: list[np.ndarray] = []
    for cols in itertools.combinations(range(n), rank):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.min(xb) < -tol:
            continue
        x = np.zeros(n)
        x[list(cols)] = np.maximum(xb, 0.0)
        if np.max(np.abs(A @ x - b)) > 1e-9:
            continue
        if not any(np.max(np.abs(x - f)) <= 1e-9 for f in found):
            found.append(x)
    shape = (mu0.xs.size, mu1.xs.size)
    return [Coupling(mu0.xs, mu1.xs, x.reshape(shape)) for x in found]


# ---------------------------------------------------------------------------
# representation identity for MSM costs


def _d122(cost: MSMCost, u: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """Central finite difference of ``d_x d_y^2 c`` with step ``h``."""
    def d22(x):
        return (cost(x, v + h) - 2.0 * cost(x, v) + cost(x, v - h)) / (h * h)
    return (d22(u + 0.5 * h) - d22(u - 0.5 * h)) / h


def _d2(cost: MSMCost, x: float, y: float, h: float) -> float:
    return float((cost(x, y + h) - cost(x, y - h)) / (2.0 * h))


def msm_representation_check(cost: MSMCost, box: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0),
                             grid: int = 200, probes: Sequence[tuple[float, float]] | None = None) -> float:
    """Largest residual of the integral representation of ``c`` on ``box``.

    With ``M`` and ``N`` the upper corners of ``box``, ``c(x, y)`` is compared to
    ``c(M, y) - D(N) - (y - N) D'(N) + int int 1{x <= u} (v - y)^+ (-d_122 c)``
    where ``D = c(M, .) - c(x, .)``. The double integral uses the midpoint rule
    on a ``grid x grid`` partition of the box, with ``d_122 c`` replaced by
    finite differences; cells cut by ``u = x`` or ``v = y`` are integrated over
    their covered part only. Probes default to a 9 x 9 lattice.
    """
    x_lo, M, y_lo, N = map(float, box)
    if not (x_lo < M and y_lo < N) or grid < 1:
        raise ValueError("need a nondegenerate box and a positive grid size")
    hu = (M - x_lo) / grid
    hv = (N - y_lo) / grid
    if probes is None:
        probes = [(a, b) for a in np.linspace(x_lo, M, 9) for b in np.linspace(y_lo, N, 9)]
    edges_u = np.linspace(x_lo, M, grid + 1)
    edges_v = np.linspace(y_lo, N, grid + 1)
    h_fd = min(hu, hv)
    worst = 0.0
    for x, y in probes:
        # covered part of each cell: [max(lo, x), hi] in u and [max(lo, y), hi] in v
        ulo = np.maximum(edges_u[:-1], x)
        uhi = edges_u[1:]
        du = np.clip(uhi - ulo, 0.0, None)
        vlo = np.maximum(edges_v[:-1], y)
        vhi = edges_v[1:]
        dv = np.clip(vhi - vlo, 0.0, None)
        iu = du > 0
        iv = dv > 0
        um = 0.5 * (ulo + uhi)[iu]
        vm = 0.5 * (vlo + vhi)[iv]
        U, V = np.meshgrid(um, vm, indexing="ij")
        integrand = (V - y) * (-_d122(cost, U, V, h_fd))
        integral = float(du[iu] @ integrand @ dv[iv])
        D_N = float(cost(M, N) - cost(x, N))
        dD_N = _d2(cost, M, N, h_fd) - _d2(cost, x, N, h_fd)
        rhs = float(cost(M, y)) - D_N - (y - N) * dD_N + integral
        worst = max(worst, abs(float(cost(x, y)) - rhs))
    return worst


# ---------------------------------------------------------------------------
# competitors for the slice cost comparison


def _order_rows(lo_xs: np.ndarray, hi_xs: np.ndarray, n_lo: int, n_hi: int, off_lo: int, off_hi: int,
                n_total: int):
    """Rows expressing ``theta_lo <=_c theta_hi`` for weights laid out in one vector."""
    ks = np.union1d(lo_xs, hi_xs)
    eq = np.zeros((2, n_total))
    eq[0, off_lo: off_lo + n_lo] = -1.0
    eq[0, off_hi: off_hi + n_hi] = 1.0
    eq[1, off_lo: off_lo + n_lo] = -lo_xs
    eq[1, off_hi: off_hi + n_hi] = hi_xs
    ge = np.zeros((ks.size, n_total))
    ge[:, off_lo: off_lo + n_lo] = -_potential_rows(lo_xs, ks)
    ge[:, off_hi: off_hi + n_hi] = _potential_rows(hi_xs, ks)
    return eq, ge


def swap_competitors(p: Peacock, chains: Sequence[Sequence[Measure]], k1: int, k2: int,
                     rng: np.random.Generator, count: int = 5) -> list[list[list[Measure]]]:
    """Alternative chains for slices ``k1`` and ``k2`` that keep their sum and initial laws.

    ``chains[k][i]`` is the (unnormalized) marginal of slice ``k`` at time
    index ``i``. Each competitor reassigns the mass of the two slices at every
    time after the first so that both stay martingale-compatible chains
    (increasing in convex order) supported on the peacock's supports. The
    reassignments are vertices of that polytope picked by random objectives.
    """
    n_t = len(p)
    supports = [m.xs for m in p.marginals]
    sizes = [s.size for s in supports]
    # variables: slice k1 at times 1.., then slice k2 at times 1..
    offs = np.cumsum([0] + sizes[1:] * 2)
    n_var = int(offs[-1])
    half = n_t - 1

    def off(which: int, i: int) -> int:
        return int(offs[which * half + i - 1])

    eq_rows, eq_rhs, ge_rows, ge_rhs = [], [], [], []
    for i in range(1, n_t):
        total = weights_on(chains[k1][i], supports[i]) + weights_on(chains[k2][i], supports[i])
        for j in range(sizes[i]):
            r = np.zeros(n_var)
            r[off(0, i) + j] = 1.0
            r[off(1, i) + j] = 1.0
            eq_rows.append(r)
            eq_rhs.append(total[j])
    for which, k in enumerate((k1, k2)):
        init = chains[k][0]
        # first link: fixed initial law below the time-1 variable block
        ks = np.union1d(init.xs, supports[1])
        r = np.zeros((2, n_var))
        r[0, off(which, 1): off(which, 1) + sizes[1]] = 1.0
        r[1, off(which, 1): off(which, 1) + sizes[1]] = supports[1]
        eq_rows.extend(r)
        eq_rhs.extend([init.mass, init.first_moment])
        g = np.zeros((ks.size, n_var))
        g[:, off(which, 1): off(which, 1) + sizes[1]] = _potential_rows(supports[1], ks)
        ge_rows.extend(g)
        ge_rhs.extend(init.potential_values(ks))
        for i in range(1, n_t - 1):
            eq, ge = _order_rows(supports[i], supports[i + 1], sizes[i], sizes[i + 1],
                                 off(which, i), off(which, i + 1), n_var)
            eq_rows.extend(eq)
            eq_rhs.extend([0.0, 0.0])
            ge_rows.extend(ge)
            ge_rhs.extend(np.zeros(ge.shape[0]))
    A_eq = np.asarray(eq_rows)
    b_eq = np.asarray(eq_rhs)
    A_ub = np.asarray(ge_rows)
    b_ub = np.asarray(ge_rhs)
    out = []
    for _ in range(count):
        obj = rng.normal(size=n_var)
        res: LPResult = lp_solve(LPProblem(obj, A_eq, b_eq, A_ub, b_ub, [">="] * b_ub.size))
        comp = []
        for which, k in enumerate((k1, k2)):
            chain = [chains[k][0]]
            for i in range(1, n_t):
                w = res.x[off(which, i): off(which, i) + sizes[i]]
                chain.append(Measure(supports[i], np.maximum(w, 0.0)))
            comp.append(chain)
        out.append(comp)
    return out
