"""Small dense linear programs solved by the two-phase primal simplex method.

Pivoting follows Bland's rule (smallest eligible index enters, smallest
basic index leaves on ties), which rules out cycling on degenerate problems.
Instances are expected to be desk-sized, so there is no scaling or presolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Infeasible, IterationLimit, Unbounded


@dataclass
class LPProblem:
    """``min c.x`` subject to ``A_eq x = b_eq``, ``A_ub x (<= or >=) b_ub``, ``x >= lb``.

    ``senses`` holds one of ``"<="`` / ``">="`` per inequality row
    (default all ``"<="``).
    """

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    senses: list[str] | None = None
    lb: np.ndarray | None = None
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "equality")
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "inequality")
        if self.senses is None:
            self.senses = ["<="] * self.b_ub.size
        if len(self.senses) != self.b_ub.size or any(s not in ("<=", ">=") for s in self.senses):
            raise ValueError("need one '<=' or '>=' sense per inequality row")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        if self.lb.size != n:
            raise ValueError("lower bounds must match the number of variables")
        for arr in (self.c, self.A_eq, self.b_eq, self.A_ub, self.b_ub, self.lb):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")

    @property
    def n_vars(self) -> int:
        return self.c.size


def _rows(A, b, n: int, what: str) -> tuple[np.ndarray, np.ndarray]:
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (b.size, n):
        raise ValueError(f"{what} block has shape {A.shape}, expected ({b.size}, {n})")
    return A, b


@dataclass
class LPResult:
    value: float
    x: np.ndarray
    basis: np.ndarray
    iterations: int
    residual: float


def _standard_form(p: LPProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Rewrite as ``min c.z`` with ``A z = b``, ``z >= 0`` (slacks appended)."""
    n = p.n_vars
    shift_eq = p.b_eq - p.A_eq @ p.lb
    shift_ub = p.b_ub - p.A_ub @ p.lb
    k = p.b_ub.size
    A = np.zeros((p.b_eq.size + k, n + k))
    A[: p.b_eq.size, :n] = p.A_eq
    A[p.b_eq.size:, :n] = p.A_ub
    for r, s in enumerate(p.senses):
        A[p.b_eq.size + r, n + r] = 1.0 if s == "<=" else -1.0
    b = np.concatenate((shift_eq, shift_ub))
    c = np.concatenate((p.c, np.zeros(k)))
    return A, b, c, float(p.c @ p.lb)


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex(T: np.ndarray, basis: np.ndarray, n_cols: int, eps: float,
             max_iter: int, it: int) -> int:
    """Run Bland pivots on tableau ``T`` (last row holds reduced costs)."""
    m = T.shape[0] - 1
    while True:
        red = T[-1, :n_cols]
        cand = np.nonzero(red < -eps)[0]
        if cand.size == 0:
            return it
        j = int(cand[0])
        col = T[:m, j]
        pos = col > eps
        if not np.any(pos):
            raise Unbounded("objective is unbounded below")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + eps * max(1.0, abs(best)))[0]
        r = int(ties[np.argmin(basis[ties])])
        _pivot(T, r, j)
        basis[r] = j
        it += 1
        if it > max_iter:
            raise IterationLimit(f"simplex exceeded {max_iter} pivots")


def lp_solve(p: LPProblem, eps: float = 1e-11, max_iter: int = 200_000,
             feas_tol: float = 1e-9) -> LPResult:
    """Optimal basic solution of ``p``.

    Raises :class:`Infeasible`, :class:`Unbounded` or :class:`IterationLimit`.
    """
    A, b, c, offset = _standard_form(p)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    m, n = A.shape
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    if m == 0:
        if np.any(c < -eps):
            raise Unbounded("objective is unbounded below")
        x = p.lb.copy()
        return LPResult(float(p.c @ x), x, np.zeros(0, dtype=np.intp), 0, 0.0)
    # phase one: artificial variables n .. n + m - 1 start in the basis
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n: n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    it = _simplex(T, basis, n + m, eps, max_iter, 0)
    if -T[-1, -1] > feas_tol * scale * max(1, m):
        raise Infeasible(f"phase one ended with infeasibility {-T[-1, -1]:.3e}")
    # drive remaining artificials out; rows that cannot pivot are redundant
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n:
            row = T[r, :n]
            cand = np.nonzero(np.abs(row) > 1e-9)[0]
            if cand.size:
                _pivot(T, r, int(cand[0]))
                basis[r] = int(cand[0])
            else:
                keep[r] = False
    T = np.vstack((T[:m][keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))))
    basis = basis[keep]
    m2 = basis.size
    # phase two reduced costs
    T[-1, :n] = c
    T[-1, -1] = 0.0
    for r in range(m2):
        T[-1] -= c[basis[r]] * T[r]
    it = _simplex(T, basis, n, eps, max_iter, it)
    z = np.zeros(n)
    # re-solve the final basis against the original rows to shed pivot rounding
    B = A[:, basis]
    try:
        zb, *_ = np.linalg.lstsq(B, b, rcond=None)
    except np.linalg.LinAlgError:
        zb = T[:m2, -1]
    if np.min(zb, initial=0.0) < -feas_tol:
        zb = T[:m2, -1]
    z[basis] = np.maximum(zb, 0.0)
    resid = float(np.max(np.abs(A @ z - b))) if m else 0.0
    if resid > feas_tol * scale:
        z[:] = 0.0
        z[basis] = np.maximum(T[:m2, -1], 0.0)
        resid = float(np.max(np.abs(A @ z - b)))
    x = z[: p.n_vars] + p.lb
    return LPResult(float(c @ z + offset), x, basis.copy(), it, resid)
