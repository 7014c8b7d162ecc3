"""Kellerer dilations onto finite target sets and NSI checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .errors import OutOfHull
from .measure import Measure, equal, max_abs_diff, scale
from .shadow import Peacock, obstructed_shadow


@dataclass(frozen=True)
class DilationKernel:
    """Kernel sending x to its two neighbours in the sorted set ``targets``."""

    targets: np.ndarray

    def __post_init__(self):
        t = np.unique(np.asarray(self.targets, dtype=float))
        if t.size == 0:
            raise ValueError("target set must be non-empty")
        object.__setattr__(self, "targets", t)

    @property
    def bounds(self) -> tuple[float, float]:
        return float(self.targets[0]), float(self.targets[-1])

    def __call__(self, x: float) -> Measure:
        return kellerer_dilation(self.targets, x)


def _split(F: np.ndarray, xs: np.ndarray, tol: float):
    """Neighbour indices and upper weights for every source point."""
    if np.any(xs < F[0] - tol) or np.any(xs > F[-1] + tol):
        bad = xs[(xs < F[0] - tol) | (xs > F[-1] + tol)][0]
        raise OutOfHull(f"x={bad} outside [{F[0]}, {F[-1]}]")
    j = np.clip(np.searchsorted(F, xs, side="left"), 0, F.size - 1)
    jm = np.clip(j - 1, 0, F.size - 1)
    on_hi = np.abs(F[j] - xs) <= tol
    on_lo = np.abs(F[jm] - xs) <= tol
    gap = np.where(F[j] > F[jm], F[j] - F[jm], 1.0)
    p_up = (xs - F[jm]) / gap
    p_up = np.where(on_hi, 1.0, np.where(on_lo, 0.0, p_up))
    # collapse exact hits onto a single index
    lo_idx = np.where(on_hi, j, jm)
    return lo_idx, j, p_up


def kellerer_dilation(F, x: float) -> Measure:
    """Two-point martingale kernel onto the neighbours of ``x`` in ``F``."""
    F = np.unique(np.asarray(F, dtype=float))
    if F.size == 0:
        raise ValueError("target set must be non-empty")
    lo, hi, p = _split(F, np.asarray([float(x)]), config.tolerance())
    if lo[0] == hi[0]:
        return Measure.dirac(float(F[hi[0]]))
    return Measure([F[lo[0]], F[hi[0]]], [1.0 - p[0], p[0]])


def push_forward(mu: Measure, F) -> Measure:
    """Mixture of Kellerer dilations of the atoms of ``mu`` onto ``F``."""
    F = np.unique(np.asarray(F, dtype=float))
    if len(mu) == 0:
        return Measure.zero()
    lo, hi, p = _split(F, mu.xs, config.tolerance())
    w = np.zeros(F.size)
    np.add.at(w, lo, mu.ws * (1.0 - p))
    np.add.at(w, hi, mu.ws * p)
    return Measure.from_signed(F, w)


def one_step_nsi(mu0: Measure, mu1: Measure) -> bool:
    """True iff ``mu1`` is the dilation image of ``mu0`` onto ``supp(mu1)``."""
    F = mu1.support()
    try:
        image = push_forward(mu0, F)
    except OutOfHull:
        return False
    return equal(image, mu1)


@dataclass
class NSIReport:
    """Per-time comparison of doubled-chain shadows with the marginals."""

    ok: bool
    per_time: list[bool]
    deviations: list[float]
    times: list[float]

    @property
    def first_failure(self) -> float | None:
        for t, ok in zip(self.times, self.per_time):
            if not ok:
                return t
        return None


def finite_nsi(p: Peacock) -> NSIReport:
    """Check ``S^{(2 mu_s)_{s <= t}}(mu_0) = mu_t`` at every grid time."""
    tol = config.tolerance()
    chain = [scale(m, 2.0) for m in p.marginals]
    mu0 = p.marginals[0]
    per, devs = [], []
    eta = mu0
    for i, mu in enumerate(chain):
        eta = obstructed_shadow(eta, [mu])
        d = max_abs_diff(eta, p.marginals[i])
        devs.append(d)
        per.append(d <= tol)
    return NSIReport(all(per), per, devs, list(p.times))
