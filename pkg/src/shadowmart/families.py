"""Ready-made peacocks used as worked cases and convergence probes."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import comb

from .martingale import discretize
from .measure import Measure, add, scale
from .shadow import Peacock


def walk_law(n: int, step: float = 1.0) -> Measure:
    """Law of ``step * S_n`` for the simple symmetric random walk ``S``."""
    k = np.arange(n + 1)
    return Measure(step * (2 * k - n), comb(n, k) / 2.0 ** n)


def walk_mixture_peacock(n_steps: int = 3) -> Peacock:
    """``(Law(S_n) + Law(3 S_n)) / 2`` for ``n = 0 .. n_steps``."""
    margs = [add(scale(walk_law(n), 0.5), scale(walk_law(n, 3.0), 0.5)) for n in range(n_steps + 1)]
    return Peacock(list(range(n_steps + 1)), margs)


def spread_chain() -> list[Measure]:
    """Two-link obstruction chain ``[(d-1 + d1)/2, d0/2 + (d-2 + d2)/4]``."""
    return [Measure([-1.0, 1.0], [0.5, 0.5]), Measure([-2.0, 0.0, 2.0], [0.25, 0.5, 0.25])]


def spread_peacock() -> Peacock:
    """``d0, (d-1 + d1)/2, d0/2 + (d-2 + d2)/4`` at times 0, 1/2, 1 (NSI)."""
    return Peacock([0.0, 0.5, 1.0], [Measure.dirac(0.0), *spread_chain()])


def spread_limit_peacock() -> Peacock:
    """``d0, d0, d0/2 + (d-2 + d2)/4`` at times 0, 1/2, 1 (not NSI)."""
    return Peacock([0.0, 0.5, 1.0], [Measure.dirac(0.0), Measure.dirac(0.0), spread_chain()[1]])


def thinning_center_marginal(t: float) -> Measure:
    """``(1 - t) d0 + t (d-1 + d1)/2`` for ``t < 1`` and the spread law at 1."""
    if t >= 1.0:
        return spread_chain()[1]
    return Measure([-1.0, 0.0, 1.0], [t / 2, 1.0 - t, t / 2])


def thinning_center_peacock(times: Sequence[float]) -> Peacock:
    """The family above sampled at ``times`` (must start at 0)."""
    return Peacock(list(times), [thinning_center_marginal(float(t)) for t in times])


def uniform_growing_peacock(times: Sequence[float], m: int, width: str = "linear") -> Peacock:
    """Discretized ``U[-w(t), w(t)]`` with ``w = 1 + t`` (linear) or ``e^t`` (exp)."""
    if width == "linear":
        w = [1.0 + t for t in times]
    elif width == "exp":
        w = [math.exp(t) for t in times]
    else:
        raise ValueError(f"unknown width function {width!r}")
    return Peacock(list(times), [discretize({"type": "uniform", "lo": -a, "hi": a}, m) for a in w])


def brownian_peacock(times: Sequence[float], m: int, base_var: float = 1.0) -> Peacock:
    """Discretized ``N(0, base_var + t)``."""
    return Peacock(list(times), [discretize({"type": "gaussian", "mean": 0.0, "var": base_var + t}, m)
                                 for t in times])


def from_family_spec(d: dict) -> Peacock:
    """Expand ``{"family": ..., "times": [...], "m": ...}`` into a peacock."""
    fam = d.get("family")
    times = [float(t) for t in d["times"]]
    m = int(d["m"])
    if fam == "uniform_growing":
        return uniform_growing_peacock(times, m, d.get("width", "linear"))
    if fam == "brownian":
        return brownian_peacock(times, m, float(d.get("base_var", 1.0)))
    raise ValueError(f"unknown peacock family {fam!r}")
