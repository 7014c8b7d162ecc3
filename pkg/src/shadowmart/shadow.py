"""Simple and obstructed shadows, their calculus, and shadow tables.

The shadow of ``nu`` in ``mu`` is the convex-order minimal measure ``eta``
with ``nu <=_c eta <=_+ mu``. Its potential is
``U(mu) - conv(U(mu) - U(nu))``, which is computed exactly on the merged
support of the two measures.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from . import config, kernels
from .errors import NotAPeacock, OrderViolation, ResidualNotPeacock
from .measure import (
    Measure,
    check_convex_order,
    check_positive_order,
    max_abs_diff,
    scale,
    subtract,
)


@dataclass
class Peacock:
    """Finite family of measures increasing in convex order."""

    times: list[float]
    marginals: list[Measure]
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.times = [float(t) for t in self.times]
        self.marginals = list(self.marginals)
        if len(self.times) != len(self.marginals) or not self.times:
            raise NotAPeacock("need one marginal per time and at least one time")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise NotAPeacock("times must be strictly increasing")
        if self.validate:
            for i in range(len(self.marginals) - 1):
                if not check_convex_order(self.marginals[i], self.marginals[i + 1]):
                    raise NotAPeacock(
                        f"marginal {i} is not below marginal {i + 1} in convex order")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def mass(self) -> float:
        return self.marginals[0].mass

    def prefix(self, i: int) -> list[Measure]:
        return self.marginals[: i + 1]

    def doubled(self) -> list[Measure]:
        return [scale(m, 2.0) for m in self.marginals]

    def to_dict(self) -> dict:
        return {"times": self.times, "marginals": [m.to_dict() for m in self.marginals]}

    @classmethod
    def from_dict(cls, d: dict, validate: bool = True) -> "Peacock":
        return cls(list(d["times"]), [Measure.from_dict(m) for m in d["marginals"]], validate)


@dataclass
class ShadowTable:
    """Shadows ``entries[k][i]`` of ``nu^{alphas[k]}`` through the prefix up to ``times[i]``."""

    alphas: list[float]
    times: list[float]
    entries: list[list[Measure]]

    def column(self, i: int) -> list[Measure]:
        return [row[i] for row in self.entries]

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "times": list(self.times),
            "entries": [[m.to_dict() for m in row] for row in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShadowTable":
        entries = [[Measure.from_dict(m) for m in row] for row in d["entries"]]
        return cls(list(d["alphas"]), list(d["times"]), entries)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class CheckReport:
    """Outcome of a numerical identity check."""

    ok: bool
    deviation: float
    detail: str = ""


def simple_shadow(nu: Measure, mu: Measure, check: bool = True) -> Measure:
    """Shadow of ``nu`` in ``mu``; requires ``nu <=_{c,+} mu``."""
    if len(nu) == 0:
        return Measure.zero()
    tol = config.tolerance()
    status, g, w = kernels.shadow_weights(nu.xs, nu.ws, mu.xs, mu.ws, check, tol, config.MERGE_TOL)
    if status == 1:
        return nu
    if status == 2:
        raise OrderViolation("source is not below target in the convex-positive order", 0)
    if status == 3:
        raise OrderViolation("shadow weights went negative beyond tolerance", 0)
    keep = w > config.NOISE_TOL * max(1.0, mu.mass)
    return Measure._raw(g[keep], w[keep])


def obstructed_shadow(nu: Measure, chain: Sequence[Measure], check: bool = True) -> Measure:
    """Iterated simple shadows through ``chain`` from left to right.

    Raises :class:`OrderViolation` carrying the index of the first link whose
    convex-positive precondition fails.
    """
    eta = nu
    for i, mu in enumerate(chain):
        eta = _link(eta, mu, i, check)
    return eta


def shadow_path(nu: Measure, chain: Sequence[Measure], check: bool = True) -> list[Measure]:
    """All intermediate obstructed shadows (one per prefix of ``chain``)."""
    out = []
    eta = nu
    for i, mu in enumerate(chain):
        eta = _link(eta, mu, i, check)
        out.append(eta)
    return out


def _link(eta: Measure, mu: Measure, i: int, check: bool) -> Measure:
    try:
        return simple_shadow(eta, mu, check)
    except OrderViolation as exc:
        raise OrderViolation(f"shadow is not below chain element {i}: {exc}", i) from exc


def residual_chain(chain: Sequence[Measure], nu: Measure) -> list[Measure]:
    """Chain with the obstructed shadow of ``nu`` removed at every step."""
    return [subtract(mu, s) for mu, s in zip(chain, shadow_path(nu, chain))]


def residual_peacock(p: Peacock, nu: Measure) -> Peacock:
    """Peacock ``(mu_t - S^{mu up to t}(nu))_t``; masses below 1 are allowed."""
    rest = residual_chain(p.marginals, nu)
    try:
        return Peacock(p.times, rest, validate=True)
    except NotAPeacock as exc:
        raise ResidualNotPeacock(str(exc)) from exc


def shadow_associativity_check(nu1: Measure, nu2: Measure, chain: Sequence[Measure]) -> CheckReport:
    """Compare ``S(nu1 + nu2)`` with ``S(nu1) + S_residual(nu2)``."""
    tol = config.tolerance()
    lhs = obstructed_shadow(nu1 + nu2, chain)
    rest = residual_chain(chain, nu1)
    rhs = obstructed_shadow(nu1, chain) + obstructed_shadow(nu2, rest)
    dev = max_abs_diff(lhs, rhs)
    return CheckReport(dev <= tol, dev)


def shadow_homogeneity_check(nu: Measure, chain: Sequence[Measure], c: float) -> CheckReport:
    """Compare ``S^{c chain}(c nu)`` with ``c S^{chain}(nu)``."""
    if not c > 0:
        raise ValueError("scale factor must be positive")
    tol = config.tolerance()
    lhs = obstructed_shadow(scale(nu, c), [scale(m, c) for m in chain])
    rhs = scale(obstructed_shadow(nu, chain), c)
    dev = max_abs_diff(lhs, rhs)
    return CheckReport(dev <= tol * max(1.0, c), dev)


def shadow_row(p: Peacock, nu: Measure) -> list[Measure]:
    """Obstructed shadows of ``nu`` through every prefix of ``p``."""
    return shadow_path(nu, p.marginals)


def shadow_table(p: Peacock, param, alphas: Sequence[float], threads: int = 1,
                 validate: bool = True) -> ShadowTable:
    """Tabulate ``S^{mu up to t_i}(param.at_alpha(alpha_k))``.

    ``param`` is any object with an ``at_alpha`` method. Rows are independent
    and are spread over ``threads`` worker threads when ``threads > 1``.
    """
    alphas = [float(a) for a in alphas]
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha grid must be sorted")

    def row(a: float) -> list[Measure]:
        return shadow_row(p, param.at_alpha(a))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            entries = list(ex.map(row, alphas))
    else:
        entries = [row(a) for a in alphas]
    table = ShadowTable(alphas, list(p.times), entries)
    if validate:
        validate_table(table, p)
    return table


def validate_table(table: ShadowTable, p: Peacock) -> None:
    """Check the structural invariants of a shadow table (raises on failure)."""
    tol = config.tolerance()
    for k, row in enumerate(table.entries):
        for i, e in enumerate(row):
            if abs(e.mass - table.alphas[k] * p.mass) > tol * max(1.0, p.mass):
                raise ResidualNotPeacock(f"entry ({k},{i}) has mass {e.mass}")
            if not check_positive_order(e, p.marginals[i]):
                raise ResidualNotPeacock(f"entry ({k},{i}) is not a submeasure of the marginal")
            if i and not check_convex_order(row[i - 1], e):
                raise ResidualNotPeacock(f"row {k} is not convex-increasing at time {i}")
            if k and not check_positive_order(table.entries[k - 1][i], e):
                raise ResidualNotPeacock(f"column {i} is not increasing at alpha index {k}")
