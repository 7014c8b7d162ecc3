"""Two-marginal couplings of atomic measures."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import config
from .measure import Measure


@dataclass(frozen=True)
class Coupling:
    """Weights ``w[i, j]`` of the pair ``(xs[i], ys[j])``."""

    xs: np.ndarray
    ys: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        w = np.asarray(self.w, dtype=float).reshape(xs.size, ys.size)
        if np.any(w < -config.tolerance()):
            raise ValueError("coupling weights must be nonnegative")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "w", np.maximum(w, 0.0))

    @property
    def source(self) -> Measure:
        return Measure(self.xs, self.w.sum(axis=1))

    @property
    def target(self) -> Measure:
        return Measure(self.ys, self.w.sum(axis=0))

    def martingale_defect(self) -> float:
        """Largest |sum_j w_ij (y_j - x_i)| over source atoms."""
        d = self.w @ self.ys - self.w.sum(axis=1) * self.xs
        return float(np.max(np.abs(d))) if d.size else 0.0

    @property
    def is_martingale(self) -> bool:
        return self.martingale_defect() <= config.tolerance()

    def expectation(self, cost) -> float:
        """E[c(X, Y)] for a vectorized cost ``c(x, y)``."""
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        return float(np.sum(self.w * cost(X, Y)))

    def to_dict(self) -> dict:
        return {"xs": self.xs.tolist(), "ys": self.ys.tolist(), "w": self.w.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Coupling":
        return cls(np.asarray(d["xs"]), np.asarray(d["ys"]), np.asarray(d["w"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())
