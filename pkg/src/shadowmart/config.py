"""Global numerical tolerances.

The weight tolerance can be overridden with the ``SHADOW_TOL`` environment
variable (read at import) or at runtime with :func:`set_tolerance`.
"""

import os

#: positions closer than this are merged into one atom
MERGE_TOL = 1e-12

#: absolute weights below this (relative to total mass) are treated as rounding noise
NOISE_TOL = 1e-13


def _initial_tol() -> float:
    raw = os.environ.get("SHADOW_TOL")
    if raw is None:
        return 1e-9
    value = float(raw)
    if not value > 0:
        raise ValueError(f"SHADOW_TOL must be positive, got {raw!r}")
    return value


_TOL = _initial_tol()


def tolerance() -> float:
    """Return the current absolute weight tolerance."""
    return _TOL


def set_tolerance(value: float) -> None:
    """Set the absolute weight tolerance used by comparisons."""
    global _TOL
    if not value > 0:
        raise ValueError("tolerance must be positive")
    _TOL = float(value)
