"""Kernel dispatch: compiled extension when importable, else pure Python.

Set ``SHADOWMART_PURE=1`` to force the pure-Python path.
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("SHADOWMART_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

lower_hull = _impl.lower_hull
dilate_step = _impl.dilate_step
shadow_weights = _impl.shadow_weights
