import os
import subprocess
import sys

import numpy as np
import pytest

from shadowmart import _kernels_py, config, kernels
from shadowmart.measure import Measure

from conftest import random_measure, random_spread

try:
    from shadowmart import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_dispatch_reports_backend():
    assert kernels.BACKEND in ("cython", "python")
    if compiled is not None and os.environ.get("SHADOWMART_PURE", "") == "":
        assert kernels.BACKEND == "cython"


def test_pure_switch():
    code = "from shadowmart import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SHADOWMART_PURE="1")
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert r.stdout.strip() == "python"


def test_lower_hull_reference():
    x = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    y = np.array([0.0, -1.0, 0.5, -1.0, 0.0])
    assert _kernels_py.lower_hull(x, y, 0, 4).tolist() == [0, 1, 3, 4]
    # collinear interior points are dropped
    assert _kernels_py.lower_hull(x, x * 2.0, 0, 4).tolist() == [0, 4]


def test_dilate_step_reference():
    x = np.array([0.0, 0.5, 1.0, -1.0])
    u = np.array([0.1, 0.9, 0.5, 0.5])
    F = np.array([-1.0, 1.0, -2.0, 0.0, 2.0])
    offsets = np.array([0, 2, 5], dtype=np.intp)
    group = np.array([0, 1, 1, 0], dtype=np.intp)
    out = _kernels_py.dilate_step(x, u, F, offsets, group, 1e-9)
    # u < p_up moves to the upper neighbour
    assert out.tolist() == [1.0, 0.0, 0.0, -1.0]
    with pytest.raises(ValueError):
        _kernels_py.dilate_step(np.array([3.0]), u[:1], F, offsets, group[:1], 1e-9)


@needs_ext
def test_lower_hull_equivalence(rng):
    for _ in range(200):
        n = int(rng.integers(1, 30))
        x = np.cumsum(rng.uniform(0.1, 1.0, n))
        y = rng.normal(size=n)
        lo = int(rng.integers(0, n))
        hi = int(rng.integers(lo, n))
        assert np.array_equal(compiled.lower_hull(x, y, lo, hi), _kernels_py.lower_hull(x, y, lo, hi))


@needs_ext
def test_dilate_step_equivalence(rng):
    targets = [np.unique(rng.choice(np.arange(-6, 7) / 2, 5)) for _ in range(4)]
    targets = [np.concatenate(([-3.0], t, [3.0])) for t in targets]
    targets = [np.unique(t) for t in targets]
    offsets = np.concatenate(([0], np.cumsum([t.size for t in targets]))).astype(np.intp)
    flat = np.concatenate(targets)
    n = 5000
    group = rng.integers(0, 4, n).astype(np.intp)
    x = rng.uniform(-3, 3, n)
    x[:100] = flat[rng.integers(0, flat.size, 100)]
    u = rng.random(n)
    a = compiled.dilate_step(x, u, flat, offsets, group, 1e-9)
    b = _kernels_py.dilate_step(x, u, flat, offsets, group, 1e-9)
    assert np.array_equal(a, b)


@needs_ext
def test_shadow_weights_equivalence(rng):
    tol, merge = config.tolerance(), config.MERGE_TOL
    checked = 0
    for _ in range(400):
        mu = random_measure(rng, 6)
        target = random_spread(rng, mu)
        nu = Measure(mu.xs, mu.ws * rng.uniform(0.05, 1.0, len(mu)))
        if rng.random() < 0.2:
            nu = random_measure(rng, 4, mass=0.5)
        for check in (True, False):
            sa, ga, wa = compiled.shadow_weights(nu.xs, nu.ws, target.xs, target.ws, check, tol, merge)
            sb, gb, wb = _kernels_py.shadow_weights(nu.xs, nu.ws, target.xs, target.ws, check, tol, merge)
            assert sa == sb
            if sa == 0:
                assert np.array_equal(ga, gb)
                assert np.max(np.abs(wa - wb)) <= 1e-14
                checked += 1
    assert checked > 300


@needs_ext
def test_read_only_inputs():
    x = np.array([-1.0, 1.0])
    w = np.array([0.5, 0.5])
    x.setflags(write=False)
    w.setflags(write=False)
    status, g, wt = compiled.shadow_weights(np.array([0.0]), np.array([0.5]), x, w, True, 1e-9, 1e-12)
    assert status == 0
    # weights live on the merged support of both inputs
    assert g.tolist() == [-1.0, 0.0, 1.0]
    assert wt.tolist() == [0.25, 0.0, 0.25]
