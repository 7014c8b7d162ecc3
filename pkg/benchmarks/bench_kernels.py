"""Compare the compiled kernels with their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from shadowmart import _kernels_py as pure
from shadowmart.dilation import push_forward
from shadowmart.measure import Measure

try:
    from shadowmart import _kernels as compiled
except ImportError:
    compiled = None


def cases(rng):
    n = 400
    x = np.cumsum(rng.uniform(0.1, 1.0, n))
    y = rng.normal(size=n)
    yield "lower_hull n=400", lambda k: k.lower_hull(x, y, 0, n - 1)

    F = np.linspace(-3.0, 3.0, 61)
    offsets = np.array([0, F.size], dtype=np.intp)
    pts = rng.uniform(-3.0, 3.0, 200_000)
    u = rng.random(pts.size)
    group = np.zeros(pts.size, dtype=np.intp)
    yield "dilate_step 200k paths", lambda k: k.dilate_step(pts, u, F, offsets, group, 1e-9)

    grid = np.linspace(-4.0, 4.0, 161)
    mu0 = Measure(grid[::4], rng.uniform(0.1, 1.0, grid[::4].size))
    mu0 = Measure(mu0.xs, mu0.ws / mu0.mass)
    mu = push_forward(mu0, np.concatenate(([-4.0], grid[1:-1:2], [4.0])))
    nu = Measure(mu0.xs, 0.4 * mu0.ws)
    yield "shadow_weights 41 into 80 atoms", lambda k: k.shadow_weights(
        nu.xs, nu.ws, mu.xs, mu.ws, True, 1e-9, 1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<34}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, fn in cases(rng):
        t_py = min(timeit.repeat(lambda: fn(pure), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<34}{t_py:>14.3f}{'n/a':>14}{'':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<34}{t_py:>14.3f}{t_cy:>14.3f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
