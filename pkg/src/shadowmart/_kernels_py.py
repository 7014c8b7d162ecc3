"""Pure-Python reference implementations of the hot kernels.

These are used when the compiled extension is unavailable and serve as the
baseline in the kernel benchmark.
"""

import numpy as np


def lower_hull(x: np.ndarray, y: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Indices of the lower convex hull of points ``lo..hi`` (inclusive).

    ``x`` must be strictly increasing. Collinear points are dropped.
    """
    xs = x.tolist()
    ys = y.tolist()
    hull: list[int] = []
    for i in range(lo, hi + 1):
        xi = xs[i]
        yi = ys[i]
        while len(hull) >= 2:
            j = hull[-1]
            k = hull[-2]
            # drop j if it lies on or above the segment k -> i
            if (xs[j] - xs[k]) * (yi - ys[k]) - (ys[j] - ys[k]) * (xi - xs[k]) <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.intp)


def dilate_step(
    x: np.ndarray,
    u: np.ndarray,
    targets: np.ndarray,
    offsets: np.ndarray,
    group: np.ndarray,
    snap: float,
) -> np.ndarray:
    """One Kellerer-dilation draw per path.

    Path ``p`` uses the sorted target set ``targets[offsets[g]:offsets[g+1]]``
    with ``g = group[p]``. It moves to the upper neighbour with probability
    ``(x - lo) / (hi - lo)`` using uniform ``u[p]``; points within ``snap`` of a
    target stay put. Points outside the hull raise ``ValueError``.
    """
    out = np.empty_like(x)
    for g in np.unique(group):
        sel = np.nonzero(group == g)[0]
        F = targets[offsets[g]:offsets[g + 1]]
        xs = x[sel]
        if np.any(xs < F[0] - snap) or np.any(xs > F[-1] + snap):
            raise ValueError("point outside the target hull")
        j = np.searchsorted(F, xs, side="left")
        j = np.clip(j, 0, F.size - 1)
        # nearest target on either side
        hit_hi = np.abs(F[j] - xs) <= snap
        jm = np.clip(j - 1, 0, F.size - 1)
        hit_lo = np.abs(F[jm] - xs) <= snap
        hi = F[j]
        lo = F[jm]
        gap = np.where(hi > lo, hi - lo, 1.0)
        p_up = (xs - lo) / gap
        res = np.where(u[sel] < p_up, hi, lo)
        res = np.where(hit_lo, lo, res)
        res = np.where(hit_hi, hi, res)
        out[sel] = res
    return out


def _envelope(g: np.ndarray, f: np.ndarray, sl: float, sr: float) -> np.ndarray:
    scale = 1e-13 * (1.0 + float(np.max(np.abs(f))) + max(abs(sl), abs(sr)) * float(np.max(np.abs(g))))
    left_key = f - sl * g
    a = int(np.nonzero(left_key <= left_key.min() + scale)[0][-1])
    right_key = f - sr * g
    b = int(np.nonzero(right_key <= right_key.min() + scale)[0][0])
    if b <= a:
        return np.asarray([a], dtype=np.intp)
    return lower_hull(g, f, a, b)


def shadow_weights(xn: np.ndarray, wn: np.ndarray, xm: np.ndarray, wm: np.ndarray,
                   check: bool, tol: float, merge_tol: float):
    """Shadow of ``(xn, wn)`` in ``(xm, wm)`` on their merged grid.

    Returns ``(status, grid, weights)``; status 0 is success, 1 means the
    source is already a submeasure of the target, 2 a failed convex-positive
    precondition and 3 weights negative beyond ``tol``.
    """
    xs = np.sort(np.concatenate((xn, xm)))
    g = xs[np.concatenate(([True], np.diff(xs) >= merge_tol))]
    gn = np.zeros(g.size)
    gm = np.zeros(g.size)
    gn[np.minimum(np.searchsorted(g, xn - merge_tol), g.size - 1)] = wn
    gm[np.minimum(np.searchsorted(g, xm - merge_tol), g.size - 1)] = wm
    if np.all(gn <= gm):
        return 1, g, gn
    mass_n = float(gn.sum())
    mass_m = float(gm.sum())
    # potentials on the grid split into calls and puts
    diff = gm - gn
    cw = np.cumsum(diff)
    cm = np.cumsum(diff * g)
    lw = cw - diff
    lm = cm - diff * g
    calls = (cm[-1] - cm) - g * (cw[-1] - cw)
    puts = g * lw - lm
    if check and not (mass_n <= mass_m + tol and calls.min() >= -tol and puts.min() >= -tol):
        return 2, g, gn
    f = calls + puts
    sl = mass_n - mass_m
    idx = _envelope(g, f, sl, -sl)
    slopes = np.concatenate(([sl], np.diff(f[idx]) / np.diff(g[idx]), [-sl]))
    w = gm.copy()
    w[idx] -= 0.5 * np.diff(slopes)
    np.minimum(w, gm, out=w)
    if w.min() < -tol:
        return 3, g, w
    return 0, g, w
