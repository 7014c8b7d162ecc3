# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_kernels_py`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def lower_hull(const double[::1] x, const double[::1] y, Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t n = hi - lo + 1
    cdef cnp.ndarray[cnp.intp_t, ndim=1] hull = np.empty(max(n, 0), dtype=np.intp)
    cdef Py_ssize_t top = 0, i, j, k
    cdef double xi, yi
    for i in range(lo, hi + 1):
        xi = x[i]
        yi = y[i]
        while top >= 2:
            j = hull[top - 1]
            k = hull[top - 2]
            if (x[j] - x[k]) * (yi - y[k]) - (y[j] - y[k]) * (xi - x[k]) <= 0.0:
                top -= 1
            else:
                break
        hull[top] = i
        top += 1
    return hull[:top].copy()


def dilate_step(const double[::1] x, const double[::1] u, const double[::1] targets,
                const cnp.intp_t[::1] offsets, const cnp.intp_t[::1] group, double snap):
    cdef Py_ssize_t n = x.shape[0], p, a, b, lo, hi, mid
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double xp, flo, fhi
    for p in range(n):
        xp = x[p]
        a = offsets[group[p]]
        b = offsets[group[p] + 1] - 1
        if xp < targets[a] - snap or xp > targets[b] + snap:
            raise ValueError("point outside the target hull")
        # first index with targets[idx] >= xp
        lo = a
        hi = b + 1
        while lo < hi:
            mid = (lo + hi) // 2
            if targets[mid] < xp:
                lo = mid + 1
            else:
                hi = mid
        if lo > b:
            lo = b
        fhi = targets[lo]
        flo = targets[lo - 1] if lo > a else fhi
        if fabs(fhi - xp) <= snap:
            out[p] = fhi
        elif fabs(flo - xp) <= snap:
            out[p] = flo
        elif u[p] < (xp - flo) / (fhi - flo):
            out[p] = fhi
        else:
            out[p] = flo
    return out_arr



def shadow_weights(const double[::1] xn, const double[::1] wn, const double[::1] xm, const double[::1] wm,
                   bint check, double tol, double merge_tol):
    cdef Py_ssize_t nn = xn.shape[0], nm = xm.shape[0], i = 0, j = 0, k = -1, n
    cdef Py_ssize_t top, a, b, p, q, r
    cdef cnp.ndarray[double, ndim=1] g_arr = np.empty(nn + nm, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] gn_arr = np.zeros(nn + nm, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] gm_arr = np.zeros(nn + nm, dtype=np.float64)
    cdef double[::1] g = g_arr, gn = gn_arr, gm = gm_arr
    cdef double x, last = 0.0, mass_n = 0.0, mass_m = 0.0
    cdef bint sub = True, from_n
    # merge the two sorted supports, chaining positions closer than merge_tol
    while i < nn or j < nm:
        from_n = j >= nm or (i < nn and xn[i] <= xm[j])
        x = xn[i] if from_n else xm[j]
        if k < 0 or x - last >= merge_tol:
            k += 1
            g[k] = x
        last = x
        if from_n:
            gn[k] += wn[i]
            mass_n += wn[i]
            i += 1
        else:
            gm[k] += wm[j]
            mass_m += wm[j]
            j += 1
    n = k + 1
    for i in range(n):
        if gn[i] > gm[i]:
            sub = False
            break
    if sub:
        return 1, g_arr[:n].copy(), gn_arr[:n].copy()
    cdef cnp.ndarray[double, ndim=1] f_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] f = f_arr
    cdef double tw = 0.0, tm = 0.0, cw = 0.0, cm = 0.0, d, call, put, fmax = 0.0, gmax = 0.0
    for i in range(n):
        d = gm[i] - gn[i]
        tw += d
        tm += d * g[i]
    for i in range(n):
        d = gm[i] - gn[i]
        # put uses sums strictly below g[i], call uses sums strictly above
        put = g[i] * cw - cm
        cw += d
        cm += d * g[i]
        call = (tm - cm) - g[i] * (tw - cw)
        if check and (call < -tol or put < -tol):
            return 2, g_arr[:n].copy(), gn_arr[:n].copy()
        f[i] = call + put
        if fabs(f[i]) > fmax:
            fmax = fabs(f[i])
        if fabs(g[i]) > gmax:
            gmax = fabs(g[i])
    if check and mass_n > mass_m + tol:
        return 2, g_arr[:n].copy(), gn_arr[:n].copy()
    cdef double sl = mass_n - mass_m, sr = mass_m - mass_n
    cdef double scale = 1e-13 * (1.0 + fmax + fabs(sl) * gmax), kmin, key
    kmin = f[0] - sl * g[0]
    for i in range(1, n):
        key = f[i] - sl * g[i]
        if key < kmin:
            kmin = key
    a = 0
    for i in range(n):
        if f[i] - sl * g[i] <= kmin + scale:
            a = i
    kmin = f[0] - sr * g[0]
    for i in range(1, n):
        key = f[i] - sr * g[i]
        if key < kmin:
            kmin = key
    b = n - 1
    for i in range(n - 1, -1, -1):
        if f[i] - sr * g[i] <= kmin + scale:
            b = i
    if b < a:
        b = a
    cdef cnp.ndarray[cnp.intp_t, ndim=1] hull = np.empty(b - a + 1, dtype=np.intp)
    top = 0
    for i in range(a, b + 1):
        while top >= 2:
            p = hull[top - 1]
            q = hull[top - 2]
            if (g[p] - g[q]) * (f[i] - f[q]) - (f[p] - f[q]) * (g[i] - g[q]) <= 0.0:
                top -= 1
            else:
                break
        hull[top] = i
        top += 1
    cdef cnp.ndarray[double, ndim=1] w_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef double s_prev = sl, s_next, wmin = 0.0
    for i in range(n):
        w[i] = gm[i]
    for r in range(top):
        p = hull[r]
        if r + 1 < top:
            q = hull[r + 1]
            s_next = (f[q] - f[p]) / (g[q] - g[p])
        else:
            s_next = sr
        w[p] -= 0.5 * (s_next - s_prev)
        if w[p] > gm[p]:
            w[p] = gm[p]
        s_prev = s_next
    for i in range(n):
        if w[i] < wmin:
            wmin = w[i]
    if wmin < -tol:
        return 3, g_arr[:n].copy(), w_arr
    return 0, g_arr[:n].copy(), w_arr
