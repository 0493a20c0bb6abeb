# cython: language_level=3
"""Compiled inner loops. Semantics mirror ``ctxnav._pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, INFINITY, fabs

cnp.import_array()


def raycast(const unsigned char[:, ::1] occ, double ox, double oy, double res,
            double sx, double sy, const double[::1] dx, const double[::1] dy,
            double range_max):
    cdef Py_ssize_t n = dx.shape[0]
    cdef Py_ssize_t height = occ.shape[0], width = occ.shape[1]
    out_arr = np.full(n, INFINITY)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t b
    cdef long ix, iy, ix0, iy0, step_x, step_y
    cdef double tmx, tmy, tdx, tdy, t, ddx, ddy
    ix0 = <long>floor((sx - ox) / res)
    iy0 = <long>floor((sy - oy) / res)
    for b in range(n):
        ix = ix0
        iy = iy0
        ddx = dx[b]
        ddy = dy[b]
        if ddx > 0.0:
            step_x = 1
            tmx = ((ix + 1) * res + ox - sx) / ddx
            tdx = res / ddx
        elif ddx < 0.0:
            step_x = -1
            tmx = (ix * res + ox - sx) / ddx
            tdx = -res / ddx
        else:
            step_x = 0
            tmx = INFINITY
            tdx = INFINITY
        if ddy > 0.0:
            step_y = 1
            tmy = ((iy + 1) * res + oy - sy) / ddy
            tdy = res / ddy
        elif ddy < 0.0:
            step_y = -1
            tmy = (iy * res + oy - sy) / ddy
            tdy = -res / ddy
        else:
            step_y = 0
            tmy = INFINITY
            tdy = INFINITY
        while True:
            if tmx < tmy:
                t = tmx
                tmx = tmx + tdx
                ix = ix + step_x
            else:
                t = tmy
                tmy = tmy + tdy
                iy = iy + step_y
            if t > range_max:
                break
            if ix < 0 or iy < 0 or ix >= width or iy >= height:
                break
            if occ[iy, ix]:
                out[b] = t
                break
    return out_arr


def nondominated(const double[:, ::1] values):
    cdef Py_ssize_t n = values.shape[0], k = values.shape[1]
    keep_arr = np.ones(n, dtype=np.bool_)
    cdef cnp.npy_bool[::1] keep = keep_arr
    cdef Py_ssize_t i, j, c
    cdef bint all_le, any_lt
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            all_le = True
            any_lt = False
            for c in range(k):
                if values[j, c] > values[i, c]:
                    all_le = False
                    break
                if values[j, c] < values[i, c]:
                    any_lt = True
            if all_le and (any_lt or j < i):
                keep[i] = False
                break
    return keep_arr


def gauge(const double[:, ::1] front, const double[:, ::1] cands, double eps):
    cdef Py_ssize_t m = front.shape[0], n = cands.shape[0], k = cands.shape[1]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t p, f, c
    cdef double rho, worst, r, fv, pv
    cdef bint at_utopia
    for p in range(n):
        at_utopia = True
        for c in range(k):
            if cands[p, c] > eps:
                at_utopia = False
                break
        rho = INFINITY
        for f in range(m):
            worst = 0.0
            for c in range(k):
                fv = front[f, c]
                pv = cands[p, c]
                if fv <= eps:
                    r = 0.0
                elif pv <= eps:
                    r = INFINITY
                else:
                    r = fv / pv
                if r > worst:
                    worst = r
            if worst == 0.0 and at_utopia:
                worst = 1.0
            if worst < rho:
                rho = worst
        if rho == INFINITY:
            out[p] = 0.0
        elif rho == 0.0:
            out[p] = INFINITY
        else:
            out[p] = 1.0 / rho
    return out_arr
