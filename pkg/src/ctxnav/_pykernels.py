"""Numpy implementations of the hot kernels.

These are the reference semantics; ``_ckernels`` must agree bit-for-bit
on the same inputs.
"""

import numpy as np


def raycast(occ, ox, oy, res, sx, sy, dx, dy, range_max):
    """Grid traversal (Amanatides-Woo) from ``(sx, sy)`` along unit directions.

    Returns the distance to the boundary of the first occupied cell per
    beam, or ``inf`` when nothing is hit within ``range_max`` or the ray
    leaves the grid.
    """
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    height, width = occ.shape
    n = len(dx)
    out = np.full(n, np.inf)
    ix = np.full(n, int(np.floor((sx - ox) / res)), dtype=np.int64)
    iy = np.full(n, int(np.floor((sy - oy) / res)), dtype=np.int64)

    step_x = np.sign(dx).astype(np.int64)
    step_y = np.sign(dy).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        bx = np.where(dx > 0, (ix + 1) * res + ox - sx, ix * res + ox - sx)
        by = np.where(dy > 0, (iy + 1) * res + oy - sy, iy * res + oy - sy)
        tmx = np.where(dx != 0, bx / dx, np.inf)
        tmy = np.where(dy != 0, by / dy, np.inf)
        tdx = np.where(dx > 0, res / dx, np.where(dx < 0, -res / dx, np.inf))
        tdy = np.where(dy > 0, res / dy, np.where(dy < 0, -res / dy, np.inf))

    active = np.ones(n, dtype=bool)
    while active.any():
        idx = np.nonzero(active)[0]
        use_x = tmx[idx] < tmy[idx]
        t = np.where(use_x, tmx[idx], tmy[idx])
        xi, yi = idx[use_x], idx[~use_x]
        tmx[xi] = tmx[xi] + tdx[xi]
        ix[xi] = ix[xi] + step_x[xi]
        tmy[yi] = tmy[yi] + tdy[yi]
        iy[yi] = iy[yi] + step_y[yi]

        far = t > range_max
        cx, cy = ix[idx], iy[idx]
        outside = (cx < 0) | (cy < 0) | (cx >= width) | (cy >= height)
        stop = far | outside
        hit = np.zeros(len(idx), dtype=bool)
        probe = ~stop
        hit[probe] = occ[cy[probe], cx[probe]] != 0
        out[idx[hit]] = t[hit]
        active[idx[stop | hit]] = False
    return out


def nondominated(values):
    """Mask of rows not dominated by any other row (minimization).

    Exact duplicates keep only their lowest index.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    le = (v[:, None, :] <= v[None, :, :]).all(axis=2)  # le[j, i]: v_j <= v_i
    lt = (v[:, None, :] < v[None, :, :]).any(axis=2)
    earlier = np.tri(n, k=-1, dtype=bool).T  # earlier[j, i]: j < i
    beats = le & (lt | earlier)
    np.fill_diagonal(beats, False)
    return ~beats.any(axis=0)


def gauge(front, cands, eps):
    """Radial gauge fitness of each candidate against the front staircase."""
    f = np.asarray(front, dtype=float)[None, :, :]
    p = np.asarray(cands, dtype=float)[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(f <= eps, 0.0, np.where(p <= eps, np.inf, f / p))
    worst = ratio.max(axis=2)
    at_utopia = (np.asarray(cands) <= eps).all(axis=1)
    worst = np.where((worst == 0.0) & at_utopia[:, None], 1.0, worst)
    rho = worst.min(axis=1)
    with np.errstate(divide="ignore"):
        fit = np.where(np.isinf(rho), 0.0, 1.0 / rho)
    return fit
