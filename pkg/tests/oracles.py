"""Independent reference implementations used as test oracles."""

import numpy as np


def brute_front(values) -> list[int]:
    """O(n^2) pairwise dominance; exact duplicates keep the lowest index."""
    v = np.asarray(values, dtype=float)
    keep = []
    for i in range(len(v)):
        beaten = False
        for j in range(len(v)):
            if j == i:
                continue
            if np.all(v[j] <= v[i]) and (np.any(v[j] < v[i]) or j < i):
                beaten = True
                break
        if not beaten:
            keep.append(i)
    return keep


def _weakly_dominated(point, front, eps) -> bool:
    return bool(np.any(np.all(np.where(front <= eps, True, front <= point + 1e-15), axis=1)))


def bisect_fitness(front, cand, eps=1e-9, iters=200) -> float:
    """Fitness as 1/s for the smallest scale s at which s*cand is weakly dominated.

    Found by bisection on the scale rather than by the closed-form ratio.
    """
    front = np.asarray(front, dtype=float)
    cand = np.asarray(cand, dtype=float)
    if not _weakly_dominated(cand * 1e12, front, eps):
        return 0.0
    lo, hi = 0.0, 1.0
    while not _weakly_dominated(cand * hi, front, eps):
        hi *= 2.0
    if _weakly_dominated(cand * 0.0, front, eps):
        return np.inf
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _weakly_dominated(cand * mid, front, eps):
            hi = mid
        else:
            lo = mid
    return 1.0 / hi


def dijkstra_cost(blocked: np.ndarray, start: tuple[int, int], goal: tuple[int, int], res: float) -> float:
    """Uniform-cost search over the same 8-connected, no-corner-cutting graph."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    h, w = blocked.shape
    rows, cols, cost = [], [], []
    for r in range(h):
        for c in range(w):
            if blocked[r, c]:
                continue
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if not (dr or dc):
                        continue
                    nr, nc = r + dr, c + dc
                    if not (0 <= nr < h and 0 <= nc < w) or blocked[nr, nc]:
                        continue
                    if dr and dc and (blocked[r + dr, c] or blocked[r, c + dc]):
                        continue
                    rows.append(r * w + c)
                    cols.append(nr * w + nc)
                    cost.append(res * (np.sqrt(2.0) if dr and dc else 1.0))
    graph = coo_matrix((cost, (rows, cols)), shape=(h * w, h * w)).tocsr()
    dist = dijkstra(graph, indices=start[0] * w + start[1])
    return float(dist[goal[0] * w + goal[1]])
