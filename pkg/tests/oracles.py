"""Brute-force reference solvers used by the tests.

None of these share code with the package; they exist only to produce
expected values.
"""

import itertools

import numpy as np


def nnls_enumerate(C, y):
    """Exact NNLS by trying every support set; returns (x, objective)."""
    C = np.asarray(C, float)
    y = np.asarray(y, float)
    p = C.shape[1]
    best_x, best_obj = np.zeros(p), float(y @ y)
    for r in range(1, p + 1):
        for support in itertools.combinations(range(p), r):
            cols = list(support)
            sol, *_ = np.linalg.lstsq(C[:, cols], y, rcond=None)
            if np.any(sol < 0):
                continue
            x = np.zeros(p)
            x[cols] = sol
            obj = float(np.sum((C @ x - y) ** 2))
            if obj < best_obj:
                best_x, best_obj = x, obj
    return best_x, best_obj


def simplex_grid_min(G, x, step=1e-3):
    """Minimum of ||G^T a - x||^2 over a regular grid on the simplex (k <= 3)."""
    G = np.asarray(G, float)
    x = np.asarray(x, float)
    k = G.shape[0]
    ticks = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    if k == 1:
        return float(np.sum((G[0] - x) ** 2))
    if k == 2:
        pts = np.outer(ticks, G[0]) + np.outer(1 - ticks, G[1])
        return float(np.min(np.sum((pts - x) ** 2, axis=1)))
    if k == 3:
        best = np.inf
        for a in ticks:
            b = ticks[ticks <= 1 - a + 1e-12]
            c = np.clip(1 - a - b, 0, None)
            pts = a * G[0] + np.outer(b, G[1]) + np.outer(c, G[2])
            best = min(best, float(np.min(np.sum((pts - x) ** 2, axis=1))))
        return best
    raise ValueError("grid oracle supports k <= 3")


def segment_sq_dist(p, q, x):
    p, q, x = (np.asarray(v, float) for v in (p, q, x))
    d = q - p
    dd = d @ d
    t = 0.0 if dd == 0 else np.clip((x - p) @ d / dd, 0.0, 1.0)
    r = p + t * d - x
    return float(r @ r)


def quantile_sorted(values, q):
    """Linear-interpolation quantile by explicit sorting."""
    v = sorted(values)
    pos = q * (len(v) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (pos - lo) * (v[hi] - v[lo])
