"""Compiled inner loops for NNLS and simplex-constrained least squares.

Status codes returned by the kernels:
    0  success
    1  NNLS iteration cap exceeded
    2  summation constraint violated by more than SUM_TOL after refinement
"""

import numpy as np
from numba import njit

OK = 0
ITERATION_CAP = 1
INFEASIBLE = 2

SUM_TOL = 1e-6
REFINE_TOL = 1e-9
MAX_REFINE = 4
AUGMENT_SCALE = 200.0
JITTER = 1e-12
DUAL_TOL = 1e-13
# KKT gap of the exact objective (normalized units) above which a penalty
# solution is polished; the directly computed gradient is accurate to ~1e-16
POLISH_TOL = 1e-15
# vertex count up to which the k x k Gram matrix is formed once per batch
GRAM_MAX = 512


@njit(cache=True)
def cholesky_solve(H, b, jitter_rel):
    """Solve H x = b for symmetric PSD H; add trace-scaled jitter on failure."""
    p = H.shape[0]
    L = np.zeros((p, p))
    trace = 0.0
    for i in range(p):
        trace += H[i, i]
    shift = 0.0
    for attempt in range(12):
        ok = True
        for j in range(p):
            s = H[j, j] + shift
            for q in range(j):
                s -= L[j, q] * L[j, q]
            if not s > 0.0:
                ok = False
                break
            L[j, j] = np.sqrt(s)
            for i in range(j + 1, p):
                t = H[i, j]
                for q in range(j):
                    t -= L[i, q] * L[j, q]
                L[i, j] = t / L[j, j]
        if ok:
            break
        base = trace if trace > 0.0 else 1.0
        shift = jitter_rel * base * 10.0 ** attempt
    z = np.empty(p)
    for i in range(p):
        s = b[i]
        for q in range(i):
            s -= L[i, q] * z[q]
        z[i] = s / L[i, i]
    x = np.empty(p)
    for i in range(p - 1, -1, -1):
        s = z[i]
        for q in range(i + 1, p):
            s -= L[q, i] * x[q]
        x[i] = s / L[i, i]
    return x


@njit(cache=True)
def _passive_ls(H, cty, C, y, passive, use_gram):
    idx = np.nonzero(passive)[0]
    if use_gram:
        q = idx.size
        Hp = np.empty((q, q))
        bp = np.empty(q)
        for a in range(q):
            bp[a] = cty[idx[a]]
            for b in range(q):
                Hp[a, b] = H[idx[a], idx[b]]
        return idx, cholesky_solve(Hp, bp, JITTER)
    Cp = np.ascontiguousarray(C[:, idx])
    return idx, cholesky_solve(Cp.T @ Cp, Cp.T @ y, JITTER)


@njit(cache=True)
def _lh_core(H, cty, C, y, use_gram, max_iter, dual_tol):
    p = cty.shape[0]
    x = np.zeros(p)
    passive = np.zeros(p, dtype=np.bool_)
    blocked = np.zeros(p, dtype=np.bool_)
    scale = 0.0
    for j in range(p):
        if abs(cty[j]) > scale:
            scale = abs(cty[j])
    tol = dual_tol * scale
    w = cty.copy()
    iters = 0
    while True:
        jnew = -1
        wbest = tol
        for j in range(p):
            if not passive[j] and not blocked[j] and w[j] > wbest:
                wbest = w[j]
                jnew = j
        if jnew < 0:
            return x, iters, OK
        if iters >= max_iter:
            return x, iters, ITERATION_CAP
        iters += 1
        passive[jnew] = True
        idx, s = _passive_ls(H, cty, C, y, passive, use_gram)
        # a freshly freed variable that wants to be non-positive cannot make
        # progress; block it until the iterate moves
        pos_new = -1
        for q in range(idx.size):
            if idx[q] == jnew:
                pos_new = q
        if s[pos_new] <= 0.0:
            passive[jnew] = False
            blocked[jnew] = True
            continue
        inner = 0
        while True:
            feasible = True
            for q in range(idx.size):
                if s[q] <= 0.0:
                    feasible = False
                    break
            if feasible:
                for q in range(idx.size):
                    x[idx[q]] = s[q]
                break
            inner += 1
            alpha = 2.0
            qmin = -1
            for q in range(idx.size):
                if s[q] <= 0.0:
                    xv = x[idx[q]]
                    a = xv / (xv - s[q])
                    if a < alpha:
                        alpha = a
                        qmin = q
            for q in range(idx.size):
                j = idx[q]
                x[j] = x[j] + alpha * (s[q] - x[j])
            x[idx[qmin]] = 0.0
            for q in range(idx.size):
                j = idx[q]
                if x[j] <= 0.0:
                    x[j] = 0.0
                    passive[j] = False
            if not np.any(passive) or inner > 3 * p:
                break
            idx, s = _passive_ls(H, cty, C, y, passive, use_gram)
        blocked[:] = False
        if use_gram:
            w = cty - H @ x
        else:
            w = C.T @ (y - C @ x)


@njit(cache=True)
def lawson_hanson(C, y, max_iter, dual_tol):
    """Active-set NNLS on an explicit matrix. Returns (x, iterations, status)."""
    H = np.empty((0, 0))
    return _lh_core(H, C.T @ y, C, y, False, max_iter, dual_tol)


@njit(cache=True)
def lawson_hanson_gram(H, cty, max_iter, dual_tol):
    """Active-set NNLS given the Gram matrix C^T C and C^T y."""
    C = np.empty((0, 0))
    y = np.empty(0)
    return _lh_core(H, cty, C, y, True, max_iter, dual_tol)


@njit(cache=True)
def augment(G):
    """Normalize G and stack it over a row of M's; returns (C, M, center, scale).

    The vertices are centered on their centroid and divided by their largest
    absolute coordinate.  Because the weights sum to one this changes the
    residual only by the factor ``scale``, and it keeps the penalty row from
    drowning out the geometry when the data are very small, very large or
    far from the origin.
    """
    k, d = G.shape
    center = np.zeros(d)
    for i in range(k):
        for j in range(d):
            center[j] += G[i, j]
    center /= k
    scale = 0.0
    for i in range(k):
        for j in range(d):
            v = abs(G[i, j] - center[j])
            if v > scale:
                scale = v
    if not scale > 0.0:
        scale = 1.0
    # normalized coordinates lie in [-1, 1]
    M = AUGMENT_SCALE * 2.0
    C = np.empty((d + 1, k))
    for i in range(k):
        for j in range(d):
            C[j, i] = (G[i, j] - center[j]) / scale
        C[d, i] = M
    return C, M, center, scale


@njit(cache=True)
def simplex_ls_augmented(G, C, M, Hgeo, H, center, scale, x):
    """Simplex-constrained LS through NNLS on the augmented system.

    ``C, M, center, scale`` come from :func:`augment` and ``Hgeo, H`` from
    :func:`gram`.  A point outside the normalized box shrinks the problem by
    its own radius as well, so the penalty row always dominates.  The
    augmented right-hand side starts at M and is shifted by M * (1 - sum(a))
    between solves until the weights sum to one within REFINE_TOL; this
    removes the O(1/M^2) bias of a plain penalty row.  The returned squared
    residual is recomputed in the original coordinates.
    """
    k, d = G.shape
    use_gram = H.shape[0] == k
    diff = x - center
    reach = np.max(np.abs(diff))
    f = 1.0
    if reach > scale:
        f = scale / reach
        xs = diff / reach
        if use_gram:
            H = Hgeo * (f * f) + M * M
        else:
            C = C.copy()
            C[:d] *= f
    else:
        xs = diff / scale
    y = np.empty(d + 1)
    y[:d] = xs
    if use_gram:
        gx = (C[:d].T @ xs) * f
    else:
        gx = C[:d].T @ xs
    target = M
    total_iters = 0
    a = np.zeros(k)
    for r in range(MAX_REFINE):
        y[d] = target
        if use_gram:
            a, it, st = lawson_hanson_gram(H, gx + M * target, 3 * k, DUAL_TOL)
        else:
            a, it, st = lawson_hanson(C, y, 3 * k, DUAL_TOL)
        total_iters += it
        if st != OK:
            return a, np.nan, total_iters, st
        dev = 1.0 - a.sum()
        if abs(dev) <= REFINE_TOL:
            break
        target += M * dev
    for j in range(k):
        if a[j] < 0.0:
            a[j] = 0.0
    s = a.sum()
    if not abs(s - 1.0) <= SUM_TOL:
        return a, np.nan, total_iters, INFEASIBLE
    a /= s
    if use_gram and f != 1.0:
        V = C[:d] * f
    else:
        V = C[:d]
    _polish(V, xs, a)
    res = G.T @ a - x
    return a, res @ res, total_iters, OK


@njit(cache=True)
def _objective(V, xs, a):
    r = V @ a - xs
    return r @ r


@njit(cache=True)
def _kkt_gap(V, xs, a):
    """Largest gradient on the support minus the smallest overall, and the gradient."""
    g = V.T @ (V @ a - xs)
    hi = -np.inf
    lo = np.inf
    for q in range(a.shape[0]):
        if a[q] > 0.0 and g[q] > hi:
            hi = g[q]
        if g[q] < lo:
            lo = g[q]
    return hi - lo, g


@njit(cache=True)
def _support_ls(V, xs, idx):
    """Minimize ||V b - xs|| over b supported on idx with sum(b) = 1.

    Written in differences to the first support vertex, so the constraint is
    exact and no large penalty terms enter.
    """
    d, k = V.shape
    b = np.zeros(k)
    p0 = idx[0]
    if idx.size == 1:
        b[p0] = 1.0
        return b
    D = np.empty((d, idx.size - 1))
    for c in range(1, idx.size):
        D[:, c - 1] = V[:, idx[c]] - V[:, p0]
    t = np.linalg.lstsq(D, xs - V[:, p0], 1e-13)[0]
    b[p0] = 1.0 - t.sum()
    for c in range(1, idx.size):
        b[idx[c]] = t[c - 1]
    return b


@njit(cache=True)
def _polish(V, xs, a):
    """Exact active-set refinement of a penalty solution, in place.

    The penalty row squeezes geometric detail below about 1e-5 of the hull
    diameter into the last bits of the Gram matrix.  When the KKT gap of the
    exact objective ``||V a - xs||^2`` exceeds POLISH_TOL this runs a primal
    active-set method on the simplex from the current support.  The best
    iterate seen is kept, so the objective never increases.
    """
    k = a.shape[0]
    gap, g = _kkt_gap(V, xs, a)
    if not gap > POLISH_TOL:
        return
    best = a.copy()
    best_obj = _objective(V, xs, a)
    passive = a > 0.0
    blocked = np.zeros(k, dtype=np.bool_)
    added = -1
    for _ in range(3 * k + 10):
        b = _support_ls(V, xs, np.nonzero(passive)[0])
        feasible = True
        for q in range(k):
            if passive[q] and b[q] <= 0.0:
                feasible = False
                break
        if feasible:
            a[:] = b
            obj = _objective(V, xs, a)
            if obj < best_obj:
                best_obj = obj
                best[:] = a
            gap, g = _kkt_gap(V, xs, a)
            if not gap > POLISH_TOL:
                break
            mu = a @ g
            j = -1
            for q in range(k):
                if not passive[q] and not blocked[q] and g[q] < mu - POLISH_TOL and (j < 0 or g[q] < g[j]):
                    j = q
            if j < 0:
                break
            passive[j] = True
            added = j
            continue
        if added >= 0 and b[added] <= 0.0:
            # the new vertex does not help from here
            passive[added] = False
            blocked[added] = True
            added = -1
            continue
        alpha = 1.0
        for q in range(k):
            if passive[q] and b[q] <= 0.0:
                ratio = a[q] / (a[q] - b[q])
                if ratio < alpha:
                    alpha = ratio
        for q in range(k):
            if passive[q]:
                a[q] += alpha * (b[q] - a[q])
                if a[q] <= 0.0:
                    a[q] = 0.0
                    passive[q] = False
        blocked[:] = False
        added = -1
        if not np.any(passive):
            break
    a[:] = best


@njit(cache=True)
def gram(C, k):
    """``(Gs^T Gs, C^T C)`` for the Gram path, or two empty matrices."""
    if k <= GRAM_MAX:
        d = C.shape[0] - 1
        Hgeo = C[:d].T @ C[:d]
        return Hgeo, Hgeo + C[d, 0] * C[d, 0]
    return np.empty((0, 0)), np.empty((0, 0))


@njit(cache=True)
def simplex_ls(G, x):
    C, M, center, scale = augment(G)
    Hgeo, H = gram(C, G.shape[0])
    return simplex_ls_augmented(G, C, M, Hgeo, H, center, scale, x)


@njit(cache=True)
def batch_simplex_ls(G, X):
    """Solve the simplex LS for every row of X against vertex rows G."""
    n = X.shape[0]
    k = G.shape[0]
    C, M, center, scale = augment(G)
    Hgeo, H = gram(C, k)
    W = np.zeros((n, k))
    sq = np.zeros(n)
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        a, r, it, st = simplex_ls_augmented(G, C, M, Hgeo, H, center, scale, X[i])
        W[i] = a
        sq[i] = r
        status[i] = st
        if st != OK:
            break
    return W, sq, status


@njit(cache=True)
def batch_simplex_dist(G, X):
    """Like batch_simplex_ls but keeps only the squared residuals."""
    n = X.shape[0]
    C, M, center, scale = augment(G)
    Hgeo, H = gram(C, G.shape[0])
    sq = np.zeros(n)
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        a, r, it, st = simplex_ls_augmented(G, C, M, Hgeo, H, center, scale, X[i])
        sq[i] = r
        status[i] = st
        if st != OK:
            break
    return sq, status
