"""Simplex-constrained least squares and point-to-convex-hull distances.

Every solve goes through Lawson-Hanson NNLS on the augmented system
``[G^T; M 1^T] a ~ [x; M]`` with ``M = 200 (1 + max|G|)``, after G and x are
centered on the vertex centroid and divided by the largest centered
coordinate (so ``max|G| = 1`` and ``M = 400``).  The shift and scale leave the
minimizer unchanged because the weights sum to one.  A point farther from the
centroid than the vertices is scaled down to the unit box as well, and the
penalty solution is then polished by an exact active-set pass on the
sum-constrained problem, so nearly coincident vertices and tiny residuals
are resolved to rounding precision.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DimensionError, InputError, SolverError


@dataclass(frozen=True)
class SimplexSolution:
    weights: np.ndarray
    sq_residual: float
    iterations: int


def _as_matrix(G, name):
    G = np.ascontiguousarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] < 1 or G.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise InputError(f"{name} contains non-finite entries")
    return G


def _as_vector(x, d, name):
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != d:
        raise DimensionError(f"{name} must have length {d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} contains non-finite entries")
    return x


def _raise_for_status(status, best, what):
    if status == _kernels.ITERATION_CAP:
        raise ConvergenceError(f"{what}: NNLS iteration cap exceeded", best=best)
    if status == _kernels.INFEASIBLE:
        raise ConvergenceError(
            f"{what}: weights violate the summation constraint by more than "
            f"{_kernels.SUM_TOL:g}",
            best=best,
        )


def nnls(C, y):
    """Non-negative least squares ``min ||C x - y||^2`` s.t. ``x >= 0``.

    Lawson-Hanson active set method; the passive-set subproblems are solved
    through the normal equations with a jittered Cholesky factorization.

    Parameters
    ----------
    C : array_like, shape (m, p)
    y : array_like, shape (m,)

    Returns
    -------
    x : ndarray, shape (p,)

    Raises
    ------
    InputError
        On NaN/Inf input.
    ConvergenceError
        After ``3 p`` outer iterations; ``err.best`` holds the last iterate.
    """
    C = _as_matrix(C, "C")
    y = _as_vector(y, C.shape[0], "y")
    x, _, status = _kernels.lawson_hanson(C, y, 3 * C.shape[1], _kernels.DUAL_TOL)
    _raise_for_status(status, x, "nnls")
    return x


def solve_simplex_ls(G, x):
    """Minimize ``||G^T a - x||^2`` over the probability simplex.

    ``G`` holds the candidate vertices as rows.  The returned
    ``sq_residual`` excludes the augmentation row and is recomputed from
    the (clipped, renormalized) weights.
    """
    G = _as_matrix(G, "G")
    x = _as_vector(x, G.shape[1], "x")
    a, sq, iters, status = _kernels.simplex_ls(G, x)
    _raise_for_status(status, a, "solve_simplex_ls")
    return SimplexSolution(weights=a, sq_residual=float(sq), iterations=int(iters))


def dist_to_hull(x, Z):
    """Squared distance from ``x`` to the convex hull of the rows of ``Z``.

    ``Z`` may be an :class:`~aapp.initializers.ArchetypeSet` or a plain matrix.
    """
    Z = getattr(Z, "Z", Z)
    return solve_simplex_ls(Z, x).sq_residual


def _check_batch(status, best, what):
    bad = np.flatnonzero(status != _kernels.OK)
    if bad.size:
        i = int(bad[0])
        try:
            _raise_for_status(status[i], best[i] if best is not None else None, what)
        except ConvergenceError as exc:
            raise SolverError(f"{what} failed at row {i}: {exc}", index=i, cause=exc) from exc


def batch_simplex_ls(G, X):
    """Row-wise :func:`solve_simplex_ls`; returns ``(weights, sq_residuals)``.

    ``weights`` has shape ``(len(X), len(G))``.
    """
    G = _as_matrix(G, "G")
    X = _as_matrix(X, "X")
    if X.shape[1] != G.shape[1]:
        raise DimensionError(f"X has {X.shape[1]} columns, G has {G.shape[1]}")
    W, sq, status = _kernels.batch_simplex_ls(G, X)
    _check_batch(status, W, "batch_simplex_ls")
    return W, sq


def batch_dist(X, Z):
    """Squared hull distance of every row of ``X`` to ``conv(Z)``."""
    Z = getattr(Z, "Z", Z)
    Z = _as_matrix(Z, "Z")
    X = _as_matrix(X, "X")
    if X.shape[1] != Z.shape[1]:
        raise DimensionError(f"X has {X.shape[1]} columns, Z has {Z.shape[1]}")
    sq, status = _kernels.batch_simplex_dist(Z, X)
    _check_batch(status, None, "batch_dist")
    return sq
