"""Alternating least-squares archetypal analysis.

One cycle: solve the simplex-constrained weights A for fixed archetypes,
take the unconstrained least-squares archetypes for that A, pull each of
them back into conv(X) through simplex-constrained weights B, and set
Z = B X.  Each cycle's MSE is reported with the A re-solved against the new
Z, which is also the A that starts the next cycle.

The plain cycle can raise the MSE: the B-step projects the least-squares
archetypes onto conv(X) in the Euclidean metric, not the A^T A metric the
objective uses.  With ``safeguard=True`` (default) such a cycle is replaced by
the exact minimizer of the objective on the segment between the previous and
the proposed B, which keeps the trace non-increasing.  Cycles that already
decrease the MSE are left untouched.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, InputError, SolverError
from .simplex import batch_simplex_ls

SINGULAR_PIVOT = 1e-12
RIDGE = 1e-10


@dataclass(frozen=True)
class SimplexWeights:
    A: np.ndarray
    B: np.ndarray


@dataclass
class FitTrace:
    """Per-stage MSE values with cumulative wall-clock seconds.

    ``stage_mse`` is a list of ``(label, mse)`` pairs: ``"init"`` followed by
    ``"iter-1"`` ... ``"iter-T"``.  ``stage_times[t]`` is the time spent in
    ``fit`` up to and including stage ``t``.  ``safeguarded`` lists
    ``(iteration, step)`` for cycles that needed the line-search fallback.
    """

    stage_mse: list = field(default_factory=list)
    stage_times: list = field(default_factory=list)
    safeguarded: list = field(default_factory=list)
    init_time: float = 0.0
    iter_time: float = 0.0

    @property
    def values(self):
        return [v for _, v in self.stage_mse]


def mse(X, A, Z):
    """Mean squared reconstruction error ``||X - A Z||_F^2 / n``."""
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if A.shape != (X.shape[0], Z.shape[0]) or Z.shape[1] != X.shape[1]:
        raise DimensionError(f"shapes X{X.shape}, A{A.shape}, Z{Z.shape} do not agree")
    R = X - A @ Z
    return float(np.sum(R * R) / X.shape[0])


def update_A(X, Z):
    """Row i is the simplex-constrained LS weight vector of x_i on Z's rows."""
    try:
        A, _ = batch_simplex_ls(Z, X)
    except SolverError as exc:
        raise SolverError(f"update_A: data row {exc.index} failed", index=exc.index, cause=exc) from exc
    return A


def update_Z_unconstrained(A, X):
    """Least-squares archetypes ``(A^T A)^{-1} A^T X`` for fixed A.

    When ``A^T A`` is singular (unused or redundant archetypes) a ridge of
    ``1e-10 * trace(A^T A) / k`` is added before factorizing.
    """
    A = np.asarray(A, dtype=float)
    X = np.asarray(X, dtype=float)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(X))):
        raise InputError("non-finite input to update_Z_unconstrained")
    H = A.T @ A
    rhs = A.T @ X
    k = H.shape[0]
    try:
        L = np.linalg.cholesky(H)
        piv = np.diag(L) ** 2
        singular = piv.min() <= SINGULAR_PIVOT * piv.max()
    except np.linalg.LinAlgError:
        singular = True
    if singular:
        lam = RIDGE * np.trace(H) / k
        if not lam > 0:
            lam = RIDGE
        H = H + lam * np.eye(k)
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(H, lower=True), rhs)


def update_B(X, Z_target):
    """Row j holds the convex weights over data points closest to ``z_j``."""
    try:
        B, _ = batch_simplex_ls(X, Z_target)
    except SolverError as exc:
        raise SolverError(f"update_B: archetype {exc.index} failed", index=exc.index, cause=exc) from exc
    return B


def _initial_B(X, Z0):
    indices = getattr(Z0, "source_indices", None)
    if indices is None:
        return update_B(X, Z0)
    B = np.zeros((len(indices), X.shape[0]))
    B[np.arange(len(indices)), list(indices)] = 1.0
    return B


def _line_search_step(X, A, B_old, B_new):
    """Exact minimizer over t in [0, 1] of ||X - A ((1-t) B_old + t B_new) X||^2."""
    AD = A @ ((B_new - B_old) @ X)
    R0 = X - A @ (B_old @ X)
    denom = float(np.sum(AD * AD))
    if not denom > 0:
        return 0.0
    return float(np.clip(np.sum(R0 * AD) / denom, 0.0, 1.0))


def fit(X, Z0, iters=10, tol=None, safeguard=True):
    """Run ``iters`` alternating cycles starting from archetypes ``Z0``.

    Parameters
    ----------
    X : (n, d) array
    Z0 : ArchetypeSet or (k, d) array
    iters : int
        Number of full cycles; the default matches a fixed ten-iteration
        protocol.
    tol : float, optional
        Stop early once the relative MSE improvement drops to ``tol`` or
        below.  Off by default.
    safeguard : bool
        Replace MSE-increasing cycles with the line-search step (see module
        docstring).  ``False`` runs the plain alternating scheme.

    Returns
    -------
    weights : SimplexWeights
    Z : (k, d) array
    trace : FitTrace
    """
    if iters < 0:
        raise ValueError("iters must be >= 0")
    X = np.asarray(X, dtype=float)
    Z = np.array(getattr(Z0, "Z", Z0), dtype=float)
    trace = FitTrace()
    start = time.perf_counter()
    A = update_A(X, Z)
    B = _initial_B(X, Z0)
    trace.stage_mse.append(("init", mse(X, A, Z)))
    trace.init_time = time.perf_counter() - start
    trace.stage_times.append(trace.init_time)
    for t in range(1, iters + 1):
        prev = trace.stage_mse[-1][1]
        try:
            Zt = update_Z_unconstrained(A, X)
            B_new = update_B(X, Zt)
            Z_new = B_new @ X
            A_new = update_A(X, Z_new)
            value = mse(X, A_new, Z_new)
            if safeguard and value > prev:
                step = _line_search_step(X, A, B, B_new)
                B_new = (1.0 - step) * B + step * B_new
                Z_new = B_new @ X
                A_new = update_A(X, Z_new)
                value = mse(X, A_new, Z_new)
                trace.safeguarded.append((t, step))
        except SolverError as exc:
            raise SolverError(f"iteration {t}: {exc}", index=exc.index, cause=exc) from exc
        A, B, Z = A_new, B_new, Z_new
        trace.stage_mse.append((f"iter-{t}", value))
        trace.stage_times.append(time.perf_counter() - start)
        if tol is not None and prev - value <= tol * prev:
            break
    trace.iter_time = trace.stage_times[-1] - trace.init_time
    return SimplexWeights(A, B), Z, trace
