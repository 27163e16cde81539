"""Archetype initialization strategies.

Every initializer takes ``(X, k, rng)`` and returns an :class:`ArchetypeSet`
whose rows are data points.  Random draws happen in a fixed order on the
caller's :class:`~aapp.matrix.RngStream`: the first pick, then one draw per
subsequent pick in algorithm order (the MCMC variant draws a start index and
then a proposal index and an acceptance uniform per chain step).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CardinalityError, ConfigError, DegenerateError
from .matrix import categorical_draw
from .simplex import batch_dist

# residuals at or below this are treated as exactly zero selection mass
ZERO_RESIDUAL = 1e-12

DEGENERATE_RESIDUAL = "degenerate-residual"
MC_DUPLICATE = "mc-duplicate-fallback"


@dataclass(frozen=True)
class ArchetypeSet:
    source_indices: tuple
    Z: np.ndarray
    flags: tuple = field(default=())

    @property
    def k(self):
        return len(self.source_indices)


@dataclass(frozen=True)
class ChainConfig:
    """Chain length for AA++MC, given directly or as a fraction of ``n``."""

    length: int = None
    fraction: float = None

    def __post_init__(self):
        if (self.length is None) == (self.fraction is None):
            raise ConfigError("give exactly one of length or fraction")
        if self.length is not None and self.length < 2:
            raise ConfigError("chain length must be >= 2")
        if self.fraction is not None and not 0 < self.fraction <= 1:
            raise ConfigError("chain fraction must lie in (0, 1]")

    def resolve(self, n):
        if self.length is not None:
            return int(self.length)
        # round half away from zero so the result does not depend on the
        # language's rounding convention
        return max(2, int(np.floor(self.fraction * n + 0.5)))


def _check(X, k):
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise CardinalityError(f"k must lie in [1, {n}], got {k}")
    return X, n


def _result(X, indices, flags=()):
    indices = tuple(int(i) for i in indices)
    return ArchetypeSet(indices, np.array(X[list(indices)]), tuple(flags))


def _uniform_unselected(rng, n, selected, count):
    """Draw ``count`` distinct indices uniformly from those not in ``selected``."""
    pool = np.flatnonzero(~selected)
    picks = []
    for t in range(count):
        j = t + rng.integers(pool.size - t)
        pool[t], pool[j] = pool[j], pool[t]
        picks.append(int(pool[t]))
    return picks


def init_uniform(X, k, rng):
    """k distinct indices, uniformly without replacement (partial Fisher-Yates)."""
    X, n = _check(X, k)
    return _result(X, _uniform_unselected(rng, n, np.zeros(n, bool), k))


def _first(rng, n, first):
    if first is None:
        return rng.integers(n)
    if not 0 <= first < n:
        raise CardinalityError(f"first index {first} outside [0, {n})")
    return int(first)


def init_furthest_first(X, k, rng, first=None):
    """Greedy max-min selection after a uniform first pick.

    Passing ``first`` pins the starting index (no draw is consumed).
    """
    X, n = _check(X, k)
    first = _first(rng, n, first)
    picks = [first]
    selected = np.zeros(n, bool)
    selected[first] = True
    mind = np.sum((X - X[first]) ** 2, axis=1)
    while len(picks) < k:
        score = np.where(selected, -np.inf, mind)
        j = int(np.argmax(score))
        picks.append(j)
        selected[j] = True
        mind = np.minimum(mind, np.sum((X - X[j]) ** 2, axis=1))
    return _result(X, picks)


def init_furthest_sum(X, k, rng, first=None):
    """Greedy max-sum-of-distances selection with the first pick replaced.

    After ``k`` picks the uniformly drawn starting point is dropped and one
    more max-sum pick is appended.  The dropped point is eligible again.
    ``k == 1`` degenerates to a single uniform draw.
    """
    X, n = _check(X, k)
    first = _first(rng, n, first)
    if k == 1:
        return _result(X, [first])

    def dist(i):
        return np.sqrt(np.sum((X - X[i]) ** 2, axis=1))

    picks = [first]
    selected = np.zeros(n, bool)
    selected[first] = True
    sums = dist(first)
    while len(picks) < k:
        j = int(np.argmax(np.where(selected, -np.inf, sums)))
        picks.append(j)
        selected[j] = True
        sums += dist(j)
    sums -= dist(first)
    selected[first] = False
    picks = picks[1:]
    picks.append(int(np.argmax(np.where(selected, -np.inf, sums))))
    return _result(X, picks)


def _d2_sampling(X, k, rng, residuals, first):
    n = X.shape[0]
    first = _first(rng, n, first)
    picks = [first]
    selected = np.zeros(n, bool)
    selected[first] = True
    state = None
    while len(picks) < k:
        d, state = residuals(picks, state)
        d = np.where(d <= ZERO_RESIDUAL, 0.0, d)
        try:
            j = categorical_draw(d, rng)
        except DegenerateError:
            rest = _uniform_unselected(rng, n, selected, k - len(picks))
            return _result(X, picks + rest, [DEGENERATE_RESIDUAL])
        picks.append(j)
        selected[j] = True
    return _result(X, picks)


def init_aapp(X, k, rng, first=None):
    """AA++: sample proportional to the squared distance to the current hull.

    Points inside ``conv(Z)`` get zero probability.  If every residual is
    zero the remaining archetypes are drawn uniformly from the unselected
    points and the result is flagged ``degenerate-residual``.
    """
    X, _ = _check(X, k)

    def residuals(picks, state):
        return batch_dist(X, X[picks]), None

    return _d2_sampling(X, k, rng, residuals, first)


def init_kmeanspp(X, k, rng, first=None):
    """D^2 seeding with the distance to the nearest selected point, O(nkd)."""
    X, _ = _check(X, k)

    def residuals(picks, mind):
        new = np.sum((X - X[picks[-1]]) ** 2, axis=1)
        mind = new if mind is None else np.minimum(mind, new)
        return mind, mind

    return _d2_sampling(X, k, rng, residuals, first)


def init_aapp_mc(X, k, chain, rng, first=None):
    """AA++MC: Metropolis-Hastings approximation of AA++ sampling.

    Each archetype after the first is the end state of a chain of ``m``
    states with uniform independent proposals; a proposal ``j`` replaces the
    current state ``i`` when ``d_j / d_i > u`` with ``u ~ Unif[0, 1)``.  A
    current state with zero residual accepts unconditionally.  Exactly ``m``
    hull distances are computed per chain.

    ``chain`` is a :class:`ChainConfig` or a plain chain length.
    """
    X, n = _check(X, k)
    if not isinstance(chain, ChainConfig):
        chain = ChainConfig(length=int(chain))
    m = chain.resolve(n)
    first = _first(rng, n, first)
    picks = [first]
    selected = np.zeros(n, bool)
    selected[first] = True
    flags = []
    while len(picks) < k:
        states = [rng.integers(n)]
        uniforms = []
        for _ in range(m - 1):
            states.append(rng.integers(n))
            uniforms.append(rng.random())
        # distances are pure functions of the candidate; evaluating them in
        # one batch is equivalent to the sequential cached chain
        d = batch_dist(X[states], X[picks])
        d = np.where(d <= ZERO_RESIDUAL, 0.0, d)
        cur, dcur = states[0], d[0]
        for step in range(1, m):
            dj = d[step]
            if dcur == 0.0 or dj / dcur > uniforms[step - 1]:
                cur, dcur = states[step], dj
        if selected[cur]:
            cur = _uniform_unselected(rng, n, selected, 1)[0]
            if MC_DUPLICATE not in flags:
                flags.append(MC_DUPLICATE)
        picks.append(cur)
        selected[cur] = True
    return _result(X, picks, flags)


def gamma_prime_fixed(X, Z):
    """``n * max_i d_i^2 / sum_i d_i^2`` for hull distances to a fixed ``Z``."""
    d = batch_dist(X, getattr(Z, "Z", Z))
    total = d.sum()
    if not total > 0:
        raise DegenerateError("all hull distances are zero")
    return float(len(d) * d.max() / total)


def reduction_lower_bounds(residuals):
    """Expected one-step objective reduction bounds for AA++ and Uniform.

    Picking point i removes at least its own residual r_i, so the expected
    reduction is at least ``sum(r^2) / sum(r)`` under AA++ sampling and
    ``mean(r)`` under uniform sampling.  Returns ``(aapp, uniform)``.
    """
    r = np.asarray(residuals, dtype=float)
    total = r.sum()
    if not total > 0:
        raise DegenerateError("residuals sum to zero")
    return float(r @ r / total), float(total / r.size)


INITIALIZERS = {
    "uniform": init_uniform,
    "furthest-first": init_furthest_first,
    "furthest-sum": init_furthest_sum,
    "aapp": init_aapp,
    "kmeanspp": init_kmeanspp,
}


def initialize(method, X, k, rng, chain=None):
    """Dispatch by method id; ``aapp-mc`` additionally needs ``chain``."""
    if method == "aapp-mc":
        if chain is None:
            raise ConfigError("aapp-mc needs a chain configuration")
        return init_aapp_mc(X, k, chain, rng)
    try:
        fn = INITIALIZERS[method]
    except KeyError:
        raise ConfigError(f"unknown initialization method {method!r}") from None
    return fn(X, k, rng)
