"""Dense data matrices, a portable seeded RNG and elementary numerics.

The generator is xoshiro256** (Blackman & Vigna) whose 256-bit state is
filled from the 64-bit seed with four SplitMix64 outputs.  Derived draws:

* ``random()``      -- ``(next_u64() >> 11) * 2**-53``, a double in [0, 1)
* ``integers(n)``   -- ``((next_u64() >> 11) * n) >> 53``, i.e. the exact
  floor of ``random() * n`` computed in integer arithmetic
* ``normal()``      -- Box-Muller on two ``random()`` draws (cosine branch)
* ``exponential()`` -- ``-log(1 - random())``

Everything is plain 64-bit integer arithmetic, so any language can
reproduce a stream from its seed.
"""

import math

import numpy as np

from .errors import DegenerateError, DimensionError, InputError

_MASK = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def splitmix64(state):
    """Advance a SplitMix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x, r):
    return ((x << r) | (x >> (64 - r))) & _MASK


class RngStream:
    """Seedable xoshiro256** stream. Single owner; do not share across threads."""

    def __init__(self, seed=0):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed) & _MASK
        sm = self.seed
        state = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            state.append(out)
        self._s = state
        self.draws = 0

    @classmethod
    def from_state(cls, state):
        """Build a stream from a raw 4-word xoshiro state (used for test vectors)."""
        rng = cls.__new__(cls)
        rng.seed = None
        rng._s = [int(s) & _MASK for s in state]
        rng.draws = 0
        return rng

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        self.draws += 1
        return result

    def random(self):
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _TWO_M53

    def integers(self, n):
        """Uniform integer in ``[0, n)``."""
        if n < 1:
            raise ValueError("n must be >= 1")
        return ((self.next_u64() >> 11) * n) >> 53

    def normal(self):
        u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)

    def exponential(self):
        return -math.log1p(-self.random())

    def random_array(self, size):
        return np.array([self.random() for _ in range(size)], dtype=float)

    def normal_array(self, size):
        return np.array([self.normal() for _ in range(size)], dtype=float)

    def exponential_array(self, size):
        return np.array([self.exponential() for _ in range(size)], dtype=float)


def data_matrix(values):
    """Validate ``values`` as an n x d design matrix (rows are points).

    Returns a read-only, C-contiguous float64 copy.

    Raises
    ------
    DimensionError
        If the input is not two-dimensional or has an empty axis.
    InputError
        If any entry is NaN or infinite.
    """
    X = np.array(values, dtype=float, order="C", copy=True)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got {X.ndim}-D")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionError(f"matrix must be at least 1x1, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("matrix contains NaN or Inf entries")
    X.setflags(write=False)
    return X


def sq_euclidean(x, y):
    """Squared Euclidean distance between two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"length mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(diff @ diff)


def categorical_draw(weights, rng):
    """Draw an index with probability proportional to ``weights``.

    Inverse CDF over the prefix sums with left-closed intervals
    ``[c_{i-1}, c_i)``, so zero-weight entries are never returned.  Consumes
    exactly one ``rng.random()`` draw.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DimensionError("weights must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InputError("weights must be finite and non-negative")
    cum = np.cumsum(w)
    total = cum[-1]
    if not total > 0:
        raise DegenerateError("all weights are zero")
    u = rng.random() * total
    idx = int(np.searchsorted(cum, u, side="right"))
    if idx >= w.size:
        # u rounded up to total; take the last index with positive mass
        idx = int(np.flatnonzero(w > 0)[-1])
    return idx
