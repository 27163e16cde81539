"""CSV loading, preprocessing and synthetic datasets."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateError, InputError, ParseError
from .matrix import data_matrix

SCHEMES = {
    "none": "none",
    "center-max-scale": "center-max-scale",
    "cms": "center-max-scale",
    "standardize": "standardize",
    "std": "standardize",
}
SHAPES = ("ring", "polygon-hull", "gaussian-blob")


def load_csv(path, delimiter=",", has_header=False):
    """Read a numeric CSV file into a read-only ``(n, d)`` matrix.

    No quoting is supported.  Blank lines are skipped.  Errors report
    1-based file line numbers and column positions.
    """
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter, quoting=csv.QUOTE_NONE)
        for line, cells in enumerate(reader, start=1):
            if has_header and line == 1:
                continue
            if not cells or all(not c.strip() for c in cells):
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(
                    f"{path}: line {line} has {len(cells)} columns, expected {width}", line=line
                )
            row = []
            for col, cell in enumerate(cells, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise ParseError(
                        f"{path}: line {line}, column {col}: {cell.strip()!r} is not a finite number",
                        line=line,
                        column=col,
                    )
                row.append(v)
            rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return data_matrix(rows)


@dataclass(frozen=True)
class PreprocessSpec:
    """Preprocessing scheme; ``signed_max`` divides by the signed maximum.

    The default center-max-scale divides by the largest absolute entry of the
    centered matrix.  ``signed_max=True`` uses the largest signed entry
    instead, for strict replication of the literal "largest element" reading.
    """

    scheme: str = "none"
    signed_max: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown preprocessing scheme {self.scheme!r}")
        object.__setattr__(self, "scheme", SCHEMES[self.scheme])


def preprocess(X, spec="none"):
    """Apply a :class:`PreprocessSpec` (or scheme name) to ``X``.

    Both schemes are affine, so which points lie on the convex hull boundary
    does not change.
    """
    if not isinstance(spec, PreprocessSpec):
        spec = PreprocessSpec(spec)
    X = data_matrix(X)
    if spec.scheme == "none":
        return X
    C = X - X.mean(axis=0)
    if spec.scheme == "center-max-scale":
        top = C.max() if spec.signed_max else np.abs(C).max()
        if not top > 0:
            raise DegenerateError("scale factor is zero after centering")
        return data_matrix(C / top)
    std = X.std(axis=0)
    flat = np.flatnonzero(~(std > 0))
    if flat.size:
        raise DegenerateError(f"column(s) {flat.tolist()} have zero standard deviation")
    return data_matrix(C / std)


def _ring(n, d, rng, noise):
    t = 2 * np.pi * np.arange(n) / n
    r = np.ones(n)
    X = np.zeros((n, d))
    if noise > 0:
        r += noise * (2 * rng.random_array(n) - 1)
        X[:, 2:] = noise * rng.normal_array(n * (d - 2)).reshape(n, d - 2)
    X[:, 0] = r * np.cos(t)
    X[:, 1] = r * np.sin(t)
    # cos and sin are not exact at multiples of pi/2
    X[:, :2] = np.where(np.abs(X[:, :2]) < 1e-15, 0.0, X[:, :2])
    return X


def polygon_hull(n, d, rng, n_vertices=None):
    """Random convex combinations of random vertices.

    Returns ``(X, V)``: ``V`` holds ``n_vertices`` (default ``2 d``) standard
    normal vertices and each row of ``X`` is a flat-Dirichlet mixture of
    them, so every point lies in ``conv(V)``.
    """
    if n < 1 or d < 2:
        raise ConfigError("polygon-hull needs n >= 1 and d >= 2")
    m = 2 * d if n_vertices is None else int(n_vertices)
    if m < 1:
        raise ConfigError("n_vertices must be >= 1")
    V = rng.normal_array(m * d).reshape(m, d)
    W = rng.exponential_array(n * m).reshape(n, m)
    W /= W.sum(axis=1, keepdims=True)
    return W @ V, V


def gen_synthetic(shape, n, d, rng, noise=0.0):
    """Synthetic ``(n, d)`` dataset, deterministic given ``rng``'s seed.

    ``ring`` places points at evenly spaced angles on the unit circle in the
    first two coordinates; ``noise`` widens it into an annulus of half-width
    ``noise`` and adds Gaussian noise of that scale to the other coordinates.
    ``polygon-hull`` samples inside a random polytope (see
    :func:`polygon_hull`); ``gaussian-blob`` is standard normal.
    """
    if shape not in SHAPES:
        raise ConfigError(f"unknown synthetic shape {shape!r}; choose from {', '.join(SHAPES)}")
    if n < 1 or d < 1:
        raise ConfigError("n and d must be >= 1")
    if noise < 0:
        raise ConfigError("noise must be >= 0")
    if shape == "ring":
        if d < 2:
            raise ConfigError("ring needs d >= 2")
        X = _ring(n, d, rng, noise)
    elif shape == "polygon-hull":
        X, _ = polygon_hull(n, d, rng)
    else:
        X = rng.normal_array(n * d).reshape(n, d)
    return data_matrix(X)
