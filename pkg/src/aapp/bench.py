"""Experiment grids over (method, k, seed), quantile summaries and win tables.

Seeding
-------
Each grid cell gets its own :class:`~aapp.matrix.RngStream`, seeded with

    s = base_seed
    for v in (fnv1a64(method_id), k, seed_index):
        s = splitmix64(s ^ v)

so methods draw from unrelated streams while the grid stays reproducible.
``method_id`` includes the chain fraction for ``aapp-mc`` (``aapp-mc@0.05``).

Records
-------
One row per (method, k, seed, stage).  Timing columns are only filled when the
grid runs serially; otherwise they are left empty so that a records file
depends on the configuration alone.  A cell whose initializer or solver fails
produces a single row with stage ``error`` and the exception in ``flags``.
"""

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import PreprocessSpec, gen_synthetic, load_csv, preprocess
from .errors import AAError, ConfigError, DimensionError
from .initializers import ChainConfig, initialize
from .matrix import RngStream, splitmix64
from .solver import fit

log = logging.getLogger(__name__)

METHODS = ("uniform", "furthest-first", "furthest-sum", "aapp", "kmeanspp", "aapp-mc")
MC_PREFIX = "aapp-mc"
RECORD_FIELDS = ("dataset", "method", "k", "seed", "stage", "mse", "init_time_s", "iter_time_s", "flags")
AGGREGATE_FIELDS = ("dataset", "method", "k", "stage", "count", "median", "q25", "q75")
WIN_FIELDS = ("mode", "method", "k", "wins", "ties")
TIE_TOL = 1e-12

_MASK = (1 << 64) - 1


def fnv1a64(text):
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def cell_seed(base_seed, method_id, k, seed_index):
    """64-bit seed for one grid cell (see module docstring)."""
    s = int(base_seed) & _MASK
    for v in (fnv1a64(method_id), int(k), int(seed_index)):
        s, _ = splitmix64(s ^ (v & _MASK))
    return s


def mc_method_id(fraction):
    return f"{MC_PREFIX}@{fraction:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark grid.

    Give either ``data`` (a CSV path) or ``synthetic`` as ``(shape, n, d)``.
    ``seeds`` is a count (seed indices ``0 .. seeds-1``) or an explicit
    sequence of indices.
    """

    data: str = None
    synthetic: tuple = None
    noise: float = 0.0
    delimiter: str = ","
    has_header: bool = False
    preprocess: PreprocessSpec = field(default_factory=PreprocessSpec)
    methods: tuple = METHODS
    k_list: tuple = (15, 25, 50, 75, 100)
    iters: int = 10
    seeds: object = 50
    chain_fractions: tuple = (0.01, 0.05, 0.1, 0.2)
    base_seed: int = 0
    out_dir: str = "results"
    serial: bool = False
    workers: int = 1

    def __post_init__(self):
        if (self.data is None) == (self.synthetic is None):
            raise ConfigError("give exactly one of data or synthetic")
        if not isinstance(self.preprocess, PreprocessSpec):
            object.__setattr__(self, "preprocess", PreprocessSpec(self.preprocess))
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ConfigError(f"unknown or empty method list: {unknown}")
        if not self.k_list or any(int(k) < 1 for k in self.k_list):
            raise ConfigError("k values must be >= 1")
        if self.iters < 0:
            raise ConfigError("iters must be >= 0")
        if isinstance(self.seeds, int):
            if self.seeds < 1:
                raise ConfigError("seeds must be >= 1")
        elif not self.seeds or any(int(s) < 0 for s in self.seeds):
            raise ConfigError("explicit seed list must be non-empty and non-negative")
        if any(not 0 < f <= 1 for f in self.chain_fractions):
            raise ConfigError("chain fractions must lie in (0, 1]")
        if MC_PREFIX in self.methods and not self.chain_fractions:
            raise ConfigError("aapp-mc needs at least one chain fraction")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def seed_indices(self):
        if isinstance(self.seeds, int):
            return tuple(range(self.seeds))
        return tuple(int(s) for s in self.seeds)

    @property
    def dataset_id(self):
        if self.data is not None:
            return Path(self.data).stem
        shape, n, d = self.synthetic
        return f"{shape}-n{n}-d{d}"

    def method_specs(self):
        """``(method_id, method, chain)`` triples in grid order."""
        specs = []
        for m in self.methods:
            if m == MC_PREFIX:
                specs.extend((mc_method_id(f), m, ChainConfig(fraction=f)) for f in self.chain_fractions)
            else:
                specs.append((m, m, None))
        return specs


@dataclass(frozen=True)
class ResultRecord:
    dataset: str
    method: str
    k: int
    seed: int
    stage: str
    mse: float = None
    init_time: float = None
    iter_time: float = None
    flags: tuple = ()

    @property
    def is_error(self):
        return self.stage == "error"

    def row(self):
        def num(v, fmt):
            return "" if v is None else format(v, fmt)

        return [
            self.dataset,
            self.method,
            str(self.k),
            str(self.seed),
            self.stage,
            "" if self.mse is None else repr(float(self.mse)),
            num(self.init_time, ".6f"),
            num(self.iter_time, ".6f"),
            ";".join(self.flags),
        ]


def load_dataset(config):
    """Build the (preprocessed) data matrix described by ``config``."""
    if config.data is not None:
        X = load_csv(config.data, delimiter=config.delimiter, has_header=config.has_header)
    else:
        shape, n, d = config.synthetic
        X = gen_synthetic(shape, int(n), int(d), RngStream(config.base_seed), noise=config.noise)
    return preprocess(X, config.preprocess)


def _run_cell(task):
    X, dataset, method_id, method, chain, k, seed, base_seed, iters, timed = task
    rng = RngStream(cell_seed(base_seed, method_id, k, seed))
    try:
        start = time.perf_counter()
        Z0 = initialize(method, X, k, rng, chain=chain)
        init_time = time.perf_counter() - start
        _, _, trace = fit(X, Z0, iters=iters)
    except (AAError, np.linalg.LinAlgError) as exc:
        # flags are ';'-separated, so keep the message on one field
        detail = " ".join(str(exc).replace(";", ",").split())
        flag = f"error:{type(exc).__name__}:{detail}"
        return [ResultRecord(dataset, method_id, k, seed, "error", flags=(flag,))]
    records = []
    for (stage, value), elapsed in zip(trace.stage_mse, trace.stage_times):
        records.append(
            ResultRecord(
                dataset,
                method_id,
                k,
                seed,
                stage,
                value,
                init_time if timed else None,
                elapsed - trace.init_time if timed else None,
                Z0.flags,
            )
        )
    return records


def run_grid(config, X=None):
    """Run every (method, k, seed) cell and return the records in grid order.

    Order is method (chain fractions expanded in place), then k, then seed,
    then stage.  ``X`` overrides the dataset described by ``config``.
    """
    if X is None:
        X = load_dataset(config)
    timed = config.serial
    tasks = [
        (X, config.dataset_id, mid, m, chain, int(k), seed, config.base_seed, config.iters, timed)
        for mid, m, chain in config.method_specs()
        for k in config.k_list
        for seed in config.seed_indices
    ]
    if config.serial or config.workers == 1:
        results = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            # map keeps submission order, so output bytes do not depend on scheduling
            results = list(pool.map(_run_cell, tasks))
    return [r for cell in results for r in cell]


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_records(records, path):
    return _write_rows(path, RECORD_FIELDS, (r.row() for r in records))


def read_records(path):
    """Parse a records CSV written by :func:`write_records`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise DimensionError(f"{path}: not a records file (header {reader.fieldnames})")

        def opt(v):
            return float(v) if v else None

        return [
            ResultRecord(
                row["dataset"],
                row["method"],
                int(row["k"]),
                int(row["seed"]),
                row["stage"],
                opt(row["mse"]),
                opt(row["init_time_s"]),
                opt(row["iter_time_s"]),
                tuple(f for f in row["flags"].split(";") if f),
            )
            for row in reader
        ]


def quantile(sorted_values, q):
    """Linear-interpolation quantile of an ascending sequence."""
    n = len(sorted_values)
    pos = q * (n - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, n - 1)
    return sorted_values[lo] + (pos - lo) * (sorted_values[hi] - sorted_values[lo])


def _stage_key(stage):
    return 0 if stage == "init" else int(stage.split("-", 1)[1])


def aggregate_quantiles(records):
    """Median and quartiles of MSE per (dataset, method, k, stage).

    Returns a dict mapping the group key to ``(count, median, q25, q75)`` in
    first-seen dataset/method order, then by k and stage.  Error rows and
    groups without finite values are skipped with a warning.
    """
    groups = {}
    for r in records:
        if r.is_error:
            continue
        groups.setdefault((r.dataset, r.method, r.k, r.stage), []).append(r.mse)
    order = {}
    for r in records:
        order.setdefault((r.dataset, r.method), len(order))
    table = {}
    for key in sorted(groups, key=lambda g: (order[g[:2]], g[2], _stage_key(g[3]))):
        values = sorted(v for v in groups[key] if v is not None and math.isfinite(v))
        if not values:
            log.warning("skipping empty group %s", key)
            continue
        table[key] = (len(values), quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75))
    return table


def write_aggregate(table, path):
    rows = [[*map(str, key), str(c), repr(m), repr(a), repr(b)] for key, (c, m, a, b) in table.items()]
    return _write_rows(path, AGGREGATE_FIELDS, rows)


@dataclass
class WinTable:
    """Win counts per ``(method, k)``; ``ties`` lists ``(dataset, k, methods)``."""

    mode: tuple
    counts: dict
    ties: list

    def rows(self):
        tied = {}
        for _, k, methods in self.ties:
            for m in methods:
                tied[(m, k)] = tied.get((m, k), 0) + 1
        label = "-".join(self.mode)
        return [[label, m, str(k), str(c), str(tied.get((m, k), 0))] for (m, k), c in self.counts.items()]


def _parse_mode(mode):
    if isinstance(mode, str):
        mode = tuple(mode.split("-", 1))
    if len(mode) != 2 or mode[0] not in ("best", "median") or mode[1] not in ("initialization", "overall"):
        raise ConfigError(f"mode must be (best|median, initialization|overall), got {mode!r}")
    return mode


def win_table(records, mode=("median", "initialization"), methods=None):
    """Count how often each initializer gives the lowest MSE.

    Per seed, ``initialization`` uses the post-initialization MSE and
    ``overall`` the lowest MSE over all stages.  Seeds are then reduced by
    their minimum (``best``) or median (``median``).  For each (dataset, k)
    every method within 1e-12 of the lowest score gets one win; when more
    than one does, the group is recorded in ``ties``.  ``aapp-mc`` variants
    never take part.
    """
    reduce_, stage = _parse_mode(mode)
    per_seed = {}
    for r in records:
        if r.is_error or r.method.startswith(MC_PREFIX):
            continue
        key = (r.dataset, r.k, r.method, r.seed)
        if stage == "initialization":
            if r.stage == "init":
                per_seed[key] = r.mse
        else:
            per_seed[key] = min(per_seed.get(key, math.inf), r.mse)
    scores = {}
    for (dataset, k, method, _), v in per_seed.items():
        scores.setdefault((dataset, k), {}).setdefault(method, []).append(v)
    present = sorted({m for group in scores.values() for m in group}, key=_method_rank)
    wanted = present if methods is None else [m for m in methods if not m.startswith(MC_PREFIX)]
    counts = {}
    ties = []
    for k in sorted({k for _, k in scores}):
        for m in wanted:
            counts[(m, k)] = 0
    for (dataset, k), group in scores.items():
        missing = [m for m in wanted if m not in group]
        if missing:
            raise ConfigError(f"{dataset}, k={k}: no records for {', '.join(missing)}")
        reduced = {
            m: (min(group[m]) if reduce_ == "best" else quantile(sorted(group[m]), 0.5)) for m in wanted
        }
        low = min(reduced.values())
        winners = [m for m in wanted if reduced[m] <= low + TIE_TOL]
        for m in winners:
            counts[(m, k)] += 1
        if len(winners) > 1:
            ties.append((dataset, k, tuple(winners)))
    return WinTable((reduce_, stage), counts, ties)


def _method_rank(method):
    base = method.split("@", 1)[0]
    return (METHODS.index(base) if base in METHODS else len(METHODS), method)


def write_wins(tables, path):
    rows = [row for t in tables for row in t.rows()]
    return _write_rows(path, WIN_FIELDS, rows)

