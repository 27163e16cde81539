"""Archetypal analysis with hull-distance (AA++) initialization.

The main entry points are re-exported here; see the submodules for details.
"""

from .bench import ExperimentConfig, ResultRecord, aggregate_quantiles, run_grid, win_table
from .dataio import PreprocessSpec, gen_synthetic, load_csv, preprocess
from .errors import (
    AAError,
    CardinalityError,
    ConfigError,
    ConvergenceError,
    DegenerateError,
    DimensionError,
    InputError,
    ParseError,
    SolverError,
)
from .initializers import (
    ArchetypeSet,
    ChainConfig,
    init_aapp,
    init_aapp_mc,
    init_furthest_first,
    init_furthest_sum,
    init_kmeanspp,
    init_uniform,
    initialize,
)
from .matrix import RngStream, categorical_draw, data_matrix, sq_euclidean
from .simplex import batch_dist, dist_to_hull, nnls, solve_simplex_ls
from .solver import FitTrace, SimplexWeights, fit, mse, update_A, update_B, update_Z_unconstrained

__version__ = "0.1.0"
