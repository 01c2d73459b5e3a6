"""Hamiltonian learning with sampled (backpropagation-free) neural networks."""

from .core import Dataset, DomainBox, PhasePoint, j_apply, jinv_apply, make_dataset, sample_domain, seed_streams
from .errors import (
    CatalogError,
    ConfigError,
    DegenerateDataError,
    DegeneratePairError,
    DimensionError,
    NumericError,
    SampledHNNError,
    SamplingExhaustedError,
    SchemaError,
    StepFailure,
)
from .hamiltonians import SYSTEM_NAMES, SystemSpec, eval_gradH, eval_H, get_system
from .linsolve import FitConfig, assemble_system, solve_least_squares, train
from .metrics import RunStats, rel_l2, run_stats
from .network import SampledNetwork, forward, predict_gradH

__version__ = "0.1.0"
