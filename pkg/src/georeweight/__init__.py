"""Voronoi-reweighted Monte Carlo integration on the unit interval and square."""

from .estimators import (
    CoefficientMode,
    Estimate,
    EstimatorKind,
    correction_coefficient,
    estimate,
    estimate_batched,
    estimate_consistent,
    estimate_standard_mc,
    estimate_stratified_mc,
    estimate_unbiased_stratified,
    estimate_unbiased_uniform,
)
from .experiments import ConfigError, ExperimentConfig, ResultRow, run_experiment
from .geometry import (
    Partition,
    VoronoiCell,
    boundary_cardinality,
    partition,
    partition_stratified,
    partition_unit_interval,
    partition_unit_square,
    polygon_area,
)
from .sampling import (
    Box,
    SampleSet,
    Stratification,
    Xoshiro256StarStar,
    derive_trial_seed,
    sample_stratified,
    sample_uniform_iid,
)
from .testbed import (
    ImageFunction2D,
    Integrand,
    eval_test_function_1d,
    make_integrand,
    load_pgm,
    reference_integral_test1d,
)

__version__ = "0.1.0"
