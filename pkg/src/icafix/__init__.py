"""Fixed-point analysis of the one-unit FastICA map.

The population map f(w) = h(w)/||h(w)|| with
h(w) = E[g'(w'x)w - g(w'x)x] has, besides the demixing vectors +-a_i,
spurious fixed points; the attractive ones trap the algorithm no matter
how strict the stopping criterion is, the unattractive ones cause false
convergence under loose criteria.  This package computes the fixed-point
set exactly (quadrature), classifies it, and measures how often the
finite-sample algorithm lands on spurious solutions.
"""

from .distributions import (
    DistributionSpec,
    MomentSet,
    NumericFailureError,
    ParameterError,
    UnsupportedOperationError,
    moments,
    parse_distribution,
)
from .empirical import (
    DegenerateSampleError,
    ExtractionFailureError,
    PipelineResult,
    RunResult,
    SampleMatrix,
    StoppingRule,
    deviation_index,
    empirical_f,
    false_convergence_radius,
    generate_sample,
    iterate_population,
    optimal_pipeline,
    run,
    saddle_check,
    whiten,
)
from .fixed_points import (
    FixedPointRecord,
    NotAFixedPointError,
    PreconditionError,
    between_pair_fixed_point,
    classify,
    kurtosis_closed_form,
    lift_to_dimension,
    scan_circle,
)
from .harness import (
    ExperimentConfig,
    figure1_data,
    monte_carlo_cells,
    summarize,
    table1,
    table2,
)
from .nonlinearity import BUILTIN_NAMES, Nonlinearity, builtin, negate
from .population import (
    AssumptionViolationError,
    ConfigurationError,
    ExpectationEngine,
    Kernels,
    MixingModel,
    alpha,
    as_unit,
    contrast,
    contrast_hessian_parts,
    f_jacobian,
    f_map,
    f_prime_fixed,
    h_map,
    make_engine,
    phi,
    random_orthogonal,
    spectral_norm,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolationError",
    "BUILTIN_NAMES",
    "ConfigurationError",
    "DegenerateSampleError",
    "DistributionSpec",
    "ExpectationEngine",
    "ExperimentConfig",
    "ExtractionFailureError",
    "FixedPointRecord",
    "Kernels",
    "MixingModel",
    "MomentSet",
    "Nonlinearity",
    "NotAFixedPointError",
    "NumericFailureError",
    "ParameterError",
    "PipelineResult",
    "PreconditionError",
    "RunResult",
    "SampleMatrix",
    "StoppingRule",
    "UnsupportedOperationError",
    "alpha",
    "as_unit",
    "between_pair_fixed_point",
    "builtin",
    "classify",
    "contrast",
    "contrast_hessian_parts",
    "deviation_index",
    "empirical_f",
    "f_jacobian",
    "f_map",
    "f_prime_fixed",
    "false_convergence_radius",
    "figure1_data",
    "generate_sample",
    "h_map",
    "iterate_population",
    "kurtosis_closed_form",
    "lift_to_dimension",
    "make_engine",
    "moments",
    "monte_carlo_cells",
    "negate",
    "optimal_pipeline",
    "parse_distribution",
    "phi",
    "random_orthogonal",
    "run",
    "saddle_check",
    "scan_circle",
    "spectral_norm",
    "summarize",
    "table1",
    "table2",
    "whiten",
]
