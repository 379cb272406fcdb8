"""Multipool group-testing designs with noisy-test simulation and
closed-form accuracy statistics."""

from .analytics import (
    AnalyticReport,
    ConfusionStats,
    ExpectedCounts,
    ScenarioParams,
    TuningResult,
    VarianceBounds,
    analytic_report,
    binary_entropy,
    confusion_stats,
    expected_counts,
    gamma,
    min_multiplicity,
    pivotal_probability,
    sensitivity,
    specificity,
    threshold_disjunct,
    threshold_info,
    type_one,
    type_two,
    variance_bounds,
)
from .design import (
    INFINITY,
    MatrixFile,
    MultipoolParams,
    PoolLabel,
    PoolingMatrix,
    ValidationReport,
    build_multipool,
    max_pools_bound,
    read_matrix_csv,
    read_matrix_json,
    validate_multipool,
    write_matrix_csv,
    write_matrix_json,
)
from .errors import (
    DesignBoundError,
    DomainError,
    InfeasibleError,
    MatrixFormatError,
    MultipoolError,
    NoSolutionError,
    NotApplicableError,
    UndefinedResultError,
    UnsupportedFieldError,
)
from .gf import Field, FieldReport, PrimePower, field_for_order, verify_field
from .model import (
    NOISELESS,
    DecodedResults,
    InfectionState,
    NoiseModel,
    PoolResults,
    SeedSpec,
    Tally,
    decode_ncomp,
    pool_loads,
    sample_infections,
    sample_pool_results,
    tally,
)
from .montecarlo import (
    ComparisonReport,
    ComparisonRow,
    EmpiricalStats,
    Estimate,
    ExperimentConfig,
    compare,
    run_experiment,
)

__version__ = "0.1.0"
