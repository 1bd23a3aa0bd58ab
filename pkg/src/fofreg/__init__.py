"""Penalized function-on-function regression with identifiability
diagnostics, remedial penalties, and a reproducible simulation harness."""

from .basis import (
    RANK_RTOL,
    BasisMatrix,
    BasisSystem,
    Grid,
    MarginalPenalty,
    QuadratureWeights,
    TensorPenalty,
    assemble_tensor_penalty,
    bspline_basis,
    difference_penalty,
    make_equidistant_grid,
    quadrature_weights,
)
from .dgp import (
    PROCESS_KINDS,
    CoefSurface,
    EigenSystem,
    SimScenario,
    eigen_system,
    gen_response,
    sample_coef_surface,
    sample_covariate,
)
from .diagnostics import (
    KAPPA_THRESHOLD,
    OVERLAP_THRESHOLD,
    DiagnosticReport,
    condition_number,
    diagnose,
    kernel_overlap_measure,
    orthogonal_complement,
    overlap_constraint_basis,
    penalty_nullspace_basis,
    span_overlap,
)
from .fit import (
    FitResult,
    NonIdentifiableError,
    TensorDesign,
    assemble_design,
    constrained_solve,
    penalized_solve,
    predict,
    select_smoothing,
    smoothest_representative,
)
from .fpc import (
    FpcDecomposition,
    FunctionalSample,
    center_curvewise,
    center_mean_function,
    empirical_fpc,
    truncate_fpc,
)
from .harness import (
    FlagScore,
    SimResult,
    StudyConfig,
    default_config,
    enumerate_scenarios,
    rimse_beta,
    rimse_y,
    run_config,
    run_scenario,
    score_flags,
)
from .penalties import PenaltyRecipe, fame_penalty, fullrank_shrinkage, ridge_penalty

__version__ = "0.1.0"

__all__ = [
    "RANK_RTOL",
    "KAPPA_THRESHOLD",
    "OVERLAP_THRESHOLD",
    "PROCESS_KINDS",
    "Grid",
    "QuadratureWeights",
    "BasisMatrix",
    "BasisSystem",
    "MarginalPenalty",
    "TensorPenalty",
    "FunctionalSample",
    "FpcDecomposition",
    "EigenSystem",
    "CoefSurface",
    "SimScenario",
    "DiagnosticReport",
    "TensorDesign",
    "FitResult",
    "NonIdentifiableError",
    "SimResult",
    "FlagScore",
    "StudyConfig",
    "PenaltyRecipe",
    "make_equidistant_grid",
    "quadrature_weights",
    "bspline_basis",
    "difference_penalty",
    "assemble_tensor_penalty",
    "center_mean_function",
    "center_curvewise",
    "empirical_fpc",
    "truncate_fpc",
    "eigen_system",
    "sample_covariate",
    "sample_coef_surface",
    "gen_response",
    "span_overlap",
    "orthogonal_complement",
    "kernel_overlap_measure",
    "condition_number",
    "penalty_nullspace_basis",
    "overlap_constraint_basis",
    "diagnose",
    "ridge_penalty",
    "fullrank_shrinkage",
    "fame_penalty",
    "assemble_design",
    "penalized_solve",
    "constrained_solve",
    "select_smoothing",
    "smoothest_representative",
    "predict",
    "rimse_beta",
    "rimse_y",
    "run_scenario",
    "run_config",
    "enumerate_scenarios",
    "default_config",
    "score_flags",
]
