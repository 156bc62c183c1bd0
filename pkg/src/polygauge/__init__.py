"""Penalized least squares with polyhedral gauge penalties: pattern
calculus, proximal/splitting solvers, and exact recovery checkers."""

from .conditions import (
    ConditionReport,
    InfeasibleTarget,
    check_accessibility,
    check_nrc_geometric,
    check_nrc_lasso,
    check_nrc_path,
    check_nrc_sup,
    check_uniform_uniqueness,
    min_linf_representation,
    zero_threshold,
)
from .experiments import (
    ExperimentConfig,
    ResultRow,
    replication_rng,
    run_accessibility_sweep,
    run_recovery_experiment,
    sure_select,
)
from .gauge import (
    DimensionTooSmall,
    Face,
    GaugeSpec,
    GeneratorBlowup,
    NamedPattern,
    PatternFingerprint,
    active_indices,
    active_set,
    complexity,
    dual_feasibility,
    enumerate_faces,
    generators,
    named_pattern,
    pattern_subspace,
    pen_eval,
    round_sig,
    subdiff_includes,
    subdifferential_face,
    tf_matrix,
    tv_matrix,
)
from .linprog import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    FeasibilityResult,
    LpProblem,
    LpSolution,
    NumericalFailure,
    feasibility,
    lp_solve,
)
from .numerics import (
    SubspaceBasis,
    in_row_space,
    null_space_basis,
    pseudoinverse,
    rank,
    read_matrix,
    read_vector,
    write_matrix,
    write_vector,
)
from .solvers import (
    NotConvergedError,
    PathResult,
    PathSegment,
    SolveOptions,
    SolveResult,
    kkt_residual,
    prox_l1,
    prox_linf,
    prox_sorted_l1,
    project_l1_ball,
    project_simplex,
    solution_path,
    solve,
)
from .threshold import (
    ThresholdResult,
    recover_with_threshold,
    threshold_lasso,
    threshold_sup,
    verify_thresholded,
)

__version__ = "0.1.0"
