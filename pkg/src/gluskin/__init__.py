"""Numerical companion to the n^{5/9} lower bound on the Banach-Mazur
distance between random Gluskin polytopes and the cross-polytope."""

from .errors import (
    Degenerate,
    GluskinError,
    Infeasible,
    InvalidParameters,
    InvalidRepresentation,
    NonConvergence,
    SingularMatrix,
    TooLarge,
)
from .experiments import (
    ExperimentRecord,
    bm_upper_bound,
    calibrate_tilt_constant,
    run_discretization_slack,
    run_event_e1_experiment,
    run_event_e2_experiment,
    run_span_distance_experiment,
    run_theorem_pipeline_micro,
    tail_family,
)
from .linalg import dist_to_span, numerical_rank, orthonormalize, smallest_singular_value
from .lp import caratheodory_reduce, gauge, l1_membership_scale
from .measure import (
    CalibrationConstants,
    MeasureEstimate,
    crosspol1_bound,
    crosspol2_bound,
    gaussian_measure_mc,
    l1_ball_measure_oracle,
    simple_bound,
    symmetrize,
)
from .optimizer import (
    ParameterSet,
    alpha_formula,
    check_tail_sums,
    constraint_check,
    exponent_fit,
    feasible_parameters,
    rho_formula,
    tau_formula,
)
from .polytope import (
    CoefficientMatrix,
    CrossPolytope,
    CrosspolVerdict,
    SparseSplit,
    containment_scale,
    crosspol_membership,
    decompose_alpha,
    inradius_bounds,
    net_cardinality_log_bound,
    round_to_net,
    tilt_rescale,
    verify_decomposition_inclusion,
)
from .sampling import GluskinPolytope, Seed, sample_gaussian_matrix, sample_gluskin

__version__ = "0.1.0"
