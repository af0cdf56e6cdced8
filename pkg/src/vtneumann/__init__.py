"""Nonlocal Neumann problem for the Vladimirov-Taibleson operator on local fields."""

from .errors import (
    CapExceededError,
    DivergentIntegralError,
    GridMismatchError,
    IncompatibleProblemError,
    ParameterError,
    SingularResolventError,
    VTNeumannError,
)
from .lcfun import (
    LCFunction,
    Region,
    WeightFunction,
    integrate,
    mean_over_domain,
    project_average,
    refine,
    sobolev_inner,
    sobolev_norm,
)
from .localfield import (
    NEG_INF,
    CosetId,
    FieldModel,
    Grid,
    ball_character_integral,
    ball_volume,
    coset_distance,
    effective_params,
    shell_character_integral,
    tail_kernel_integral,
)
from .operators import (
    OperatorMatrix,
    ResolventMatrix,
    assemble_regional,
    assemble_vt,
    bilinear_form,
    coefficient_c,
    energy_functional,
    lambda_n,
    neumann_trace,
    resolvent_matrix,
    resolvent_radial,
)
from .solvers import (
    Gauge,
    NeumannProblem,
    Solution,
    Tolerances,
    analytic_spectrum,
    check_compatibility,
    solve_strong,
    solve_strong_inhomogeneous,
    solve_weak,
    spectrum,
)
from .verify import (
    IdentityReport,
    oracle_apply_vt,
    projection_inequality_check,
    residual_report,
    run_identity_suite,
)

__version__ = "0.1.0"
