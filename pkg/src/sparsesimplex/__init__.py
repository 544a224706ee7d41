"""Sparse Euclidean projections onto the simplex and hyperplane.

Core entry points: the exact sparse projectors :func:`gssp` and
:func:`gshp`, their convex counterparts, a projected-gradient solver for
quadratic losses over any projector, Hermitian rank/trace projections for
low-rank recovery, and the experiment harness behind the ``sparsesimplex``
command-line tool.
"""

from .density import (
    KernelModel,
    build_ise_quadratic,
    estimate_density,
    evaluate_pdf,
    gaussian_kernel,
    ise_against,
    parzen,
    sample_paper_mixture,
)
from .estimators import (
    HyperplaneProjection,
    SimplexProjection,
    SparseHyperplaneRegressor,
    SparseKernelDensity,
    SparseSimplexRegressor,
)
from .linops import (
    DenseMatrixOperator,
    IdentityOperator,
    LinearOperator,
    PauliOperator,
    StackedOperator,
    add_noise_snr,
    estimate_rip_constant,
    gaussian_matrix,
    operator_norm,
    pauli_operator,
)
from .matrixproj import (
    DensityMatrixEstimate,
    lambda_bracketing_solve,
    project_psd_traceball,
    project_rank_trace,
    prox_nuclear_psd,
    random_low_rank_state,
)
from .oracle import OracleBudgetError, OracleResult, oracle_project
from .projections import (
    ConstraintSpec,
    ProjectionResult,
    SparseVector,
    gshp,
    gssp,
    hard_threshold_top_k,
    project_hyperplane,
    project_simplex,
    set_function_hyperplane,
    set_function_simplex,
    top_k_select,
)
from .solver import SolveTrace, SolverConfig, SolverError, gradient_check, solve_pgd

__version__ = "0.1.0"

__all__ = [
    "ConstraintSpec",
    "DenseMatrixOperator",
    "DensityMatrixEstimate",
    "HyperplaneProjection",
    "IdentityOperator",
    "KernelModel",
    "LinearOperator",
    "OracleBudgetError",
    "OracleResult",
    "PauliOperator",
    "ProjectionResult",
    "SimplexProjection",
    "SolveTrace",
    "SolverConfig",
    "SolverError",
    "SparseHyperplaneRegressor",
    "SparseKernelDensity",
    "SparseSimplexRegressor",
    "SparseVector",
    "StackedOperator",
    "add_noise_snr",
    "build_ise_quadratic",
    "estimate_density",
    "estimate_rip_constant",
    "evaluate_pdf",
    "gaussian_kernel",
    "gaussian_matrix",
    "gradient_check",
    "gshp",
    "gssp",
    "hard_threshold_top_k",
    "ise_against",
    "lambda_bracketing_solve",
    "operator_norm",
    "oracle_project",
    "parzen",
    "pauli_operator",
    "project_hyperplane",
    "project_psd_traceball",
    "project_rank_trace",
    "project_simplex",
    "prox_nuclear_psd",
    "random_low_rank_state",
    "sample_paper_mixture",
    "set_function_hyperplane",
    "set_function_simplex",
    "solve_pgd",
    "top_k_select",
]
