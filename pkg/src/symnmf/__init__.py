"""Symmetric nonnegative matrix factorization via a penalized split.

The package factorizes a symmetric nonnegative matrix ``X`` as
``U U^T`` with ``U >= 0`` by coupling two copies of the factor through a
quadratic penalty and running fast alternating solvers on the resulting
two-factor problem.  Alongside the solvers it ships the diagnostics that
make the runs checkable after the fact: the certified penalty threshold,
per-iteration decrease and iterate-bound verification, first-order
residuals, and a graph-clustering pipeline with permutation-matched
accuracy scoring.
"""

from .cluster import assign_labels, clustering_accuracy
from .dense import (
    DimensionError,
    SpectralSummary,
    as_matrix,
    frobenius_norm,
    smallest_eigenvalue,
    spectral_norm,
    spectral_summary,
)
from .graph import build_similarity
from .nnls import NumericalError, bpp_solve, solve_rows
from .objective import (
    GradientPair,
    PenalizedProblem,
    eval_penalized,
    eval_symmetric,
    fitting_error,
    grad_smooth,
    iterate_norm_bound,
    kkt_residual,
    lambda_threshold,
    lipschitz_bound,
    symmetric_kkt_residual,
)
from .report import render_report
from .solvers import (
    IterationRecord,
    SolveResult,
    SolverConfig,
    gd_matrix_factorization,
    hals_column_update,
    pgd_symmetric,
    run_solver,
    sym_anls,
    sym_hals,
    verify_sufficient_decrease,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "GradientPair",
    "IterationRecord",
    "NumericalError",
    "PenalizedProblem",
    "SolveResult",
    "SolverConfig",
    "SpectralSummary",
    "as_matrix",
    "assign_labels",
    "bpp_solve",
    "build_similarity",
    "clustering_accuracy",
    "eval_penalized",
    "eval_symmetric",
    "fitting_error",
    "frobenius_norm",
    "gd_matrix_factorization",
    "grad_smooth",
    "hals_column_update",
    "iterate_norm_bound",
    "kkt_residual",
    "lambda_threshold",
    "lipschitz_bound",
    "pgd_symmetric",
    "render_report",
    "run_solver",
    "smallest_eigenvalue",
    "solve_rows",
    "spectral_norm",
    "spectral_summary",
    "sym_anls",
    "sym_hals",
    "symmetric_kkt_residual",
    "verify_sufficient_decrease",
]
