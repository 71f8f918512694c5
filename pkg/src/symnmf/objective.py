"""Scalar quantities defined on a penalized factorization instance.

The package factorizes a symmetric nonnegative matrix ``X`` as ``U U^T``
with ``U >= 0`` by working on the split objective

    g(U, V) = 0.5 * ||X - U V^T||_F^2 + (lam / 2) * ||U - V||_F^2

over ``U, V >= 0``.  The coupling term drags the two factors together; for
a large enough ``lam`` (see :func:`lambda_threshold`) every stationary
point the solvers can reach has ``U = V``, so solving the split problem
solves the symmetric one.

This module evaluates everything scalar about an instance: the two
objectives, the smooth gradient, first-order (KKT) residuals, the
normalized fitting error used in convergence traces, the certified
``lam`` threshold, the a-priori bound on iterate norms, and the gradient
Lipschitz constant on a norm ball.  Nonnegativity is treated as a
feasibility precondition throughout; no indicator values are ever added
into returned scalars, so every result is finite and comparable.
"""

from dataclasses import dataclass, field

import numpy as np

from .dense import (
    as_matrix,
    frobenius_norm,
    smallest_eigenvalue,
    spectral_norm,
    symmetrize_checked,
)

__all__ = [
    "BOUNDARY_TOL",
    "NEGATIVITY_TOL",
    "GradientPair",
    "PenalizedProblem",
    "eval_penalized",
    "eval_symmetric",
    "fitting_error",
    "grad_smooth",
    "iterate_norm_bound",
    "kkt_residual",
    "lambda_threshold",
    "lipschitz_bound",
    "symmetric_kkt_residual",
]

# Entries may dip this far below zero before a factor is rejected as infeasible.
NEGATIVITY_TOL = 1e-12

# Entries within this band of zero are treated as "at the boundary" when
# evaluating first-order conditions; the exact-arithmetic conditions need a
# band in floating point.
BOUNDARY_TOL = 1e-10


def _check_factor(m, name):
    m = as_matrix(m, name=name)
    low = float(m.min())
    if low < -NEGATIVITY_TOL:
        raise ValueError(
            f"{name} must be nonnegative within {NEGATIVITY_TOL:.0e}; "
            f"smallest entry is {low:.3e}"
        )
    return m


@dataclass(frozen=True)
class PenalizedProblem:
    """A factorization instance: symmetric target, penalty weight, rank.

    ``x`` is symmetrized on construction (and rejected if meaningfully
    asymmetric), ``lam`` must be positive, and ``rank`` must lie in
    ``[1, n]``.
    """

    x: np.ndarray
    lam: float
    rank: int

    def __post_init__(self):
        x = symmetrize_checked(self.x, name="x")
        object.__setattr__(self, "x", x)
        if not (self.lam > 0.0 and np.isfinite(self.lam)):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")
        n = x.shape[0]
        if not (1 <= int(self.rank) <= n):
            raise ValueError(f"rank must be in [1, {n}], got {self.rank}")
        object.__setattr__(self, "rank", int(self.rank))

    @property
    def n(self):
        return self.x.shape[0]

    def check_factors(self, u, v):
        """Validate shapes and feasibility of a factor pair for this instance."""
        u = _check_factor(u, "u")
        v = _check_factor(v, "v")
        want = (self.n, self.rank)
        if u.shape != want or v.shape != want:
            raise ValueError(
                f"factors must have shape {want}, got {u.shape} and {v.shape}"
            )
        return u, v


@dataclass(frozen=True)
class GradientPair:
    """Gradient of the smooth objective with respect to each factor."""

    grad_u: np.ndarray = field(repr=False)
    grad_v: np.ndarray = field(repr=False)


def eval_penalized(problem, u, v):
    """Value of the split objective at ``(u, v)``.

    Returns ``0.5*||X - U V^T||_F^2 + (lam/2)*||U - V||_F^2``.  Both
    factors must be nonnegative within :data:`NEGATIVITY_TOL`.
    """
    u, v = problem.check_factors(u, v)
    resid = problem.x - u @ v.T
    gap = u - v
    return 0.5 * float(np.sum(resid * resid)) + 0.5 * problem.lam * float(
        np.sum(gap * gap)
    )


def eval_symmetric(x, u):
    """Value of the symmetric objective ``0.5*||X - U U^T||_F^2``."""
    x = as_matrix(x, name="x")
    u = _check_factor(u, "u")
    if u.shape[0] != x.shape[0] or x.shape[0] != x.shape[1]:
        raise ValueError(f"shape mismatch: x {x.shape}, u {u.shape}")
    resid = x - u @ u.T
    return 0.5 * float(np.sum(resid * resid))


def grad_smooth(problem, u, v):
    """Gradient of the smooth part of the split objective.

    Returns the pair

        grad_u = (U V^T - X) V + lam (U - V)
        grad_v = (U V^T - X)^T U - lam (U - V)
    """
    u, v = problem.check_factors(u, v)
    resid = u @ v.T - problem.x
    gap = u - v
    return GradientPair(
        grad_u=resid @ v + problem.lam * gap,
        grad_v=resid.T @ u - problem.lam * gap,
    )


def _projected(grad, factor, tol=BOUNDARY_TOL):
    """Projected gradient: full gradient on interior entries, its negative
    part on boundary entries (a boundary entry with nonnegative gradient
    satisfies the first-order conditions and contributes nothing)."""
    return np.where(factor > tol, grad, np.minimum(grad, 0.0))


def kkt_residual(problem, u, v):
    """First-order criticality residual of the split problem at ``(u, v)``.

    Each entry contributes its gradient value if the variable is interior
    (``> BOUNDARY_TOL``) and ``min(gradient, 0)`` if it sits at the
    nonnegativity boundary; the contributions of both factors are
    aggregated as a single Frobenius norm.  The result is zero exactly at
    points satisfying the first-order conditions.
    """
    u, v = problem.check_factors(u, v)
    g = grad_smooth(problem, u, v)
    ru = _projected(g.grad_u, u)
    rv = _projected(g.grad_v, v)
    return float(np.sqrt(np.sum(ru * ru) + np.sum(rv * rv)))


def symmetric_kkt_residual(x, u, tol=BOUNDARY_TOL):
    """Projected-gradient norm of the symmetric objective at ``u``.

    The smooth gradient of ``h(U) = 0.5*||X - U U^T||_F^2`` for symmetric
    ``X`` is ``2 (U U^T - X) U``; the same interior/boundary projection as
    :func:`kkt_residual` is applied entrywise.
    """
    x = symmetrize_checked(x, name="x")
    u = _check_factor(u, "u")
    grad = 2.0 * (u @ u.T - x) @ u
    r = _projected(grad, u, tol=tol)
    return float(np.linalg.norm(r, "fro"))


def fitting_error(x, u):
    """Normalized fitting error ``||X - U U^T||_F^2 / ||X||_F^2``.

    ``u`` is not required to be nonnegative; the unconstrained baseline
    produces signed factors and its error is measured the same way.
    """
    x = as_matrix(x, name="x")
    u = as_matrix(u, name="u")
    if u.shape[0] != x.shape[0]:
        raise ValueError(f"shape mismatch: x {x.shape}, u {u.shape}")
    denom = float(np.sum(x * x))
    if denom == 0.0:
        raise ValueError("fitting_error is undefined for a zero target matrix")
    resid = x - u @ u.T
    return float(np.sum(resid * resid)) / denom


def lambda_threshold(x, u0):
    """Penalty weight above which tolerance-terminated runs are certified.

    Returns ``0.5 * (||X||_2 + ||X - U0 U0^T||_F - sigma_min(X))`` where
    ``sigma_min`` is the algebraically smallest eigenvalue of ``X``.  Any
    ``lam`` strictly above this value guarantees that a convergent descent
    run started from ``V0 = U0`` ends at a point with equal factors, which
    is then a critical point of the symmetric problem.
    """
    x = symmetrize_checked(x, name="x")
    u0 = as_matrix(u0, name="u0")
    if u0.shape[0] != x.shape[0]:
        raise ValueError(f"shape mismatch: x {x.shape}, u0 {u0.shape}")
    init_resid = frobenius_norm(x - u0 @ u0.T)
    return 0.5 * (spectral_norm(x) + init_resid - smallest_eigenvalue(x))


def iterate_norm_bound(x, u0, lam):
    """A-priori bound on ``||U_k||_F^2 + ||V_k||_F^2`` along a descent run.

    For any algorithm that starts at ``V0 = U0`` and never increases the
    split objective, every iterate satisfies

        ||U_k||_F^2 + ||V_k||_F^2
            <= (1/lam + 2*sqrt(r)) * ||X - U0 U0^T||_F^2 + 2*sqrt(r)*||X||_F

    with ``r`` the number of factor columns.  This is the radius used when
    bounding the gradient Lipschitz constant (:func:`lipschitz_bound`).
    """
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    x = as_matrix(x, name="x")
    u0 = as_matrix(u0, name="u0")
    r = u0.shape[1]
    init_resid_sq = float(np.sum((x - u0 @ u0.T) ** 2))
    return (1.0 / lam + 2.0 * np.sqrt(r)) * init_resid_sq + 2.0 * np.sqrt(
        r
    ) * frobenius_norm(x)


def lipschitz_bound(b, lam, x):
    """Gradient Lipschitz constant of the smooth objective on a norm ball.

    On ``{(U, V): ||U||_F^2 + ||V||_F^2 <= b}`` the gradient of the smooth
    part is Lipschitz with constant ``2*b + lam + ||X||_F``.
    """
    if b < 0.0:
        raise ValueError(f"b must be nonnegative, got {b}")
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    return 2.0 * float(b) + float(lam) + frobenius_norm(x)
