"""Nonnegative least squares for the alternating factor updates.

Each outer iteration of the alternating solver fixes one factor and
minimizes the split objective over the other.  With ``V`` fixed the
problem separates over the rows of ``U``: row ``i`` solves

    min_{u >= 0}  0.5 * u^T Q u - c_i^T u,
    Q = V^T V + lam * I,    c_i = V^T x_i + lam * v_i,

where ``x_i`` and ``v_i`` are the i-th rows of ``X`` and ``V``.  The
penalty makes ``Q`` positive definite (smallest eigenvalue at least
``lam``), so each row problem has a unique minimizer.

:func:`bpp_solve` finds that minimizer by block principal pivoting: it
searches over partitions of the variables into a free set ``F`` (solved
by the unconstrained normal equations) and a bound set at zero, swapping
every sign-infeasible variable at once while that keeps making progress,
then falling back to single-variable exchanges, and finally to projected
gradient if pivoting exceeds its budget.  The combinatorial exchange is
what makes the alternating solver fast: near convergence almost all rows
keep the same free set, so the per-set Cholesky factors are shared.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .dense import as_matrix

__all__ = ["NumericalError", "bpp_solve", "solve_rows"]

# Full-block exchanges tolerated without reducing the infeasible count
# before switching to one-variable exchanges.
_FULL_EXCHANGE_PATIENCE = 3

# Pivot rounds per variable before abandoning pivoting for projected gradient.
_PIVOT_ROUNDS_PER_VAR = 10


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its stated accuracy."""


def _solve_free(gram, rhs, free_idx, cache):
    """Solve the normal equations restricted to ``free_idx``.

    Cholesky factors are memoized per free set in ``cache`` so that rows
    sharing an active set (the common case near convergence) share the
    factorization.
    """
    key = free_idx.tobytes()
    factor = cache.get(key)
    if factor is None:
        sub = gram[np.ix_(free_idx, free_idx)]
        try:
            factor = cho_factor(sub, lower=True, check_finite=False)
        except LinAlgError as exc:
            raise NumericalError(
                "gram submatrix is not positive definite; the row subproblem "
                "requires a positive penalty weight"
            ) from exc
        cache[key] = factor
    return cho_solve(factor, rhs[free_idx], check_finite=False)


def _kkt_pair(gram, rhs, free, cache):
    """Primal/dual pair for a free-set guess: x on F, y = Qx - c on the rest."""
    r = rhs.shape[0]
    x = np.zeros(r)
    y = np.zeros(r)
    free_idx = np.flatnonzero(free)
    bound_idx = np.flatnonzero(~free)
    if free_idx.size:
        x[free_idx] = _solve_free(gram, rhs, free_idx, cache)
        if bound_idx.size:
            y[bound_idx] = gram[np.ix_(bound_idx, free_idx)] @ x[free_idx] - rhs[bound_idx]
    else:
        y = -rhs.copy()
    return x, y


def _projected_gradient(gram, rhs, x0, tol, max_iterations=200_000):
    """Projected gradient on the row quadratic, step 1 / sigma_max(gram)."""
    step = 1.0 / float(np.linalg.eigvalsh(gram)[-1])
    x = np.maximum(x0, 0.0)
    for _ in range(max_iterations):
        grad = gram @ x - rhs
        x_next = np.maximum(x - step * grad, 0.0)
        # First-order residual: gradient on the support, negative part at zero.
        resid = np.where(x_next > 0.0, grad, np.minimum(grad, 0.0))
        if float(np.max(np.abs(resid), initial=0.0)) <= tol:
            return x_next
        x = x_next
    raise NumericalError(
        "projected-gradient fallback did not converge; gram matrix is too "
        "ill-conditioned for the requested accuracy"
    )


def bpp_solve(gram, rhs, max_pivot_rounds=None, _cache=None):
    """Minimize ``0.5*u^T Q u - c^T u`` over ``u >= 0`` for positive definite Q.

    Parameters
    ----------
    gram : (r, r) array_like
        Symmetric positive definite quadratic term ``Q``.
    rhs : (r,) array_like
        Linear term ``c``.
    max_pivot_rounds : int, optional
        Pivot budget before the projected-gradient fallback; defaults to
        ``10 * r``.  Passing 0 forces the fallback (used in tests).

    Returns
    -------
    numpy.ndarray
        The unique nonnegative minimizer.  At the result, every entry is
        either positive with (numerically) zero gradient or exactly zero
        with nonnegative gradient.
    """
    gram = as_matrix(gram, name="gram")
    rhs = np.asarray(rhs, dtype=np.float64).ravel()
    r = rhs.shape[0]
    if gram.shape != (r, r):
        raise ValueError(f"gram must be ({r}, {r}) to match rhs, got {gram.shape}")
    if not np.all(np.isfinite(rhs)):
        raise ValueError("rhs contains NaN or Inf entries")

    # Nonpositive linear term: u = 0 is optimal (gradient -c >= 0 at zero).
    if np.all(rhs <= 0.0):
        return np.zeros(r)

    if max_pivot_rounds is None:
        max_pivot_rounds = _PIVOT_ROUNDS_PER_VAR * r
    cache = {} if _cache is None else _cache

    free = np.zeros(r, dtype=bool)
    x = np.zeros(r)
    y = -rhs.copy()
    patience = _FULL_EXCHANGE_PATIENCE
    fewest_infeasible = r + 1

    for _ in range(max_pivot_rounds):
        infeasible = (free & (x < 0.0)) | (~free & (y < 0.0))
        n_inf = int(np.count_nonzero(infeasible))
        if n_inf == 0:
            return x
        if n_inf < fewest_infeasible:
            fewest_infeasible = n_inf
            patience = _FULL_EXCHANGE_PATIENCE
            swap = infeasible
        elif patience > 0:
            patience -= 1
            swap = infeasible
        else:
            # Murty's rule: exchange only the largest-index infeasible
            # variable; finite in exact arithmetic.
            swap = np.zeros(r, dtype=bool)
            swap[np.flatnonzero(infeasible)[-1]] = True
        free = free ^ swap
        x, y = _kkt_pair(gram, rhs, free, cache)

    scale = max(1.0, float(np.max(np.abs(rhs))))
    return _projected_gradient(gram, rhs, x, tol=1e-13 * scale)


def _solve_row_block(gram, rhs_rows, out, rows, cache):
    for i, row in enumerate(rows):
        out[row] = bpp_solve(gram, rhs_rows[i], _cache=cache)


def solve_rows(x, v, lam, threads=1):
    """Exact nonnegative update of one factor with the other held fixed.

    Returns the unique ``U >= 0`` minimizing
    ``0.5*||X - U V^T||_F^2 + (lam/2)*||U - V||_F^2``, computed as ``n``
    independent row problems sharing the Gram matrix ``V^T V + lam*I``.

    Rows may be distributed over ``threads`` workers; each row's result is
    written to its own output slot, so the parallel result is identical to
    the sequential one.
    """
    x = as_matrix(x, name="x")
    v = as_matrix(v, name="v")
    if x.shape[0] != x.shape[1]:
        raise ValueError(f"x must be square, got {x.shape}")
    if v.shape[0] != x.shape[0]:
        raise ValueError(f"v must have {x.shape[0]} rows, got {v.shape}")
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")

    n, r = v.shape
    gram = v.T @ v + lam * np.eye(r)
    gram = (gram + gram.T) / 2.0
    rhs = x @ v + lam * v
    cache = {}

    # Rows whose unconstrained solution is already nonnegative are done:
    # for a strictly convex quadratic, a feasible unconstrained optimum is
    # the constrained optimum.  Near convergence that is almost every row,
    # so the combinatorial search only ever touches the stragglers.
    all_free = np.arange(r)
    out = _solve_free(gram, rhs.T, all_free, cache).T
    pending = np.flatnonzero(np.any(out < 0.0, axis=1))
    if pending.size == 0:
        return out

    if threads <= 1 or pending.size == 1:
        _solve_row_block(gram, rhs[pending], out, pending, cache)
        return out

    workers = min(threads, pending.size)
    bounds = np.linspace(0, pending.size, workers + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(
                _solve_row_block, gram, rhs[pending[a:b]], out, pending[a:b], cache
            )
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        for fut in futures:
            fut.result()
    return out
