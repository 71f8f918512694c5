"""Iterative solvers for the split symmetric factorization problem.

Four algorithms share one trace format:

* :func:`sym_anls` alternates exact nonnegative least-squares solves of
  the two factor blocks (each block subproblem is strongly convex thanks
  to the coupling penalty, and is solved by block principal pivoting).
* :func:`sym_hals` cycles through the factor columns, each of which has a
  nonnegative closed-form update, maintaining the fit residual by rank-1
  corrections instead of recomputing it.
* :func:`pgd_symmetric` runs projected gradient descent directly on the
  single-factor objective ``0.5*||X - U U^T||_F^2`` (the slow baseline the
  split formulation is designed to beat).
* :func:`gd_matrix_factorization` drops the nonnegativity constraint and
  runs plain gradient descent, as a comparison curve.

Every run records one :class:`IterationRecord` per iteration: objective
value, normalized fitting error, squared factor gap ``||U - V||_F^2``,
squared step norm and wall time.  The alternating solvers guarantee a
per-iteration objective drop of at least ``(lam/2)`` times the squared
step norm; :func:`verify_sufficient_decrease` checks that property on a
recorded trace, and the ``lambda_threshold`` stored on the result lets a
caller certify that a tolerance-terminated run has (numerically) equal
factors.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dense import as_matrix, frobenius_norm, symmetrize_checked
from .objective import (
    PenalizedProblem,
    eval_symmetric,
    iterate_norm_bound,
    kkt_residual,
    lambda_threshold,
    lipschitz_bound,
    symmetric_kkt_residual,
)
from .nnls import solve_rows

__all__ = [
    "DecreaseReport",
    "IterationRecord",
    "SolveResult",
    "SolverConfig",
    "SOLVER_NAMES",
    "default_lambda",
    "gd_matrix_factorization",
    "hals_column_update",
    "hals_sweep",
    "initial_factor",
    "pgd_symmetric",
    "run_solver",
    "sym_anls",
    "sym_hals",
    "verify_sufficient_decrease",
]

SOLVER_NAMES = ("symanls", "symhals", "pgd", "gdmf")

TERMINATION_STEP = "step_tol"
TERMINATION_KKT = "kkt_tol"
TERMINATION_MAX_ITERS = "max_iters"
TERMINATION_DIVERGED = "diverged"


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters shared by all solvers.

    ``lambda_multiplier`` scales the certified penalty threshold when no
    explicit penalty weight is supplied (see :func:`default_lambda`).
    Iteration stops when the step norm satisfies
    ``||W_{k+1} - W_k||_F <= tol_step * max(1, ||W_k||_F)``, when the
    first-order residual drops below ``tol_kkt``, or at
    ``max_iterations``.  ``init`` is either the string ``"uniform01"``
    (entries i.i.d. uniform on [0, 1), drawn from ``seed``) or an explicit
    nonnegative starting factor; both alternating solvers always start the
    second factor equal to the first.  ``pgd_step`` selects the gradient
    step policy for the two gradient methods: ``"backtracking"`` (Armijo
    halving with warm-started growth) or ``"lipschitz"`` (a fixed step of
    one over the gradient Lipschitz bound on the iterate ball);
    ``pgd_step_size`` overrides both with a fixed step.
    """

    lambda_multiplier: float = 1.01
    max_iterations: int = 5000
    tol_step: float = 1e-9
    tol_kkt: float = 1e-8
    seed: int = 0
    init: "str | np.ndarray" = "uniform01"
    pgd_step: str = "backtracking"
    pgd_step_size: "float | None" = None
    record_every: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tol_step < 0 or self.tol_kkt < 0:
            raise ValueError("tolerances must be nonnegative")
        if not self.lambda_multiplier > 0:
            raise ValueError("lambda_multiplier must be positive")
        if self.pgd_step not in ("lipschitz", "backtracking"):
            raise ValueError(f"unknown pgd_step policy {self.pgd_step!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration diagnostics row."""

    k: int
    f_value: float
    fitting_error: float
    symmetry_gap: float
    step_norm_sq: float
    elapsed_seconds: float


@dataclass(frozen=True)
class SolveResult:
    """Final factors plus the full diagnostic trace and certificate inputs.

    ``termination`` is one of ``step_tol``, ``kkt_tol``, ``max_iters`` or
    ``diverged`` (the last only for the unconstrained gradient method).
    ``lambda_used`` is the penalty weight of the run; for the single-factor
    gradient methods it is the value used to size the Lipschitz step and
    does not enter the objective.  ``lambda_threshold`` is the certified
    threshold computed at the starting point.
    """

    u_final: np.ndarray = field(repr=False)
    v_final: np.ndarray = field(repr=False)
    trace: list[IterationRecord] = field(repr=False)
    termination: str
    kkt_residual_final: float
    symmetry_gap_final: float
    lambda_used: float
    lambda_threshold: float
    solver: str
    # ||U_k||_F^2 + ||V_k||_F^2 per recorded iteration, for checking the
    # a-priori iterate bound; parallel to ``trace``.
    factor_norm_sq_trace: list[float] = field(repr=False, default_factory=list)


def initial_factor(n, rank, config, rng):
    """Starting factor per the config: seeded uniform or a user matrix."""
    if isinstance(config.init, str):
        if config.init != "uniform01":
            raise ValueError(f"unknown init policy {config.init!r}")
        return rng.random((n, rank))
    u0 = as_matrix(config.init, name="init")
    if u0.shape != (n, rank):
        raise ValueError(f"init factor must have shape ({n}, {rank}), got {u0.shape}")
    if float(u0.min()) < 0.0:
        raise ValueError("init factor must be nonnegative")
    return u0.copy()


def default_lambda(x, u0, config):
    """Penalty weight policy: ``lambda_multiplier`` times the certified threshold.

    Returns ``(lam, threshold)``.  The threshold is zero in degenerate
    cases (for example a perfect starting factorization of an identity-like
    target); the weight is then floored at a small multiple of ``||X||_F``
    so the split problem stays well posed.
    """
    threshold = lambda_threshold(x, u0)
    lam = config.lambda_multiplier * threshold
    if lam <= 0.0:
        lam = 1e-6 * max(1.0, frobenius_norm(x))
    return lam, threshold


class _Trace:
    """Accumulates iteration records, recomputing diagnostics from scratch.

    The objective and fitting error are always evaluated directly from the
    current factors rather than from any incrementally maintained residual,
    so recorded values cannot inherit recursion drift.
    """

    def __init__(self, x, lam, record_every=1):
        self.x = x
        self.lam = lam
        self.every = record_every
        self.x_norm_sq = float(np.sum(x * x))
        self.records = []
        self.factor_norms = []
        self.t0 = time.perf_counter()

    def measure(self, u, v):
        resid = self.x - u @ v.T
        gap = u - v
        gap_sq = float(np.sum(gap * gap))
        f = 0.5 * float(np.sum(resid * resid)) + 0.5 * self.lam * gap_sq
        fit_resid = resid if v is u else self.x - u @ u.T
        fit_sq = float(np.sum(fit_resid * fit_resid))
        if self.x_norm_sq > 0.0:
            fit = fit_sq / self.x_norm_sq
        else:
            fit = 0.0 if fit_sq == 0.0 else float("inf")
        return f, fit, gap_sq

    def add(self, k, u, v, step_norm_sq, force=False):
        if self.records and self.records[-1].k == k:
            return
        if not force and self.every > 1 and k % self.every != 0:
            return
        f, fit, gap_sq = self.measure(u, v)
        self.records.append(
            IterationRecord(
                k=k,
                f_value=f,
                fitting_error=fit,
                symmetry_gap=gap_sq,
                step_norm_sq=step_norm_sq,
                elapsed_seconds=time.perf_counter() - self.t0,
            )
        )
        if v is u:
            self.factor_norms.append(2.0 * float(np.sum(u * u)))
        else:
            self.factor_norms.append(float(np.sum(u * u) + np.sum(v * v)))


def _step_stop(step_norm_sq, prev_norm_sq, tol_step):
    return np.sqrt(step_norm_sq) <= tol_step * max(1.0, np.sqrt(prev_norm_sq))


def _alternating_run(problem, config, update, solver_name, threshold):
    """Shared loop of the two alternating solvers.

    ``update(u, v, state)`` returns the next ``(u, v)``; it owns whatever
    incremental state it needs.  Both solvers start from ``V0 = U0``, the
    initialization the iterate-bound and certification results assume.
    """
    x = problem.x
    lam = problem.lam
    rng = np.random.default_rng(config.seed)
    u = initial_factor(problem.n, problem.rank, config, rng)
    v = u.copy()
    if threshold is None:
        threshold = lambda_threshold(x, u)

    trace = _Trace(x, lam, config.record_every)
    trace.add(0, u, v, 0.0, force=True)
    termination = TERMINATION_MAX_ITERS
    state = {"rng": rng}

    for k in range(1, config.max_iterations + 1):
        prev_norm_sq = float(np.sum(u * u) + np.sum(v * v))
        u_next, v_next = update(u, v, state)
        step_norm_sq = float(np.sum((u_next - u) ** 2) + np.sum((v_next - v) ** 2))
        u, v = u_next, v_next

        kkt = kkt_residual(problem, u, v)
        done = False
        if kkt <= config.tol_kkt:
            termination = TERMINATION_KKT
            done = True
        elif _step_stop(step_norm_sq, prev_norm_sq, config.tol_step):
            termination = TERMINATION_STEP
            done = True
        trace.add(k, u, v, step_norm_sq, force=done or k == config.max_iterations)
        if done:
            break

    return SolveResult(
        u_final=u,
        v_final=v,
        trace=trace.records,
        termination=termination,
        kkt_residual_final=kkt_residual(problem, u, v),
        symmetry_gap_final=float(np.sum((u - v) ** 2)),
        lambda_used=lam,
        lambda_threshold=threshold,
        solver=solver_name,
        factor_norm_sq_trace=trace.factor_norms,
    )


def sym_anls(problem, config=None, threshold=None):
    """Alternating exact nonnegative least-squares solver.

    Each iteration solves the penalized subproblem exactly for ``U`` with
    ``V`` fixed and then for ``V`` with ``U`` fixed (the V-block has the
    same row structure because the target is symmetric).  Exact block
    minimization yields the sufficient-decrease property checked by
    :func:`verify_sufficient_decrease`.
    """
    config = config or SolverConfig()

    def update(u, v, state):
        u_next = solve_rows(problem.x, v, problem.lam, threads=config.threads)
        v_next = solve_rows(problem.x, u_next, problem.lam, threads=config.threads)
        return u_next, v_next

    return _alternating_run(problem, config, update, "symanls", threshold)


def hals_column_update(xi, w, lam):
    """Closed-form nonnegative update of one factor column.

    Given the residual ``xi`` that excludes the column's own rank-1
    contribution and the opposite column ``w``, the minimizer of the
    column subproblem is

        max((xi @ w + lam * w) / (||w||^2 + lam), 0)

    computed entrywise.  ``||w||^2 + lam`` must be positive.
    """
    xi = as_matrix(xi, name="xi")
    w = np.asarray(w, dtype=np.float64).ravel()
    if xi.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch: xi {xi.shape}, w length {w.shape[0]}")
    denom = float(w @ w) + lam
    if not denom > 0.0:
        raise ValueError("||w||^2 + lam must be positive")
    return np.maximum((xi @ w + lam * w) / denom, 0.0)


def _reinit_column(column, rng):
    column[:] = 1e-3 * rng.random(column.shape[0])


def hals_sweep(residual, u, v, lam, rng=None):
    """One column sweep of the hierarchical solver, in place.

    ``residual`` must equal ``X - U V^T`` on entry and satisfies the same
    identity on exit; within the sweep each column's old rank-1 term is
    added back, the column pair is updated in closed form, and the new
    term is subtracted.  The update of ``v_i`` uses the transposed
    residual: mid-sweep the residual is not symmetric, and the exact
    column minimizer (required for the per-sweep decrease guarantee)
    contracts against its transpose.

    With ``lam > 0`` the update denominators are always positive.  The
    ``lam = 0`` ablation is allowed: a zero column there is reinitialized
    to small uniform noise drawn from ``rng``.
    """
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    r = u.shape[1]
    for i in range(r):
        ui = u[:, i]
        vi = v[:, i]
        residual += np.outer(ui, vi)

        denom = float(vi @ vi) + lam
        if denom <= 0.0:
            if rng is None:
                raise ValueError("zero column with lam = 0 and no rng to reinitialize")
            _reinit_column(vi, rng)
            denom = float(vi @ vi) + lam
        ui[:] = np.maximum((residual @ vi + lam * vi) / denom, 0.0)

        denom = float(ui @ ui) + lam
        if denom <= 0.0:
            if rng is None:
                raise ValueError("zero column with lam = 0 and no rng to reinitialize")
            _reinit_column(ui, rng)
            denom = float(ui @ ui) + lam
        vi[:] = np.maximum((residual.T @ ui + lam * ui) / denom, 0.0)

        residual -= np.outer(ui, vi)
    return residual


def sym_hals(problem, config=None, threshold=None):
    """Hierarchical column-wise solver with an incremental residual.

    One outer iteration sweeps all factor columns in ascending order,
    updating ``u_i`` then ``v_i`` by their closed forms while maintaining
    the fit residual through rank-1 corrections (one add-back and one
    subtraction per column) instead of recomputing ``X - U V^T``.
    """
    config = config or SolverConfig()

    def update(u, v, state):
        residual = state.get("residual")
        if residual is None:
            residual = problem.x - u @ v.T
        u_next = u.copy()
        v_next = v.copy()
        state["residual"] = hals_sweep(residual, u_next, v_next, problem.lam, state["rng"])
        return u_next, v_next

    return _alternating_run(problem, config, update, "symhals", threshold)


def _h_value(x, u):
    resid = x - u @ u.T
    return 0.5 * float(np.sum(resid * resid))


def _gradient_run(x, rank, config, solver_name, projected):
    """Shared loop of the two single-factor gradient methods."""
    config = config or SolverConfig()
    x = symmetrize_checked(x, name="x")
    rng = np.random.default_rng(config.seed)
    u = initial_factor(x.shape[0], rank, config, rng)

    lam_step, threshold = default_lambda(x, u, config)
    if config.pgd_step_size is not None:
        eta = float(config.pgd_step_size)
    else:
        ball = iterate_norm_bound(x, u, lam_step)
        eta = 1.0 / lipschitz_bound(ball, lam_step, x)
    backtracking = config.pgd_step == "backtracking" and config.pgd_step_size is None

    trace = _Trace(x, lam_step, config.record_every)
    trace.add(0, u, u, 0.0, force=True)
    termination = TERMINATION_MAX_ITERS
    f = _h_value(x, u)
    f_start = f

    for k in range(1, config.max_iterations + 1):
        grad = 2.0 * (u @ u.T - x) @ u
        if backtracking:
            u_next, f_next, eta, ok = _armijo_step(x, u, grad, f, eta, projected)
            if not ok:
                # No decreasing step left; keep the last iterate, already
                # recorded, and report an exhausted budget.
                break
        else:
            u_next = u - eta * grad
            if projected:
                u_next = np.maximum(u_next, 0.0)
            f_next = _h_value(x, u_next)
            if not np.isfinite(f_next) or f_next > 1e9 * max(1.0, f_start):
                # The step blew past the stable region; keep the last
                # finite iterate and flag the run.
                termination = TERMINATION_DIVERGED
                break

        step_norm_sq = 2.0 * float(np.sum((u_next - u) ** 2))
        prev_norm_sq = 2.0 * float(np.sum(u * u))
        u, f = u_next, f_next

        if projected:
            kkt = symmetric_kkt_residual(x, u)
        else:
            kkt = float(np.linalg.norm(2.0 * (u @ u.T - x) @ u, "fro"))
        done = False
        if kkt <= config.tol_kkt:
            termination = TERMINATION_KKT
            done = True
        elif _step_stop(step_norm_sq, prev_norm_sq, config.tol_step):
            termination = TERMINATION_STEP
            done = True
        trace.add(k, u, u, step_norm_sq, force=done or k == config.max_iterations)
        if done:
            break

    if projected:
        kkt_final = symmetric_kkt_residual(x, np.maximum(u, 0.0))
    else:
        kkt_final = float(np.linalg.norm(2.0 * (u @ u.T - x) @ u, "fro"))
    return SolveResult(
        u_final=u,
        v_final=u.copy(),
        trace=trace.records,
        termination=termination,
        kkt_residual_final=kkt_final,
        symmetry_gap_final=0.0,
        lambda_used=lam_step,
        lambda_threshold=threshold,
        solver=solver_name,
        factor_norm_sq_trace=trace.factor_norms,
    )


def _armijo_step(x, u, grad, f, eta, projected, shrink=0.5, c1=1e-4, max_halvings=40):
    """Backtracking step along the (projected) gradient direction.

    The step is warm-started from the previous iteration and allowed to
    grow when the first trial already satisfies the decrease condition.
    Returns ``(u_next, f_next, eta, ok)``; ``ok`` is False when no
    acceptable step remains above underflow.
    """
    eta = min(eta * 2.0, 1e12)
    for _ in range(max_halvings):
        u_next = u - eta * grad
        if projected:
            u_next = np.maximum(u_next, 0.0)
        f_next = _h_value(x, u_next)
        decrease = float(np.sum(grad * (u_next - u)))
        if np.isfinite(f_next) and f_next <= f + c1 * decrease:
            return u_next, f_next, eta, True
        eta *= shrink
    return u, f, eta, False


def pgd_symmetric(x, rank, config=None):
    """Projected gradient descent on the symmetric objective.

    Iterates ``U <- max(U - eta * 2(U U^T - X) U, 0)`` with the step policy
    from the config.  Under backtracking the objective is monotone; if the
    line search cannot find a decreasing step the run stops and reports
    ``max_iters``.
    """
    return _gradient_run(x, rank, config, "pgd", projected=True)


def gd_matrix_factorization(x, rank, config=None):
    """Unconstrained gradient descent on ``0.5*||X - U U^T||_F^2``.

    The comparison baseline: without the nonnegativity constraint plain
    gradient descent converges fast (empirically linearly) on low-rank
    targets.  Divergence under an oversized fixed step is detected and
    reported via ``termination="diverged"``.
    """
    return _gradient_run(x, rank, config, "gdmf", projected=False)


@dataclass(frozen=True)
class DecreaseReport:
    """Outcome of checking the per-iteration decrease inequality."""

    max_violation: float
    tolerance: float = 1e-8

    @property
    def passed(self):
        return self.max_violation <= self.tolerance


def verify_sufficient_decrease(trace, lam, tolerance=1e-8):
    """Check ``f_k - f_{k+1} >= (lam/2) * step_norm_sq_{k+1}`` on a trace.

    Returns a :class:`DecreaseReport` whose ``max_violation`` is the
    largest amount by which any consecutive pair falls short.  The trace
    must come from one of the alternating solvers recorded at full cadence
    (``record_every=1``); thinned traces lose the pairing between steps
    and objective drops.
    """
    if not trace:
        raise ValueError("trace is empty")
    worst = 0.0
    for prev, cur in zip(trace[:-1], trace[1:]):
        required = 0.5 * lam * cur.step_norm_sq
        achieved = prev.f_value - cur.f_value
        worst = max(worst, required - achieved)
    return DecreaseReport(max_violation=worst, tolerance=tolerance)


def run_solver(x, rank, method, config=None, lam=None):
    """Front door used by the command-line interface and the tests.

    Draws the starting factor, applies the penalty-weight policy
    (explicit ``lam`` wins, otherwise ``lambda_multiplier`` times the
    certified threshold), builds the problem and dispatches to the named
    solver: ``symanls``, ``symhals``, ``pgd`` or ``gdmf``.  The two
    single-factor gradient methods have no penalty term, so ``lam`` does
    not apply to them (their step policy derives its own weight).
    """
    config = config or SolverConfig()
    if method not in SOLVER_NAMES:
        raise ValueError(f"unknown solver {method!r}; expected one of {SOLVER_NAMES}")
    x = symmetrize_checked(x, name="x")

    if method in ("pgd", "gdmf"):
        runner = pgd_symmetric if method == "pgd" else gd_matrix_factorization
        return runner(x, rank, config)

    rng = np.random.default_rng(config.seed)
    u0 = initial_factor(x.shape[0], rank, config, rng)
    threshold = lambda_threshold(x, u0)
    if lam is None:
        lam = config.lambda_multiplier * threshold
        if lam <= 0.0:
            lam = 1e-6 * max(1.0, frobenius_norm(x))
    problem = PenalizedProblem(x=x, lam=lam, rank=rank)
    pinned = replace(config, init=u0)
    runner = sym_anls if method == "symanls" else sym_hals
    return runner(problem, pinned, threshold=threshold)
