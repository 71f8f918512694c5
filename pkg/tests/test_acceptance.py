"""Acceptance suite.

One test per acceptance criterion, each printing a single PASS/FAIL line
(run with ``pytest tests/test_acceptance.py -v -s`` to see them).  Every
tolerance is pinned here; shared solver runs live in module fixtures so
the whole suite stays within its runtime budgets.
"""

import itertools
import time

import numpy as np
import pytest

from symnmf.cli import main as cli_main
from symnmf.cli import synth_target
from symnmf.cluster import assign_labels, clustering_accuracy
from symnmf.graph import build_similarity
from symnmf.nnls import bpp_solve
from symnmf.objective import (
    PenalizedProblem,
    eval_penalized,
    eval_symmetric,
    grad_smooth,
    iterate_norm_bound,
    lambda_threshold,
    symmetric_kkt_residual,
)
from symnmf.solvers import (
    SolverConfig,
    hals_sweep,
    run_solver,
    verify_sufficient_decrease,
)

N, R = 50, 5
SEEDS = list(range(20))


def report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"[ACCEPTANCE {num:02d}] {name}: {status}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def info(num, name, detail):
    print(f"[ACCEPTANCE {num:02d}] {name}: INFO ({detail})")


@pytest.fixture(scope="module")
def decrease_runs():
    """Criteria 1-2: 20 seeded instances under both alternating solvers."""
    t0 = time.perf_counter()
    runs = []
    for seed in SEEDS:
        x, _ = synth_target(N, R, seed=seed)
        cfg = SolverConfig(
            seed=1000 + seed, max_iterations=150, tol_step=0.0, tol_kkt=0.0
        )
        for method in ("symanls", "symhals"):
            runs.append((seed, x, cfg, run_solver(x, R, method, cfg)))
    return runs, time.perf_counter() - t0


def test_c01_sufficient_decrease(decrease_runs):
    runs, elapsed = decrease_runs
    worst = 0.0
    for _, _, _, res in runs:
        rep = verify_sufficient_decrease(res.trace, res.lambda_used)
        worst = max(worst, rep.max_violation)
    ok = worst <= 1e-8 and elapsed <= 60.0
    report(
        1,
        "per-iteration sufficient decrease",
        ok,
        f"max violation {worst:.2e} over {len(runs)} runs, {elapsed:.1f}s",
    )


def test_c02_iterate_bound(decrease_runs):
    runs, _ = decrease_runs
    worst_slack = -np.inf
    for seed, x, cfg, res in runs:
        u0 = np.random.default_rng(cfg.seed).random((N, R))
        bound = iterate_norm_bound(x, u0, res.lambda_used)
        worst_slack = max(worst_slack, max(res.factor_norm_sq_trace) - bound)
    ok = worst_slack <= 1e-8
    report(2, "a-priori iterate norm bound", ok, f"worst excess {worst_slack:.2e}")


def test_c03_symmetric_criticality_certificate():
    x, _ = synth_target(N, R, seed=1)
    checks = []
    for method in ("symanls", "symhals"):
        cfg = SolverConfig(
            seed=3, max_iterations=30000, tol_step=1e-14, tol_kkt=1e-8
        )
        res = run_solver(x, R, method, cfg)
        gap_ratio = np.sqrt(res.symmetry_gap_final) / max(
            1.0, float(np.linalg.norm(res.u_final, "fro"))
        )
        sym_pg = symmetric_kkt_residual(x, np.maximum(res.u_final, 0.0))
        terminated = res.termination in ("step_tol", "kkt_tol")
        checks.append((method, terminated, gap_ratio, sym_pg))
    ok = all(t and g <= 1e-6 and p <= 1e-6 for _, t, g, p in checks)
    detail = "; ".join(
        f"{m}: term={t} gap_ratio={g:.1e} pg={p:.1e}" for m, t, g, p in checks
    )
    # informational rerun well below the certified threshold
    cfg_small = SolverConfig(seed=3, max_iterations=8000, tol_step=0.0, tol_kkt=0.0)
    u0 = np.random.default_rng(cfg_small.seed).random((N, R))
    small_lam = 0.1 * lambda_threshold(x, u0)
    res_small = run_solver(x, R, "symhals", cfg_small, lam=small_lam)
    info(
        3,
        "gap at one tenth of the certified weight",
        f"symmetry_gap {res_small.symmetry_gap_final:.2e} "
        f"{'<=' if res_small.symmetry_gap_final <= 1e-4 else '>'} 1e-4 (not fatal)",
    )
    report(3, "symmetric-criticality certificate", ok, detail)


def test_c04_exact_recovery_and_ordering():
    x, _ = synth_target(N, R, seed=1)
    budget = dict(seed=101, max_iterations=2000, tol_step=0.0, tol_kkt=0.0)
    timings = {}
    results = {}
    for method, lam in (("symanls", 1.0), ("symhals", 15.0), ("pgd", None)):
        t0 = time.perf_counter()
        results[method] = run_solver(x, R, method, SolverConfig(**budget), lam=lam)
        timings[method] = time.perf_counter() - t0
    fit = {m: results[m].trace[-1].fitting_error for m in results}
    ok = (
        fit["symanls"] <= 1e-8
        and fit["symhals"] <= 1e-8
        and fit["pgd"] > max(fit["symanls"], fit["symhals"])
        and max(timings.values()) <= 10.0
    )
    report(
        4,
        "exact recovery and gradient-method ordering",
        ok,
        f"E_final anls={fit['symanls']:.1e} hals={fit['symhals']:.1e} "
        f"pgd={fit['pgd']:.1e}; slowest run {max(timings.values()):.1f}s",
    )


def _enumeration_oracle(q, c):
    r = c.shape[0]
    best, best_val = None, np.inf
    for mask in itertools.product((False, True), repeat=r):
        free = np.flatnonzero(np.array(mask))
        u = np.zeros(r)
        if free.size:
            u[free] = np.linalg.solve(q[np.ix_(free, free)], c[free])
        if np.all(u >= -1e-13):
            u = np.maximum(u, 0.0)
            val = 0.5 * float(u @ q @ u) - float(c @ u)
            if val < best_val:
                best, best_val = u, val
    return best


def test_c05_nnls_oracle_equivalence():
    rng = np.random.default_rng(50)
    worst_gap = 0.0
    for _ in range(200):
        r = int(rng.integers(1, 4))
        m = rng.standard_normal((r, r))
        q = m @ m.T + 0.4 * np.eye(r)
        q = (q + q.T) / 2
        c = rng.standard_normal(r) * 2.0
        got = bpp_solve(q, c)
        expected = _enumeration_oracle(q, c)
        worst_gap = max(worst_gap, float(np.max(np.abs(got - expected))))
    worst_comp = 0.0
    for _ in range(500):
        r = int(rng.integers(1, 8))
        m = rng.standard_normal((r, r))
        q = m @ m.T + 0.3 * np.eye(r)
        q = (q + q.T) / 2
        c = rng.standard_normal(r) * 3.0
        u = bpp_solve(q, c)
        y = q @ u - c
        worst_comp = max(worst_comp, float(np.max(np.minimum(u, y), initial=0.0)))
        worst_comp = max(worst_comp, float(-min(np.min(y), 0.0)))
    ok = worst_gap <= 1e-10 and worst_comp <= 1e-9
    report(
        5,
        "pivoting solver matches active-set enumeration",
        ok,
        f"max deviation {worst_gap:.1e}, max complementarity residual {worst_comp:.1e}",
    )


def test_c06_hals_residual_recursion():
    rng = np.random.default_rng(60)
    u_true = np.abs(rng.standard_normal((30, 4)))
    x = u_true @ u_true.T
    x = (x + x.T) / 2
    u = rng.random((30, 4))
    v = u.copy()
    residual = x - u @ v.T
    worst = 0.0
    for sweep in range(1, 101):
        hals_sweep(residual, u, v, 1.0)
        if sweep % 10 == 0:
            worst = max(worst, float(np.max(np.abs(residual - (x - u @ v.T)))))
    ok = worst <= 1e-9
    report(6, "incremental residual drift", ok, f"max drift {worst:.1e} after 100 sweeps")


def test_c07_gradient_correctness():
    rng = np.random.default_rng(70)
    h = 1e-6
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        r = int(rng.integers(1, min(4, n + 1)))
        u_true = np.abs(rng.standard_normal((n, r)))
        x = u_true @ u_true.T
        x = (x + x.T) / 2
        problem = PenalizedProblem(x=x, lam=float(rng.uniform(0.5, 3.0)), rank=r)
        u = rng.random((n, r)) + 0.01
        v = rng.random((n, r)) + 0.01
        g = grad_smooth(problem, u, v)
        sym_grad = 2.0 * (u @ u.T - x) @ u
        for target, fun, grad in (
            (u, lambda m: eval_penalized(problem, m, v), g.grad_u),
            (v, lambda m: eval_penalized(problem, u, m), g.grad_v),
            (u, lambda m: eval_symmetric(x, m), sym_grad),
        ):
            fd = np.zeros_like(target)
            for idx in np.ndindex(target.shape):
                bump = np.zeros_like(target)
                bump[idx] = h
                fd[idx] = (fun(target + bump) - fun(target - bump)) / (2 * h)
            scale = max(1.0, float(np.max(np.abs(fd))))
            worst = max(worst, float(np.max(np.abs(grad - fd))) / scale)
    ok = worst <= 1e-5
    report(7, "analytic gradients vs central differences", ok, f"worst rel err {worst:.1e}")


def test_c08_trace_inequality():
    rng = np.random.default_rng(80)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        a = rng.standard_normal((n, n))
        a = (a + a.T) / 2
        c = rng.standard_normal((n, n))
        b = c @ c.T
        eigs = np.linalg.eigvalsh(a)
        tr_ab = float(np.trace(a @ b))
        tr_b = float(np.trace(b))
        worst = max(worst, eigs[0] * tr_b - tr_ab, tr_ab - eigs[-1] * tr_b)
    ok = worst <= 1e-9
    report(8, "trace inequality with one psd factor", ok, f"worst violation {worst:.1e}")


def _brute_force_accuracy(pred, truth):
    vals = sorted(set(pred.tolist()) | set(truth.tolist()))
    best = 0
    for perm in itertools.permutations(vals):
        mapping = dict(zip(vals, perm))
        remapped = np.array([mapping[p] for p in pred.tolist()])
        best = max(best, int(np.sum(remapped == truth)))
    return best / pred.shape[0]


def test_c09_clustering_pipeline():
    rng = np.random.default_rng(90)
    centers = np.array([[0.0, 0.0], [30.0, 0.0], [0.0, 30.0]])
    points = np.vstack([rng.standard_normal((20, 2)) + c for c in centers])
    truth = np.repeat(np.arange(3), 20)
    x = build_similarity(points)
    res = run_solver(x, 3, "symanls", SolverConfig(seed=0, max_iterations=3000))
    labels = assign_labels(np.maximum(res.u_final, 0.0))
    acc = clustering_accuracy(labels, truth)

    match_rng = np.random.default_rng(91)
    matching_ok = True
    for _ in range(200):
        r = int(match_rng.integers(2, 7))
        n = int(match_rng.integers(r, 40))
        pred_l = match_rng.integers(0, r, size=n)
        truth_l = match_rng.integers(0, r, size=n)
        if abs(
            clustering_accuracy(pred_l, truth_l) - _brute_force_accuracy(pred_l, truth_l)
        ) > 1e-12:
            matching_ok = False
            break
    ok = acc >= 0.95 and matching_ok
    report(
        9,
        "three-blob clustering and optimal matching",
        ok,
        f"pipeline accuracy {acc:.3f}; matching equals brute force: {matching_ok}",
    )


def test_c10_threshold_magnitude():
    # The certified-threshold sanity band substitutes for image-dataset
    # accuracy tables that cannot be reproduced offline.  The band below is
    # kept as specified even though the synthetic construction used here
    # measurably yields thresholds near 150 (a value inside the band would
    # require the target to be scaled down by its rank); see the project
    # decision log for the analysis.  This check is therefore expected to
    # fail, and that failure is informative, not a regression.
    values = []
    for seed in range(5):
        x, _ = synth_target(N, R, seed=seed)
        u0 = np.random.default_rng(1000 + seed).random((N, R))
        values.append(lambda_threshold(x, u0))
    ok = all(10.0 <= t <= 100.0 for t in values)
    report(
        10,
        "certified threshold magnitude on the synthetic protocol",
        ok,
        f"measured thresholds {', '.join(f'{t:.1f}' for t in values)}; required band [10, 100]",
    )


def test_c11_cli_determinism(tmp_path):
    args = [
        "factorize", "--synth-n", "30", "--rank", "3", "--seed", "17",
        "--solver", "symhals", "--max-iters", "200",
    ]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert cli_main(args + ["--out", str(out1)]) in (0, 2)
    assert cli_main(args + ["--out", str(out2)]) in (0, 2)
    same = all(
        (out1 / name).read_bytes() == (out2 / name).read_bytes()
        for name in ("trace.csv", "u.mtx", "v.mtx", "certificate.json")
    )
    report(11, "bitwise-identical outputs for a fixed seed", same)
