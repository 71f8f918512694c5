import itertools

import numpy as np
import pytest

from symnmf.nnls import bpp_solve, solve_rows


def random_spd(rng, r, strength=0.5):
    c = rng.standard_normal((r, r))
    q = c @ c.T + strength * np.eye(r)
    return (q + q.T) / 2


def quad_objective(q, c, u):
    return 0.5 * float(u @ q @ u) - float(c @ u)


def enumeration_oracle(q, c):
    """Exhaustive active-set search: solve the equality-constrained system
    for every subset of free variables, keep the feasible candidates, return
    the one with the smallest objective."""
    r = c.shape[0]
    best = None
    best_val = np.inf
    for mask in itertools.product((False, True), repeat=r):
        free = np.array(mask)
        u = np.zeros(r)
        idx = np.flatnonzero(free)
        if idx.size:
            u[idx] = np.linalg.solve(q[np.ix_(idx, idx)], c[idx])
        if np.all(u >= -1e-13):
            val = quad_objective(q, c, np.maximum(u, 0.0))
            if val < best_val:
                best_val = val
                best = np.maximum(u, 0.0)
    return best


class TestBppSolve:
    def test_projection_onto_orthant(self):
        u = bpp_solve(np.eye(2), np.array([1.0, -1.0]))
        np.testing.assert_allclose(u, [1.0, 0.0], atol=1e-14)

    def test_feasible_unconstrained_optimum(self):
        u = bpp_solve(np.eye(3), np.array([2.0, 0.0, 5.0]))
        np.testing.assert_allclose(u, [2.0, 0.0, 5.0], atol=1e-14)

    def test_nonpositive_rhs_shortcut(self):
        u = bpp_solve(random_spd(np.random.default_rng(0), 4), -np.ones(4))
        assert np.array_equal(u, np.zeros(4))

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            q = random_spd(rng, 3)
            c = rng.standard_normal(3) * 2.0
            expected = enumeration_oracle(q, c)
            got = bpp_solve(q, c)
            np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_complementarity_500_trials(self):
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(500):
            r = int(rng.integers(1, 8))
            q = random_spd(rng, r)
            c = rng.standard_normal(r) * 3.0
            u = bpp_solve(q, c)
            y = q @ u - c
            assert np.all(u >= 0.0)
            assert np.all(y >= -1e-9)
            worst = max(worst, float(np.max(np.minimum(u, y), initial=0.0)))
        assert worst <= 1e-9

    def test_projected_gradient_fallback_matches_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            q = random_spd(rng, 3)
            c = rng.standard_normal(3) * 2.0
            expected = enumeration_oracle(q, c)
            got = bpp_solve(q, c, max_pivot_rounds=0)
            np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_determinism(self):
        rng = np.random.default_rng(10)
        q = random_spd(rng, 5)
        c = rng.standard_normal(5)
        first = bpp_solve(q, c)
        second = bpp_solve(q, c)
        assert np.array_equal(first, second)

    def test_at_most_one_of_pair_active(self):
        # strong-convexity certificate: the solution is never worse than the
        # clipped unconstrained solution
        rng = np.random.default_rng(11)
        for _ in range(100):
            r = int(rng.integers(1, 6))
            q = random_spd(rng, r)
            c = rng.standard_normal(r)
            u = bpp_solve(q, c)
            clipped = np.maximum(np.linalg.solve(q, c), 0.0)
            assert quad_objective(q, c, u) <= quad_objective(q, c, clipped) + 1e-12

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            bpp_solve(np.eye(2), np.array([np.nan, 1.0]))
        with pytest.raises(ValueError):
            bpp_solve(np.array([[np.inf, 0.0], [0.0, 1.0]]), np.ones(2))


class TestSolveRows:
    def test_fixed_point_when_target_is_exact(self):
        rng = np.random.default_rng(12)
        v = rng.random((6, 3))
        x = v @ v.T
        u = solve_rows((x + x.T) / 2, v, lam=0.7)
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-12)

    def test_penalty_dominance_limit(self):
        rng = np.random.default_rng(13)
        v = rng.random((5, 2))
        x = rng.random((5, 5))
        u = solve_rows((x + x.T) / 2, v, lam=1e8)
        assert np.max(np.abs(u - v)) < 1e-6

    def test_random_probe_optimality(self):
        rng = np.random.default_rng(14)
        n, r, lam = 4, 2, 0.8
        x = rng.random((n, n))
        x = (x + x.T) / 2
        v = rng.random((n, r))

        def objective(u):
            return 0.5 * np.linalg.norm(x - u @ v.T, "fro") ** 2 + 0.5 * lam * np.linalg.norm(u - v, "fro") ** 2

        u_star = solve_rows(x, v, lam)
        best = objective(u_star)
        for _ in range(10_000):
            probe = rng.random((n, r)) * 2.0
            assert best <= objective(probe) + 1e-12

    def test_sequential_determinism(self):
        rng = np.random.default_rng(15)
        x = rng.random((8, 8))
        x = (x + x.T) / 2
        v = rng.random((8, 3))
        a = solve_rows(x, v, lam=0.5)
        b = solve_rows(x, v, lam=0.5)
        assert np.array_equal(a, b)

    def test_parallel_agrees_with_sequential(self):
        rng = np.random.default_rng(16)
        x = rng.standard_normal((30, 30))
        x = (x + x.T) / 2
        v = rng.random((30, 4))
        seq = solve_rows(x, v, lam=0.3, threads=1)
        par = solve_rows(x, v, lam=0.3, threads=4)
        assert np.max(np.abs(seq - par)) <= 1e-12

    def test_result_is_nonnegative_and_optimal_per_row(self):
        rng = np.random.default_rng(17)
        x = rng.standard_normal((10, 10))
        x = (x + x.T) / 2
        v = rng.random((10, 3))
        lam = 0.9
        u = solve_rows(x, v, lam)
        assert float(u.min()) >= 0.0
        gram = v.T @ v + lam * np.eye(3)
        rhs = x @ v + lam * v
        for i in range(10):
            expected = enumeration_oracle((gram + gram.T) / 2, rhs[i])
            np.testing.assert_allclose(u[i], expected, atol=1e-9)

    def test_shape_and_lam_validation(self):
        with pytest.raises(ValueError, match="square"):
            solve_rows(np.ones((2, 3)), np.ones((2, 1)), lam=1.0)
        with pytest.raises(ValueError, match="rows"):
            solve_rows(np.eye(3), np.ones((2, 1)), lam=1.0)
        with pytest.raises(ValueError, match="positive"):
            solve_rows(np.eye(2), np.ones((2, 1)), lam=0.0)
