from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scdiar import BvlsNonConvergence, solve_bvls, solve_integer


def brute_force_binary(A):
    """Independent reference enumeration with plain Python arithmetic."""
    m, n = A.shape
    best = None
    for bits in itertools.product((0, 1), repeat=n):
        obj = 0.0
        for i in range(m):
            row = sum(A[i, j] * bits[j] for j in range(n)) - 1.0
            obj += row * row
        support = tuple(j for j, b in enumerate(bits) if b)
        key = (obj, sum(bits), support)
        if best is None or key < best:
            best = key
    return best  # (objective, ones, support)


def kkt_violation(A, x, tol_at=1e-9):
    g = 2.0 * A.T @ (A @ x - np.ones(A.shape[0]))
    viol = np.where(x <= tol_at, np.maximum(-g, 0.0),
                    np.where(x >= 1.0 - tol_at, np.maximum(g, 0.0), np.abs(g)))
    return float(viol.max())


class TestSolveBvls:
    def test_block_identity(self):
        sol = solve_bvls([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(sol.x, [1.0, 1.0], atol=1e-12)
        assert sol.objective == pytest.approx(0.0, abs=1e-15)

    def test_clamps_to_upper_bound(self):
        # unconstrained optimum is 2.5, box caps it at 1
        sol = solve_bvls([[0.4]])
        np.testing.assert_allclose(sol.x, [1.0], atol=1e-12)
        assert sol.objective == pytest.approx(0.36, abs=1e-12)

    def test_interior_solution_matches_normal_equations(self):
        # Oracle: the 2x2 normal equations A'A x = A'1 solve to x = (5/9, 8/9),
        # strictly inside the box, computed by hand and verified with
        # np.linalg.solve below.
        A = np.array([[1.0, 0.5], [0.2, 1.0]])
        oracle = np.linalg.solve(A.T @ A, A.T @ np.ones(2))
        np.testing.assert_allclose(oracle, [5.0 / 9.0, 8.0 / 9.0], atol=1e-12)
        assert (oracle > 0).all() and (oracle < 1).all()
        sol = solve_bvls(A)
        np.testing.assert_allclose(sol.x, oracle, atol=1e-9)

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="NaN"):
            solve_bvls([[np.nan, 0.1]])

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="nonempty"):
            solve_bvls(np.empty((0, 0)))

    def test_nonconvergence_carries_best_iterate(self):
        A = np.random.default_rng(0).uniform(size=(6, 4))
        with pytest.raises(BvlsNonConvergence) as err:
            solve_bvls(A, max_iter=1)
        best = err.value.best
        assert best.x.shape == (4,)
        assert (best.x >= 0).all() and (best.x <= 1).all()

    def test_duplicate_columns_handled(self):
        sol = solve_bvls([[1.0, 1.0], [1.0, 1.0]])
        assert sol.kkt_residual <= 1e-10
        assert sol.objective == pytest.approx(0.0, abs=1e-10)

    def test_deterministic(self, rng):
        A = rng.uniform(size=(20, 6))
        a = solve_bvls(A)
        b = solve_bvls(A)
        assert np.array_equal(a.x, b.x)
        assert a.objective == b.objective


class TestSolveInteger:
    def test_block_identity(self):
        sol = solve_integer([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(sol.x, [1.0, 1.0])
        assert sol.objective == 0.0
        assert sol.enumerated == 4

    def test_duplicate_columns_tie_break(self):
        # both single-column picks reach objective 0; fewer ones, then the
        # lexicographically smallest support wins -> column 0
        sol = solve_integer([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_array_equal(sol.x, [1.0, 0.0])
        assert sol.objective == 0.0

    def test_cap_guard(self):
        with pytest.raises(ValueError, match="cap"):
            solve_integer(np.full((2, 5), 0.5), cap=4)

    def test_random_instance_matches_independent_enumeration(self):
        A = np.random.default_rng(7).uniform(size=(6, 4))
        sol = solve_integer(A)
        obj, ones, support = brute_force_binary(A)
        assert sol.objective == pytest.approx(obj, rel=1e-12)
        assert tuple(np.flatnonzero(sol.x).tolist()) == support

    @given(st.integers(0, 200))
    def test_tie_break_against_reference(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.uniform(size=(rng.integers(1, 6), rng.integers(1, 5)))
        sol = solve_integer(A)
        obj, ones, support = brute_force_binary(A)
        assert sol.objective == pytest.approx(obj, rel=1e-12, abs=1e-12)
        assert int(sol.x.sum()) == ones
        assert tuple(np.flatnonzero(sol.x).tolist()) == support


class TestSolverProperties:
    def test_relaxation_bound_on_random_instances(self):
        rng = np.random.default_rng(100)
        for _ in range(200):
            m = int(rng.integers(1, 20))
            n = int(rng.integers(1, 9))
            A = rng.uniform(1e-6, 1.0, size=(m, n))
            relaxed = solve_bvls(A)
            integer = solve_integer(A)
            assert relaxed.objective <= integer.objective * (1 + 1e-12) + 1e-12

    def test_kkt_certificate_rate(self):
        rng = np.random.default_rng(2024)
        solved = 0
        failed = 0
        for _ in range(1000):
            m = int(rng.integers(1, 51))
            n = int(rng.integers(1, 11))
            A = rng.uniform(1e-9, 1.0, size=(m, n))
            try:
                sol = solve_bvls(A)
            except BvlsNonConvergence:
                failed += 1
                continue
            assert sol.kkt_residual <= 1e-10
            assert kkt_violation(A, sol.x) <= 1e-8
            solved += 1
        assert solved >= 990, f"only {solved}/1000 certified"

    def test_duplicate_column_never_increases_objective(self):
        rng = np.random.default_rng(55)
        for _ in range(50):
            A = rng.uniform(size=(int(rng.integers(2, 15)), int(rng.integers(1, 6))))
            base = solve_bvls(A).objective
            dup = np.hstack([A, A[:, :1]])
            assert solve_bvls(dup).objective <= base + 1e-9

    @given(arrays(np.float64, (4, 3), elements=st.floats(0.01, 0.99)))
    def test_feasible_and_certified(self, A):
        sol = solve_bvls(A)
        assert (sol.x >= 0.0).all() and (sol.x <= 1.0).all()
        assert sol.kkt_residual <= 1e-10
        assert sol.objective <= solve_integer(A).objective + 1e-12
