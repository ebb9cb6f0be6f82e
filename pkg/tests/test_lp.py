import numpy as np
import pytest

from ihw.errors import DimensionMismatch
from ihw.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp
from oracles import lp_vertex_oracle


def box(n, hi=np.inf):
    return [(0.0, hi)] * n


class TestExamples:
    def test_simple_upper_bound(self):
        lp = LinearProgram.build([1.0], [([1.0], "<=", 3.0)], box(1))
        sol = solve_lp(lp)
        assert sol.status == OPTIMAL
        assert sol.primal[0] == pytest.approx(3.0)
        assert sol.objective_value == pytest.approx(3.0)

    def test_degenerate_face(self):
        lp = LinearProgram.build([1.0, 1.0], [([1.0, 1.0], "<=", 1.0)], box(2))
        sol = solve_lp(lp)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(1.0)
        assert sol.primal.sum() == pytest.approx(1.0)

    def test_infeasible(self):
        lp = LinearProgram.build(
            [1.0], [([1.0], ">=", 2.0), ([1.0], "<=", 1.0)], box(1)
        )
        assert solve_lp(lp).status == INFEASIBLE

    def test_unbounded(self):
        lp = LinearProgram.build([1.0], [([1.0], ">=", 0.0)], box(1))
        assert solve_lp(lp).status == UNBOUNDED

    def test_equality_constraint(self):
        lp = LinearProgram.build(
            [1.0, 2.0], [([1.0, 1.0], "=", 1.0)], box(2, hi=1.0)
        )
        sol = solve_lp(lp)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(2.0)
        np.testing.assert_allclose(sol.primal, [0.0, 1.0], atol=1e-9)

    def test_free_variable(self):
        lp = LinearProgram.build(
            [-1.0], [([1.0], ">=", -5.0)], [(-np.inf, np.inf)]
        )
        sol = solve_lp(lp)
        assert sol.status == OPTIMAL
        assert sol.primal[0] == pytest.approx(-5.0)
        assert sol.objective_value == pytest.approx(5.0)

    def test_mirrored_bound(self):
        lp = LinearProgram.build([1.0], [], [(-np.inf, 2.0)])
        sol = solve_lp(lp)
        assert sol.status == OPTIMAL
        assert sol.primal[0] == pytest.approx(2.0)

    def test_shifted_bound(self):
        lp = LinearProgram.build([-1.0], [([1.0], "<=", 9.0)], [(1.5, 4.0)])
        sol = solve_lp(lp)
        assert sol.primal[0] == pytest.approx(1.5)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            LinearProgram.build([1.0, 2.0], [([1.0], "<=", 1.0)], box(2))
        with pytest.raises(DimensionMismatch):
            LinearProgram.build([np.nan], [], box(1))
        with pytest.raises(DimensionMismatch):
            LinearProgram.build([1.0], [([1.0], "<<", 1.0)], box(1))


class TestAgainstVertexEnumeration:
    def test_random_bounded_lps(self):
        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(250):
            n = int(rng.integers(2, 7))
            n_rows = int(rng.integers(1, 9))
            A = np.round(rng.normal(size=(n_rows, n)), 2)
            b = np.round(rng.uniform(0.5, 3.0, size=n_rows), 2)
            c = np.round(rng.normal(size=n), 2)
            ub = np.round(rng.uniform(0.5, 4.0, size=n), 2)
            constraints = [(A[i], "<=", b[i]) for i in range(n_rows)]
            lp = LinearProgram.build(c, constraints, [(0.0, ub[j]) for j in range(n)])
            sol = solve_lp(lp)
            # oracle works on the closed form rows
            rows = np.vstack([A, np.eye(n), -np.eye(n)])
            rhs = np.concatenate([b, ub, np.zeros(n)])
            expected, _ = lp_vertex_oracle(c, rows, rhs)
            assert expected is not None  # x=0 is always feasible here
            assert sol.status == OPTIMAL
            assert sol.objective_value == pytest.approx(expected, abs=1e-6)
            checked += 1
        assert checked == 250

    def test_random_lps_with_equalities(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            n = int(rng.integers(2, 5))
            A = np.round(rng.normal(size=(2, n)), 2)
            b = np.round(rng.uniform(0.5, 2.0, size=2), 2)
            c = np.round(rng.normal(size=n), 2)
            share = np.abs(np.round(rng.normal(size=n), 2)) + 0.1
            total = float(share @ np.full(n, 0.5))
            constraints = [(A[0], "<=", b[0]), (A[1], "<=", b[1]), (share, "=", total)]
            lp = LinearProgram.build(c, constraints, box(n, hi=3.0))
            sol = solve_lp(lp)
            rows = np.vstack([A, share, -share, np.eye(n), -np.eye(n)])
            rhs = np.concatenate([b, [total, -total], np.full(n, 3.0), np.zeros(n)])
            expected, _ = lp_vertex_oracle(c, rows, rhs)
            if expected is None:
                assert sol.status == INFEASIBLE
            else:
                assert sol.status == OPTIMAL
                assert sol.objective_value == pytest.approx(expected, abs=1e-6)

    def test_returned_point_feasible(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            A = rng.normal(size=(4, n))
            b = rng.uniform(0.2, 2.0, size=4)
            lp = LinearProgram.build(rng.normal(size=n), [(A[i], "<=", b[i]) for i in range(4)], box(n, 2.0))
            sol = solve_lp(lp)
            assert sol.status == OPTIMAL
            assert np.all(A @ sol.primal <= b + 1e-8)
            assert np.all(sol.primal >= -1e-8)
            assert np.all(sol.primal <= 2.0 + 1e-8)

    def test_deterministic(self):
        rng = np.random.default_rng(12)
        n = 5
        A = rng.normal(size=(6, n))
        b = rng.uniform(0.5, 2.0, size=6)
        c = rng.normal(size=n)
        lp = LinearProgram.build(c, [(A[i], "<=", b[i]) for i in range(6)], box(n, 3.0))
        first = solve_lp(lp)
        second = solve_lp(lp)
        assert first.objective_value == second.objective_value
        np.testing.assert_array_equal(first.primal, second.primal)
