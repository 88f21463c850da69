"""Revised-simplex solver: exact optima, randomized cross-checks, staging."""

import numpy as np
import pytest
from scipy.optimize import linprog

from maxent_effects.errors import ParameterError
from maxent_effects.lp_solver import (
    ROW_CAP,
    InequalityRow,
    LpProblem,
    RangeRow,
    price_columns,
    relax_and_retry,
    solve,
)

RNG_SEED = 90210


def dense(objective, matrix, rows):
    return LpProblem.from_dense(objective, matrix, rows)


def reference_solve(objective, matrix, rows):
    """scipy HiGHS solve of the same maximization, for cross-checking."""
    a_ub, b_ub = [], []
    for coef, row in zip(matrix, rows):
        coef = np.asarray(coef, dtype=float)
        if isinstance(row, RangeRow):
            a_ub.append(coef)
            b_ub.append(row.upper)
            a_ub.append(-coef)
            b_ub.append(-row.lower)
        else:
            a_ub.append(-coef)
            b_ub.append(-row.rhs)
    return linprog(
        -np.asarray(objective, dtype=float),
        A_ub=np.array(a_ub),
        b_ub=np.array(b_ub),
        bounds=(0, None),
        method="highs",
    )


def feasible_instance(rng):
    """Random short-and-wide LP built around a known feasible point."""
    n_rows = int(rng.integers(2, 7))
    n_cols = int(rng.integers(n_rows + 2, 41))
    matrix = rng.uniform(0.05, 1.0, size=(n_rows, n_cols))
    x0 = np.zeros(n_cols)
    support = rng.choice(n_cols, size=int(rng.integers(1, n_rows + 1)), replace=False)
    x0[support] = rng.uniform(0.2, 1.0, size=support.size)
    activity = matrix @ x0
    rows = []
    for i in range(n_rows):
        if i > 0 and rng.uniform() < 0.3:
            rows.append(InequalityRow(activity[i] - rng.uniform(0.0, 0.1)))
        else:
            rows.append(
                RangeRow(
                    activity[i] - rng.uniform(0.0, 0.05),
                    activity[i] + rng.uniform(0.0, 0.05),
                )
            )
    objective = rng.uniform(-1.0, 1.0, size=n_cols)
    return objective, matrix, rows


class TestExactSmallProblems:
    def test_single_equality(self):
        # max x0 + 2 x1 with x0 + x1 = 1
        sol = solve(dense([1.0, 2.0], [[1.0, 1.0]], [RangeRow(1.0, 1.0)]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(2.0, abs=1e-12)
        assert sol.mass_map() == pytest.approx({1: 1.0})

    def test_range_row_upper_binds(self):
        sol = solve(dense([1.0], [[1.0]], [RangeRow(2.0, 5.0)]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(5.0, abs=1e-12)

    def test_inequality_row_binds_from_below(self):
        sol = solve(dense([-1.0], [[1.0]], [InequalityRow(3.0)]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-3.0, abs=1e-12)

    def test_two_row_vertex(self):
        # max x0 + x1 with x0 + 2 x1 = 4 and x0 >= 1; optimum at (4 - 2t, t)
        # pushes all mass to x0: (4, 0) with objective 4
        sol = solve(
            dense(
                [1.0, 1.0],
                [[1.0, 2.0], [1.0, 0.0]],
                [RangeRow(4.0, 4.0), InequalityRow(1.0)],
            )
        )
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(4.0, abs=1e-12)
        assert sol.mass_map() == pytest.approx({0: 4.0})

    def test_contradictory_rows_infeasible(self):
        sol = solve(
            dense(
                [1.0, 1.0],
                [[1.0, 1.0], [1.0, 1.0]],
                [RangeRow(1.0, 1.0), RangeRow(3.0, 3.0)],
            )
        )
        assert sol.status == "infeasible"
        assert sol.infeasible_rows
        assert set(sol.infeasible_rows) <= {0, 1}

    def test_unbounded_ray(self):
        sol = solve(dense([1.0], [[1.0]], [InequalityRow(1.0)]))
        assert sol.status == "unbounded"

    def test_row_activity_reported(self):
        sol = solve(
            dense(
                [0.0, 1.0],
                [[1.0, 1.0], [0.0, 1.0]],
                [RangeRow(1.0, 1.0), RangeRow(0.0, 0.4)],
            )
        )
        assert sol.status == "optimal"
        assert sol.row_activity == pytest.approx([1.0, 0.4], abs=1e-12)


class TestValidation:
    def test_row_cap(self):
        rows = [RangeRow(0.0, 1.0)] * (ROW_CAP + 1)
        with pytest.raises(ParameterError):
            LpProblem(rows, 1, lambda i: np.ones((len(rows), i.size)), lambda i: np.zeros(i.size))

    def test_empty_rows_and_columns(self):
        with pytest.raises(ParameterError):
            LpProblem([], 1, None, None)
        with pytest.raises(ParameterError):
            LpProblem([RangeRow(0.0, 1.0)], 0, None, None)

    def test_range_row_ordering(self):
        with pytest.raises(ParameterError):
            RangeRow(2.0, 1.0)

    def test_from_dense_shape_mismatch(self):
        with pytest.raises(ParameterError):
            LpProblem.from_dense([1.0, 2.0], [[1.0]], [RangeRow(0.0, 1.0)])

    def test_columns_fn_shape_checked(self):
        p = LpProblem(
            [RangeRow(0.0, 1.0)],
            3,
            columns_fn=lambda idx: np.ones((2, idx.size)),
            objective_fn=lambda idx: np.zeros(idx.size),
        )
        with pytest.raises(ParameterError):
            p.columns([0])

    def test_positive_tolerances_required(self):
        p = dense([1.0], [[1.0]], [RangeRow(0.0, 1.0)])
        with pytest.raises(ParameterError):
            solve(p, feasibility_tol=0.0)
        with pytest.raises(ParameterError):
            solve(p, max_iterations=0)


class TestRandomizedCrossCheck:
    def test_agrees_with_reference_solver(self):
        rng = np.random.default_rng(RNG_SEED)
        n_optimal = 0
        for _ in range(50):
            objective, matrix, rows = feasible_instance(rng)
            sol = solve(dense(objective, matrix, rows))
            ref = reference_solve(objective, matrix, rows)
            assert sol.status == "optimal"
            assert ref.status == 0
            assert sol.objective == pytest.approx(-ref.fun, abs=1e-7, rel=1e-7)
            n_optimal += 1
            # vertex feasibility, recomputed from the reported columns
            x = np.zeros(len(objective))
            x[sol.columns] = sol.masses
            act = matrix @ x
            for i, row in enumerate(rows):
                if isinstance(row, RangeRow):
                    assert row.lower - 1e-7 <= act[i] <= row.upper + 1e-7
                else:
                    assert act[i] >= row.rhs - 1e-7
            # vertex sparsity: nonzero columns never exceed row count
            assert sol.columns.size <= len(rows)
        assert n_optimal == 50

    def test_detects_infeasibility(self):
        rng = np.random.default_rng(RNG_SEED + 1)
        for _ in range(15):
            objective, matrix, rows = feasible_instance(rng)
            # duplicate row 0's activity into a far-away disjoint band
            matrix = np.vstack([matrix, matrix[0]])
            rows = list(rows) + [RangeRow(rows[0].upper + 10.0, rows[0].upper + 10.01)]
            sol = solve(dense(objective, matrix, rows))
            ref = reference_solve(objective, matrix, rows)
            assert sol.status == "infeasible"
            assert ref.status == 2
            assert sol.infeasible_rows

    def test_dual_feasibility_certificate(self):
        # at optimality no structural column prices above tolerance
        rng = np.random.default_rng(RNG_SEED + 2)
        for _ in range(20):
            objective, matrix, rows = feasible_instance(rng)
            problem = dense(objective, matrix, rows)
            sol = solve(problem)
            assert sol.status == "optimal"
            assert price_columns(problem, sol.duals, tol=1e-7) is None


class TestDeterminism:
    def test_bit_identical_repeats(self):
        rng = np.random.default_rng(RNG_SEED + 3)
        for _ in range(10):
            objective, matrix, rows = feasible_instance(rng)
            problem = dense(objective, matrix, rows)
            a = solve(problem)
            b = solve(problem)
            assert a.status == b.status
            assert np.array_equal(a.columns, b.columns)
            assert np.array_equal(a.masses, b.masses)
            assert a.objective == b.objective
            assert a.iterations == b.iterations
            assert a.basis == b.basis
            assert a.at_upper == b.at_upper

    def test_column_permutation_preserves_objective(self):
        rng = np.random.default_rng(RNG_SEED + 4)
        for _ in range(10):
            objective, matrix, rows = feasible_instance(rng)
            base = solve(dense(objective, matrix, rows))
            perm = rng.permutation(len(objective))
            permuted = solve(dense(np.asarray(objective)[perm], np.asarray(matrix)[:, perm], rows))
            assert base.status == permuted.status == "optimal"
            assert permuted.objective == pytest.approx(base.objective, abs=1e-9)

    def test_custom_reduced_cost_path_matches_default(self):
        rng = np.random.default_rng(RNG_SEED + 5)
        objective, matrix, rows = feasible_instance(rng)
        matrix = np.asarray(matrix)
        objective = np.asarray(objective)

        def fast_rc(duals, start, stop, include_objective):
            rc = -(duals @ matrix[:, start:stop])
            if include_objective:
                rc = rc + objective[start:stop]
            return rc

        plain = dense(objective, matrix, rows)
        fast = LpProblem(
            rows,
            objective.size,
            columns_fn=lambda idx: matrix[:, idx],
            objective_fn=lambda idx: objective[idx],
            reduced_cost_fn=fast_rc,
        )
        a, b = solve(plain), solve(fast)
        assert a.status == b.status == "optimal"
        assert np.array_equal(a.columns, b.columns)
        assert np.array_equal(a.masses, b.masses)
        assert a.objective == b.objective


class TestPricing:
    def test_dantzig_picks_largest_with_lowest_index_ties(self):
        p = dense([1.0, 3.0, 3.0], [[1.0, 1.0, 1.0]], [RangeRow(0.0, 1.0)])
        assert price_columns(p, np.zeros(1)) == (1, 3.0)

    def test_exclusions_and_tolerance(self):
        p = dense([1.0, 3.0, 3.0], [[1.0, 1.0, 1.0]], [RangeRow(0.0, 1.0)])
        assert price_columns(p, np.zeros(1), exclude={1}) == (2, 3.0)
        assert price_columns(p, np.zeros(1), tol=5.0) is None

    def test_bland_returns_first_improving(self):
        p = dense([-1.0, 2.0, 3.0], [[1.0, 1.0, 1.0]], [RangeRow(0.0, 1.0)])
        assert price_columns(p, np.zeros(1), rule="bland") == (1, 2.0)

    def test_duals_shape_validated(self):
        p = dense([1.0], [[1.0]], [RangeRow(0.0, 1.0)])
        with pytest.raises(ParameterError):
            price_columns(p, np.zeros(2))

    def test_objective_toggle(self):
        p = dense([5.0], [[2.0]], [RangeRow(0.0, 1.0)])
        duals = np.array([1.0])
        with_obj = price_columns(p, duals)
        assert with_obj == (0, 3.0)
        assert price_columns(p, duals, include_objective=False) is None


class TestWarmStart:
    def test_reuses_optimal_basis(self):
        rng = np.random.default_rng(RNG_SEED + 6)
        for _ in range(10):
            objective, matrix, rows = feasible_instance(rng)
            problem = dense(objective, matrix, rows)
            cold = solve(problem)
            warm = solve(problem, warm_start=cold)
            assert warm.status == "optimal"
            assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
            assert warm.iterations <= cold.iterations

    def test_survives_objective_change(self):
        rng = np.random.default_rng(RNG_SEED + 7)
        objective, matrix, rows = feasible_instance(rng)
        cold = solve(dense(objective, matrix, rows))
        shifted = np.asarray(objective) + rng.uniform(-0.1, 0.1, size=len(objective))
        reopt = solve(dense(shifted, matrix, rows), warm_start=cold)
        fresh = solve(dense(shifted, matrix, rows))
        assert reopt.status == fresh.status == "optimal"
        assert reopt.objective == pytest.approx(fresh.objective, abs=1e-8)

    def test_rejects_stale_basis_silently(self):
        # a basis from an unrelated problem must not poison the solve
        p1 = dense([1.0, 2.0], [[1.0, 1.0]], [RangeRow(1.0, 1.0)])
        sol1 = solve(p1)
        p2 = dense(
            [1.0, 1.0, 1.0],
            [[1.0, 2.0, 3.0], [1.0, 0.0, 0.0]],
            [RangeRow(4.0, 4.0), InequalityRow(1.0)],
        )
        warm = solve(p2, warm_start=sol1)
        fresh = solve(p2)
        assert warm.status == "optimal"
        assert warm.objective == pytest.approx(fresh.objective, abs=1e-10)


class TestRelaxAndRetry:
    def test_schedule_validation(self):
        p = dense([1.0], [[1.0]], [RangeRow(0.0, 1.0)])
        with pytest.raises(ParameterError):
            relax_and_retry(p, [])
        with pytest.raises(ParameterError):
            relax_and_retry(p, [1e-6, 1e-6])
        with pytest.raises(ParameterError):
            relax_and_retry(p, [1e-9, 1e-6])

    def test_all_stages_recorded(self):
        p = dense([1.0, 2.0], [[1.0, 1.0]], [RangeRow(1.0, 1.0)])
        sol = relax_and_retry(p, [1e-3, 1e-9])
        assert sol.status == "optimal"
        assert len(sol.stages) == 2
        assert [s.feasibility_tol for s in sol.stages] == [1e-3, 1e-9]
        assert all(s.status == "optimal" for s in sol.stages)

    def test_returns_tightest_feasible_stage(self):
        # two rows pin the same activity 5e-4 apart: satisfiable at 1e-3
        # slack but not at 1e-6
        p = dense(
            [1.0],
            [[1.0], [1.0]],
            [RangeRow(1.0, 1.0), RangeRow(1.0005, 1.0005)],
        )
        sol = relax_and_retry(p, [1e-3, 1e-6])
        assert sol.status == "optimal"
        assert len(sol.stages) == 2
        assert sol.stages[0].status == "optimal"
        assert sol.stages[1].status == "infeasible"
        assert sol.objective == pytest.approx(1.0, abs=2e-3)

    def test_loosest_stage_infeasibility_is_final(self):
        p = dense(
            [1.0],
            [[1.0], [1.0]],
            [RangeRow(1.0, 1.0), RangeRow(3.0, 3.0)],
        )
        sol = relax_and_retry(p, [1e-2, 1e-6])
        assert sol.status == "infeasible"
        assert len(sol.stages) == 1
        assert sol.infeasible_rows
