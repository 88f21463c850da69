"""Cube discretization: rows, columns, pricing, and transfer guarantees."""

import math

import numpy as np
import pytest

from maxent_effects.closed_form import r2_to_variance_bound, solve_homogeneous
from maxent_effects.datasets import marginal_table
from maxent_effects.errors import ParameterError
from maxent_effects.grid_lp import (
    MASS_FLOOR,
    MAX_RESOLUTION,
    Atom,
    CubeGrid,
    DiscretizedProblem,
    atoms_from_solution,
    build_problem,
)
from maxent_effects.lp_solver import InequalityRow, LpSolution, RangeRow, solve
from maxent_effects.model import StratifiedTable, entropy, joint_probs

RNG_SEED = 7261

# single category whose exact solution triple (0.45, 0.25, 0.65) lies on
# the centers of every grid with m divisible by 10
TABLE_A = StratifiedTable.from_counts({"a": (55, 117, 165, 63)})

# two categories, exact triples (0.45, 0.25, 0.65) and (0.35, 0.15, 0.55)
TABLE_B = StratifiedTable.from_counts(
    {"a": (55, 117, 165, 63), "b": (39, 77, 221, 63)}
)


def snap_atom(problem, triple, category=0, mass=1.0):
    m = problem.grid.m
    j, k, l = (min(int(x * m), m - 1) for x in triple.as_tuple())
    centers = problem.grid.centers
    return Atom(
        category=category,
        label=problem.table.labels[category],
        j=j,
        k=k,
        l=l,
        pi=float(centers[j]),
        r0=float(centers[k]),
        r1=float(centers[l]),
        mass=mass,
    )


class TestCubeGrid:
    def test_centers_and_width(self):
        g = CubeGrid(4)
        assert g.centers == pytest.approx([0.125, 0.375, 0.625, 0.875])
        assert g.width == 0.25
        assert g.n_cells == 64

    def test_ravel_round_trip(self):
        rng = np.random.default_rng(RNG_SEED)
        g = CubeGrid(13)
        for _ in range(200):
            j, k, l = (int(v) for v in rng.integers(0, 13, size=3))
            assert g.unravel(g.ravel(j, k, l)) == (j, k, l)

    def test_validation(self):
        with pytest.raises(ParameterError):
            CubeGrid(0)
        with pytest.raises(ParameterError):
            CubeGrid(MAX_RESOLUTION + 1)
        with pytest.raises(ParameterError):
            CubeGrid(2.5)
        with pytest.raises(ParameterError):
            CubeGrid(True)


class TestProblemAssembly:
    def test_row_layout_and_bounds(self):
        eps = 1e-3
        p = build_problem(TABLE_B, 10, epsilon=eps)
        assert p.n_rows == 8
        n = TABLE_B.total
        targets = TABLE_B.counts_matrix() / n
        for c in range(2):
            for cell in range(4):
                row = p.rows[4 * c + cell]
                assert isinstance(row, RangeRow)
                assert row.lower == pytest.approx(targets[c, cell] - eps, abs=1e-15)
                assert row.upper == pytest.approx(targets[c, cell] + eps, abs=1e-15)

    def test_variance_rows_appended(self):
        p = build_problem(TABLE_B, 10, r2_propensity=0.05, r2_prognosis=0.02)
        assert p.n_rows == 10
        assert p.variance_row_exposure == 8
        assert p.variance_row_outcome == 9
        assert p.marginal_exposure == pytest.approx(0.4)
        assert p.marginal_outcome == pytest.approx(0.36)
        exposure_row = p.rows[8]
        outcome_row = p.rows[9]
        assert isinstance(exposure_row, InequalityRow)
        assert exposure_row.rhs == pytest.approx(
            r2_to_variance_bound(0.05, 0.4), abs=1e-15
        )
        assert outcome_row.rhs == pytest.approx(
            r2_to_variance_bound(0.02, 0.36), abs=1e-15
        )

    def test_column_count_and_split_round_trip(self):
        p = build_problem(TABLE_B, 7)
        assert p.n_columns == 2 * 343
        rng = np.random.default_rng(RNG_SEED + 1)
        for col in rng.integers(0, p.n_columns, size=100):
            c, j, k, l = p.split_column(int(col))
            assert c * p.grid.n_cells + p.grid.ravel(j, k, l) == int(col)
        with pytest.raises(ParameterError):
            p.split_column(p.n_columns)

    def test_column_coefficients_match_center_formulas(self):
        p = build_problem(TABLE_B, 5)
        lp = p.as_lp()
        rng = np.random.default_rng(RNG_SEED + 2)
        cols = rng.integers(0, p.n_columns, size=20)
        block = lp.columns(cols)
        for pos, col in enumerate(cols):
            c, j, k, l = p.split_column(int(col))
            pi, r0, r1 = (x / 5 + 0.1 for x in (j, k, l))
            expected = np.zeros(p.n_rows)
            expected[4 * c + 0] = (1 - pi) * r0
            expected[4 * c + 1] = pi * r1
            expected[4 * c + 2] = (1 - pi) * (1 - r0)
            expected[4 * c + 3] = pi * (1 - r1)
            assert block[:, pos] == pytest.approx(expected, abs=1e-12)

    def test_objective_is_cell_entropy(self):
        p = build_problem(TABLE_A, 6)
        lp = p.as_lp()
        rng = np.random.default_rng(RNG_SEED + 3)
        cols = rng.integers(0, p.n_columns, size=30)
        values = lp.objective(cols)
        centers = p.grid.centers
        for pos, col in enumerate(cols):
            _, j, k, l = p.split_column(int(col))
            t = Atom(0, "a", j, k, l, centers[j], centers[k], centers[l], 1.0).triple()
            assert values[pos] == pytest.approx(entropy(t), abs=1e-12)

    def test_fast_pricing_matches_generic(self):
        p = build_problem(TABLE_B, 6, r2_propensity=0.05, r2_prognosis=0.02)
        rng = np.random.default_rng(RNG_SEED + 4)
        duals = rng.normal(size=p.n_rows)
        # span crossing the category boundary at 216
        start, stop = 150, 350
        idx = np.arange(start, stop)
        for include in (True, False):
            fast = p._reduced_costs(duals, start, stop, include)
            generic = -(duals @ p._columns(idx))
            if include:
                generic = generic + p._objective(idx)
            assert fast == pytest.approx(generic, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ParameterError):
            build_problem(TABLE_A, 10, epsilon=-1e-9)
        with pytest.raises(ParameterError):
            build_problem(TABLE_A, 0)


class TestFeasibilityTransfer:
    def test_exact_table_solves_to_closed_form(self):
        # zero slack, solution triple on the grid: the LP must find the
        # single-cell optimum and tie the analytic entropy
        p = build_problem(TABLE_A, 10, epsilon=0.0)
        sol = solve(p.as_lp())
        assert sol.status == "optimal"
        reference = solve_homogeneous(joint_probs(TABLE_A))
        assert sol.objective == pytest.approx(
            reference.entropy_per_individual, abs=1e-9
        )
        atoms = atoms_from_solution(p, sol)
        assert len(atoms) == 1
        atom = atoms[0]
        assert (atom.j, atom.k, atom.l) == (4, 2, 6)
        assert atom.mass == pytest.approx(1.0, abs=1e-9)

    def test_snapped_solution_residual_shrinks_with_m(self):
        table = marginal_table()
        triple = solve_homogeneous(joint_probs(table)).triple
        for m in (10, 20, 40, 80):
            p = build_problem(table, m, epsilon=0.0)
            atom = snap_atom(p, triple)
            residual = p.residuals(p.activities([atom])).max()
            assert residual <= 1.5 / m

    def test_on_center_snap_is_exact(self):
        p = build_problem(TABLE_A, 10, epsilon=0.0)
        triple = solve_homogeneous(joint_probs(TABLE_A)).triple
        atom = snap_atom(p, triple)
        assert p.residuals(p.activities([atom])).max() <= 1e-12


class TestOptimumStructure:
    def test_nested_grid_monotone(self):
        # centers of the m-grid are a subset of the 3m-grid's centers, so
        # every coarse solution stays available and the optimum cannot drop
        table = StratifiedTable.from_counts({"x": (13.0, 37.0, 61.0, 23.0)})
        entropies = {}
        for m in (6, 18):
            sol = solve(build_problem(table, m, epsilon=1e-3).as_lp())
            assert sol.status == "optimal"
            entropies[m] = sol.objective
        assert entropies[18] >= entropies[6] - 1e-12

    def test_bounded_by_closed_form_plus_slack_allowance(self):
        # relaxing each cell by eps can lift the optimum by at most
        # 4 h(eps) + 8 eps per category (entropy modulus of continuity)
        table = marginal_table()
        eps = 1e-3
        sol = solve(build_problem(table, 45, epsilon=eps).as_lp())
        assert sol.status == "optimal"
        reference = solve_homogeneous(joint_probs(table)).entropy_per_individual
        allowance = 4 * (-eps * math.log(eps)) + 8 * eps
        assert sol.objective <= reference + allowance + 1e-9

    def test_variance_rows_never_raise_entropy(self):
        plain = solve(build_problem(TABLE_B, 10, epsilon=1e-3).as_lp())
        constrained_problem = build_problem(
            TABLE_B, 10, r2_propensity=0.05, r2_prognosis=0.02, epsilon=1e-3
        )
        constrained = solve(constrained_problem.as_lp())
        assert plain.status == constrained.status == "optimal"
        assert constrained.objective <= plain.objective + 1e-9
        # the reported vertex satisfies the variance rows when recomputed
        atoms = atoms_from_solution(constrained_problem, constrained)
        residuals = constrained_problem.residuals(constrained_problem.activities(atoms))
        assert residuals.max() <= 1e-8

    def test_infeasible_when_grid_cannot_reach_targets(self):
        # baseline risk 0.0189 is below the smallest m=10 center 0.05 and
        # the tiny slack cannot bridge the gap
        sol = solve(build_problem(marginal_table(), 10, epsilon=1e-6).as_lp())
        assert sol.status == "infeasible"
        assert sol.infeasible_rows

    def test_exposure_swap_maps_exact_solution(self):
        # zero slack pins the unique point-mass optimum per category, so
        # the swapped vertex is exactly the mirrored one
        m = 10
        base_problem = build_problem(TABLE_B, m, epsilon=0.0)
        swapped_problem = build_problem(TABLE_B.swap_exposure(), m, epsilon=0.0)
        base = solve(base_problem.as_lp())
        swapped = solve(swapped_problem.as_lp())
        assert base.status == swapped.status == "optimal"
        assert swapped.objective == pytest.approx(base.objective, abs=1e-9)
        base_atoms = {
            (a.category, a.j, a.k, a.l): a.mass
            for a in atoms_from_solution(base_problem, base)
        }
        swapped_atoms = {
            (a.category, m - 1 - a.j, a.l, a.k): a.mass
            for a in atoms_from_solution(swapped_problem, swapped)
        }
        assert set(base_atoms) == set(swapped_atoms)
        for key, mass in base_atoms.items():
            assert swapped_atoms[key] == pytest.approx(mass, abs=1e-6)

    def test_exposure_swap_preserves_optimum_off_grid(self):
        # blend solutions admit mirrored alternative vertices, so only the
        # objective and per-category aggregates are pinned at atom level
        m = 25
        table = marginal_table()
        base_problem = build_problem(table, m, epsilon=1e-3)
        swapped_problem = build_problem(table.swap_exposure(), m, epsilon=1e-3)
        base = solve(base_problem.as_lp())
        swapped = solve(swapped_problem.as_lp())
        assert base.status == swapped.status == "optimal"
        assert swapped.objective == pytest.approx(base.objective, abs=1e-9)
        base_atoms = atoms_from_solution(base_problem, base)
        swapped_atoms = atoms_from_solution(swapped_problem, swapped)
        mass_b = sum(a.mass for a in base_atoms)
        mass_s = sum(a.mass for a in swapped_atoms)
        assert mass_s == pytest.approx(mass_b, abs=1e-9)
        mean_pi_b = sum(a.mass * a.pi for a in base_atoms) / mass_b
        mean_pi_s = sum(a.mass * (1 - a.pi) for a in swapped_atoms) / mass_s
        assert mean_pi_s == pytest.approx(mean_pi_b, abs=2.0 / m)


class TestAtomsAndEvaluation:
    def test_mass_floor_drops_noise(self):
        p = build_problem(TABLE_A, 10)
        fake = LpSolution(
            status="optimal",
            columns=np.array([5, 426]),
            masses=np.array([MASS_FLOOR / 10, 0.5]),
            objective=0.0,
            row_activity=np.zeros(p.n_rows),
            duals=np.zeros(p.n_rows),
            iterations=0,
            basis=(),
            at_upper=(),
        )
        atoms = atoms_from_solution(p, fake)
        assert len(atoms) == 1
        assert atoms[0].mass == 0.5
        assert (atoms[0].j, atoms[0].k, atoms[0].l) == p.grid.unravel(426)
        assert atoms[0].label == "a"

    def test_activities_match_manual_computation(self):
        p = build_problem(TABLE_B, 10, r2_propensity=0.05, r2_prognosis=0.02)
        atoms = [
            Atom(0, "a", 0, 0, 0, 0.41, 0.21, 0.63, 0.3),
            Atom(1, "b", 0, 0, 0, 0.37, 0.12, 0.52, 0.7),
        ]
        act = p.activities(atoms)
        for atom in atoms:
            c = atom.category
            assert act[4 * c + 0] == pytest.approx(
                atom.mass * (1 - atom.pi) * atom.r0, abs=1e-15
            )
            assert act[4 * c + 1] == pytest.approx(
                atom.mass * atom.pi * atom.r1, abs=1e-15
            )
        var_e = sum(a.mass * (a.pi - p.marginal_exposure) ** 2 for a in atoms)
        assert act[8] == pytest.approx(var_e, abs=1e-15)
        risk = lambda a: (1 - a.pi) * a.r0 + a.pi * a.r1
        var_d = sum(a.mass * (risk(a) - p.marginal_outcome) ** 2 for a in atoms)
        assert act[9] == pytest.approx(var_d, abs=1e-15)

    def test_activities_reject_bad_category(self):
        p = build_problem(TABLE_A, 10)
        with pytest.raises(ParameterError):
            p.activities([Atom(3, "x", 0, 0, 0, 0.5, 0.5, 0.5, 1.0)])

    def test_residual_semantics(self):
        p = build_problem(TABLE_A, 10, r2_propensity=0.05)
        act = np.zeros(p.n_rows)
        res = p.residuals(act)
        for i, row in enumerate(p.rows):
            if isinstance(row, RangeRow):
                assert res[i] == pytest.approx(max(row.lower, 0.0), abs=1e-15)
            else:
                assert res[i] == pytest.approx(row.rhs, abs=1e-15)
        with pytest.raises(ParameterError):
            p.residuals(np.zeros(3))

    def test_entropy_of_matches_model_entropy(self):
        p = build_problem(TABLE_A, 10)
        atoms = [
            Atom(0, "a", 0, 0, 0, 0.41, 0.21, 0.63, 0.3),
            Atom(0, "a", 0, 0, 0, 0.11, 0.02, 0.16, 0.7),
        ]
        manual = sum(a.mass * entropy(a.triple()) for a in atoms)
        assert p.entropy_of(atoms) == pytest.approx(manual, abs=1e-12)
