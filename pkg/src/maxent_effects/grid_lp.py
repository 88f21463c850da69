"""Discretization of the mixture-estimation problem onto a cube grid.

The estimand is a distribution over individual-level triples
(propensity, baseline risk, exposed risk) in the unit cube, one
distribution per covariate category.  Discretizing each axis into ``m``
equal bins and placing candidate mass only at bin centers turns maximum
entropy estimation into a linear program: each candidate cell contributes
its center's per-individual entropy to the objective, and its center's
joint outcome probabilities to the matching rows.

Rows, in fixed order:

* per category, four interval rows tying the weighted cell probabilities
  (unexposed-case, exposed-case, unexposed-noncase, exposed-noncase) to
  the observed joint frequencies, relaxed by ``epsilon`` on both sides;
  frequencies are normalized by the grand total, so per-category activity
  totals the category's population share;
* optionally one inequality row forcing the across-individual variance of
  the propensity (or of the expected risk) to reach the level implied by
  a target discrimination R-squared.

Columns are indexed ``((category * m + j) * m + k) * m + l`` where j, k, l
index the propensity, baseline-risk, and exposed-risk bins.  Coefficient
arrays over the m**3 cells are shared across categories, so memory is
about ``7 * 8 * m**3`` bytes regardless of how many categories there are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .closed_form import r2_to_variance_bound
from .errors import ParameterError
from .lp_solver import InequalityRow, LpProblem, LpSolution, RangeRow
from .model import PropensityPrognosisTriple, StratifiedTable

__all__ = [
    "CubeGrid",
    "Atom",
    "DiscretizedProblem",
    "build_problem",
    "atoms_from_solution",
    "MAX_RESOLUTION",
    "MASS_FLOOR",
]

#: Largest grid resolution; 7 coefficient arrays at m=256 are ~940 MB.
MAX_RESOLUTION = 256

#: Solution masses below this are numerical noise, not atoms.
MASS_FLOOR = 1e-9


@dataclass(frozen=True)
class CubeGrid:
    """Uniform m x m x m grid over the open unit cube, cells at centers."""

    m: int

    def __post_init__(self) -> None:
        if not isinstance(self.m, (int, np.integer)) or isinstance(self.m, bool):
            raise ParameterError("grid resolution must be an integer")
        if not (1 <= self.m <= MAX_RESOLUTION):
            raise ParameterError(
                f"grid resolution must be in [1, {MAX_RESOLUTION}], got {self.m}"
            )

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) / self.m

    @property
    def width(self) -> float:
        return 1.0 / self.m

    @property
    def n_cells(self) -> int:
        return self.m**3

    def ravel(self, j: int, k: int, l: int) -> int:
        return (j * self.m + k) * self.m + l

    def unravel(self, cell: int) -> tuple[int, int, int]:
        m = self.m
        return cell // (m * m), (cell // m) % m, cell % m


@dataclass(frozen=True)
class Atom:
    """One mass point of a discrete mixture, tagged with its grid cell."""

    category: int
    label: str
    j: int
    k: int
    l: int
    pi: float
    r0: float
    r1: float
    mass: float

    def triple(self) -> PropensityPrognosisTriple:
        return PropensityPrognosisTriple(self.pi, self.r0, self.r1)


class DiscretizedProblem:
    """The grid LP for one stratified table.

    Immutable once built; exposes the LP via :meth:`as_lp` and exact
    (non-discretized) row activities for arbitrary atom sets via
    :meth:`activities`, which is what residual reporting uses after
    cluster centroids move off the grid.
    """

    def __init__(
        self,
        table: StratifiedTable,
        grid: CubeGrid,
        r2_propensity: float | None = None,
        r2_prognosis: float | None = None,
        epsilon: float = 1e-3,
    ):
        if epsilon < 0.0:
            raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")
        self.table = table
        self.grid = grid
        self.epsilon = float(epsilon)
        self.r2_propensity = r2_propensity
        self.r2_prognosis = r2_prognosis

        n = table.total
        d = table.n_categories
        self.rhs = table.counts_matrix() / n  # (d, 4), grand-total normalized
        pooled = table.pooled()
        self.marginal_exposure = (pooled.n11 + pooled.n10) / n
        self.marginal_outcome = (pooled.n01 + pooled.n11) / n

        rows: list[RangeRow | InequalityRow] = []
        for c in range(d):
            for cell in range(4):
                target = self.rhs[c, cell]
                rows.append(RangeRow(target - self.epsilon, target + self.epsilon))
        self.variance_row_exposure: int | None = None
        self.variance_row_outcome: int | None = None
        self.variance_bound_exposure: float | None = None
        self.variance_bound_outcome: float | None = None
        if r2_propensity is not None:
            self.variance_bound_exposure = r2_to_variance_bound(
                r2_propensity, self.marginal_exposure
            )
            self.variance_row_exposure = len(rows)
            rows.append(InequalityRow(self.variance_bound_exposure))
        if r2_prognosis is not None:
            self.variance_bound_outcome = r2_to_variance_bound(
                r2_prognosis, self.marginal_outcome
            )
            self.variance_row_outcome = len(rows)
            rows.append(InequalityRow(self.variance_bound_outcome))
        self.rows = tuple(rows)
        self.n_columns = d * grid.n_cells

        # Shared per-cell coefficients, flattened in (j, k, l) order.
        ctr = grid.centers
        pi = ctr[:, None, None]
        r0 = ctr[None, :, None]
        r1 = ctr[None, None, :]
        shape = (grid.m,) * 3
        self.coef_e0d1 = np.broadcast_to((1.0 - pi) * r0, shape).ravel().copy()
        self.coef_e1d1 = np.broadcast_to(pi * r1, shape).ravel().copy()
        self.coef_e0d0 = np.broadcast_to((1.0 - pi) * (1.0 - r0), shape).ravel().copy()
        self.coef_e1d0 = np.broadcast_to(pi * (1.0 - r1), shape).ravel().copy()
        self.cell_entropy = -(
            xlogy(self.coef_e0d1, self.coef_e0d1)
            + xlogy(self.coef_e1d1, self.coef_e1d1)
            + xlogy(self.coef_e0d0, self.coef_e0d0)
            + xlogy(self.coef_e1d0, self.coef_e1d0)
        )
        dev_e = (ctr - self.marginal_exposure) ** 2
        self.coef_var_exposure = np.broadcast_to(dev_e[:, None, None], shape).ravel().copy()
        risk = self.coef_e0d1 + self.coef_e1d1
        self.coef_var_outcome = (risk - self.marginal_outcome) ** 2

    # -- LP plumbing --------------------------------------------------

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def split_column(self, column: int) -> tuple[int, int, int, int]:
        """Global column index -> (category, j, k, l)."""
        if not (0 <= column < self.n_columns):
            raise ParameterError(f"column {column} out of range")
        category, cell = divmod(int(column), self.grid.n_cells)
        j, k, l = self.grid.unravel(cell)
        return category, j, k, l

    def _columns(self, idx: np.ndarray) -> np.ndarray:
        cells = idx % self.grid.n_cells
        cats = idx // self.grid.n_cells
        out = np.zeros((self.n_rows, idx.size))
        for c in range(self.table.n_categories):
            sel = cats == c
            if not sel.any():
                continue
            cc = cells[sel]
            out[4 * c + 0, sel] = self.coef_e0d1[cc]
            out[4 * c + 1, sel] = self.coef_e1d1[cc]
            out[4 * c + 2, sel] = self.coef_e0d0[cc]
            out[4 * c + 3, sel] = self.coef_e1d0[cc]
        if self.variance_row_exposure is not None:
            out[self.variance_row_exposure] = self.coef_var_exposure[cells]
        if self.variance_row_outcome is not None:
            out[self.variance_row_outcome] = self.coef_var_outcome[cells]
        return out

    def _objective(self, idx: np.ndarray) -> np.ndarray:
        return self.cell_entropy[idx % self.grid.n_cells]

    def _reduced_costs(
        self, duals: np.ndarray, start: int, stop: int, include_objective: bool = True
    ) -> np.ndarray:
        """Fast pricing over [start, stop) using the shared cell arrays."""
        n_cells = self.grid.n_cells
        rc = np.empty(stop - start)
        c_first = start // n_cells
        c_last = (stop - 1) // n_cells
        for c in range(c_first, c_last + 1):
            lo = max(start, c * n_cells)
            hi = min(stop, (c + 1) * n_cells)
            a, b = lo - c * n_cells, hi - c * n_cells
            if include_objective:
                seg = self.cell_entropy[a:b].copy()
            else:
                seg = np.zeros(b - a)
            pairs = (
                (duals[4 * c + 0], self.coef_e0d1),
                (duals[4 * c + 1], self.coef_e1d1),
                (duals[4 * c + 2], self.coef_e0d0),
                (duals[4 * c + 3], self.coef_e1d0),
            )
            for y, coef in pairs:
                if y != 0.0:
                    seg -= y * coef[a:b]
            if self.variance_row_exposure is not None:
                y = duals[self.variance_row_exposure]
                if y != 0.0:
                    seg -= y * self.coef_var_exposure[a:b]
            if self.variance_row_outcome is not None:
                y = duals[self.variance_row_outcome]
                if y != 0.0:
                    seg -= y * self.coef_var_outcome[a:b]
            rc[lo - start : hi - start] = seg
        return rc

    def as_lp(self) -> LpProblem:
        return LpProblem(
            self.rows,
            self.n_columns,
            columns_fn=self._columns,
            objective_fn=self._objective,
            reduced_cost_fn=self._reduced_costs,
            name=f"grid(m={self.grid.m}, categories={self.table.n_categories})",
        )

    # -- exact evaluation of arbitrary atom sets ----------------------

    def activities(self, atoms) -> np.ndarray:
        """Row activities of an atom set, evaluated without discretization.

        Accepts any iterable of objects with category, pi, r0, r1, mass
        attributes, on or off the grid.
        """
        act = np.zeros(self.n_rows)
        for atom in atoms:
            c = atom.category
            if not (0 <= c < self.table.n_categories):
                raise ParameterError(f"atom category {c} out of range")
            w = atom.mass
            e0d1 = (1.0 - atom.pi) * atom.r0
            e1d1 = atom.pi * atom.r1
            act[4 * c + 0] += w * e0d1
            act[4 * c + 1] += w * e1d1
            act[4 * c + 2] += w * ((1.0 - atom.pi) - e0d1)
            act[4 * c + 3] += w * (atom.pi - e1d1)
            if self.variance_row_exposure is not None:
                act[self.variance_row_exposure] += (
                    w * (atom.pi - self.marginal_exposure) ** 2
                )
            if self.variance_row_outcome is not None:
                risk = e0d1 + e1d1
                act[self.variance_row_outcome] += (
                    w * (risk - self.marginal_outcome) ** 2
                )
        return act

    def residuals(self, activities: np.ndarray) -> np.ndarray:
        """Per-row constraint violation (0 where satisfied)."""
        activities = np.asarray(activities, dtype=float)
        if activities.shape != (self.n_rows,):
            raise ParameterError("activity vector length must equal the row count")
        out = np.zeros(self.n_rows)
        for i, row in enumerate(self.rows):
            a = activities[i]
            if isinstance(row, RangeRow):
                out[i] = max(row.lower - a, a - row.upper, 0.0)
            else:
                out[i] = max(row.rhs - a, 0.0)
        return out

    def entropy_of(self, atoms) -> float:
        """Mass-weighted per-individual entropy of an atom set."""
        total = 0.0
        for atom in atoms:
            p = np.array(
                [
                    (1.0 - atom.pi) * atom.r0,
                    atom.pi * atom.r1,
                    (1.0 - atom.pi) * (1.0 - atom.r0),
                    atom.pi * (1.0 - atom.r1),
                ]
            )
            total += atom.mass * float(-np.sum(xlogy(p, p)))
        return total


def build_problem(
    table: StratifiedTable,
    m: int,
    r2_propensity: float | None = None,
    r2_prognosis: float | None = None,
    epsilon: float = 1e-3,
) -> DiscretizedProblem:
    """Discretize a stratified table onto an m-resolution cube grid."""
    return DiscretizedProblem(
        table,
        CubeGrid(m),
        r2_propensity=r2_propensity,
        r2_prognosis=r2_prognosis,
        epsilon=epsilon,
    )


def atoms_from_solution(
    problem: DiscretizedProblem,
    solution: LpSolution,
    mass_floor: float = MASS_FLOOR,
) -> tuple[Atom, ...]:
    """Decode LP columns into grid atoms, dropping numerical-noise masses."""
    atoms = []
    labels = problem.table.labels
    centers = problem.grid.centers
    for col, mass in zip(solution.columns, solution.masses):
        if mass < mass_floor:
            continue
        category, j, k, l = problem.split_column(int(col))
        atoms.append(
            Atom(
                category=category,
                label=labels[category],
                j=j,
                k=k,
                l=l,
                pi=float(centers[j]),
                r0=float(centers[k]),
                r1=float(centers[l]),
                mass=float(mass),
            )
        )
    return tuple(atoms)
