"""Primal revised simplex for very wide, very short linear programs.

Solves  maximize c.w  subject to per-row constraints and w >= 0, where a
row is either an interval  lo <= a.w <= hi  or an inequality  a.w >= rhs.
The problems this package builds have a handful of rows (a few dozen) and
up to tens of millions of columns, so the solver never materializes the
constraint matrix: columns are generated on demand and the entering
variable is found by a chunked pricing scan over the column generator.

Implementation notes
--------------------
* Interval rows are handled as range rows with one bounded slack each
  (a.w + s = hi, 0 <= s <= hi - lo) instead of being split in two.
* Feasibility comes from a big-M-free two-phase start with one artificial
  variable per row.  Phase one is accepted as soon as the total artificial
  mass drops below ``feasibility_tol``; surviving artificial values are
  frozen so phase two cannot drift further from feasibility.
* The basis (at most rows x rows, so tiny) is LU-factorized afresh every
  iteration; at this scale refactorization is cheaper than bookkeeping
  and numerically safer than product-form updates.
* Pivot selection is largest reduced cost with lowest-index tie-breaking;
  after a stall of ``10 * n_rows`` consecutive degenerate steps the solver
  switches to Bland's rule until the objective moves again.  All scan and
  reduction orders are fixed, so identical inputs give identical output.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import EstimationError, ParameterError

__all__ = [
    "RangeRow",
    "InequalityRow",
    "LpProblem",
    "LpSolution",
    "StageResult",
    "solve",
    "price_columns",
    "relax_and_retry",
    "ROW_CAP",
]

#: This solver is specialized to short problems; refuse anything taller.
ROW_CAP = 1024

#: Columns priced per block during the entering-variable scan.
PRICE_CHUNK = 1 << 18

_PIVOT_TOL = 1e-10
_DEGENERATE_STEP = 1e-12


@dataclass(frozen=True)
class RangeRow:
    """Interval constraint lower <= activity <= upper."""

    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (self.lower <= self.upper):
            raise ParameterError(
                f"range row needs lower <= upper, got [{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True)
class InequalityRow:
    """One-sided constraint activity >= rhs."""

    rhs: float


Row = RangeRow | InequalityRow


class LpProblem:
    """A wide LP described by row metadata and column generators.

    Parameters
    ----------
    rows : sequence of RangeRow | InequalityRow
    n_columns : int
        Total number of structural columns.
    columns_fn : callable(indices) -> ndarray (n_rows, len(indices))
        Dense coefficients of the requested columns.
    objective_fn : callable(indices) -> ndarray (len(indices),)
        Objective coefficients of the requested columns.
    reduced_cost_fn : callable(duals, start, stop, include_objective), optional
        Fast path computing ``objective - duals @ columns`` for a
        contiguous index span without building the dense block.  The
        default derives it from ``columns_fn``.
    """

    def __init__(
        self,
        rows,
        n_columns: int,
        columns_fn,
        objective_fn,
        reduced_cost_fn=None,
        name: str = "lp",
    ):
        self.rows: tuple[Row, ...] = tuple(rows)
        if not self.rows:
            raise ParameterError("problem needs at least one row")
        if len(self.rows) > ROW_CAP:
            raise ParameterError(
                f"{len(self.rows)} rows exceeds the {ROW_CAP}-row cap of this solver"
            )
        if n_columns <= 0:
            raise ParameterError("problem needs at least one column")
        self.n_columns = int(n_columns)
        self._columns_fn = columns_fn
        self._objective_fn = objective_fn
        self._reduced_cost_fn = reduced_cost_fn
        self.name = name

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def columns(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        out = np.asarray(self._columns_fn(idx), dtype=float)
        if out.shape != (self.n_rows, idx.size):
            raise ParameterError(
                f"columns_fn returned shape {out.shape}, "
                f"expected {(self.n_rows, idx.size)}"
            )
        return out

    def objective(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        return np.asarray(self._objective_fn(idx), dtype=float)

    def reduced_costs(
        self, duals: np.ndarray, start: int, stop: int, include_objective: bool = True
    ) -> np.ndarray:
        """``objective - duals @ columns`` for columns [start, stop)."""
        if self._reduced_cost_fn is not None:
            return self._reduced_cost_fn(duals, start, stop, include_objective)
        idx = np.arange(start, stop, dtype=np.int64)
        rc = -(duals @ self.columns(idx))
        if include_objective:
            rc = rc + self.objective(idx)
        return rc

    @classmethod
    def from_dense(cls, objective, matrix, rows, name: str = "dense") -> LpProblem:
        """Convenience constructor from an explicit coefficient matrix."""
        a = np.asarray(matrix, dtype=float)
        c = np.asarray(objective, dtype=float)
        if a.ndim != 2 or a.shape[0] != len(tuple(rows)) or a.shape[1] != c.size:
            raise ParameterError("matrix shape does not match rows/objective")
        return cls(
            rows,
            c.size,
            columns_fn=lambda idx: a[:, idx],
            objective_fn=lambda idx: c[idx],
            name=name,
        )


@dataclass(frozen=True)
class StageResult:
    """Outcome of one tolerance stage of :func:`relax_and_retry`."""

    feasibility_tol: float
    status: str
    iterations: int
    objective: float


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Solver output.

    ``columns``/``masses`` hold only the nonzero structural variables of
    the final vertex, sorted by column index; at optimality their count
    never exceeds the row count.  ``basis`` and ``at_upper`` snapshot the
    working basis for warm starts.
    """

    status: str  # optimal | infeasible | iteration_limit | unbounded
    columns: np.ndarray
    masses: np.ndarray
    objective: float
    row_activity: np.ndarray
    duals: np.ndarray
    iterations: int
    basis: tuple[int, ...]
    at_upper: tuple[int, ...]
    infeasible_rows: tuple[int, ...] = ()
    stages: tuple[StageResult, ...] = ()

    def mass_map(self) -> dict[int, float]:
        return {int(c): float(m) for c, m in zip(self.columns, self.masses)}


def price_columns(
    problem: LpProblem,
    dual_values: np.ndarray,
    *,
    tol: float = 0.0,
    exclude=(),
    rule: str = "dantzig",
    include_objective: bool = True,
):
    """Scan all structural columns for the best entering candidate.

    Returns ``(column_index, reduced_cost)`` for the candidate with the
    largest reduced cost above ``tol`` (ties broken by lowest index), or
    ``None`` when no column improves, which certifies dual feasibility of
    ``dual_values`` over the whole column set.  Under ``rule="bland"`` the
    first improving index is returned instead.  The scan visits fixed-size
    chunks in index order and never materializes the full matrix.
    """
    duals = np.asarray(dual_values, dtype=float)
    if duals.shape != (problem.n_rows,):
        raise ParameterError("dual vector length must equal the row count")
    excluded = sorted(int(e) for e in exclude)
    best_idx = -1
    best_rc = tol
    for start in range(0, problem.n_columns, PRICE_CHUNK):
        stop = min(start + PRICE_CHUNK, problem.n_columns)
        rc = problem.reduced_costs(duals, start, stop, include_objective)
        for e in excluded:
            if start <= e < stop:
                rc[e - start] = -np.inf
        if rule == "bland":
            hits = np.flatnonzero(rc > tol)
            if hits.size:
                j = int(hits[0])
                return start + j, float(rc[j])
        else:
            j = int(np.argmax(rc))
            if rc[j] > best_rc:
                best_rc = float(rc[j])
                best_idx = start + j
    if best_idx < 0:
        return None
    return best_idx, best_rc


class _Simplex:
    """One solve: working problem, state, and the pivot loop."""

    def __init__(self, problem, feasibility_tol, optimality_tol, max_iterations):
        if feasibility_tol <= 0 or optimality_tol <= 0:
            raise ParameterError("tolerances must be positive")
        self.p = problem
        self.feas_tol = float(feasibility_tol)
        self.opt_tol = float(optimality_tol)
        self.max_iter = int(max_iterations)
        self.R = problem.n_rows
        self.n = problem.n_columns
        self.slack0 = self.n
        self.art0 = self.n + self.R

        b = np.empty(self.R)
        slack_sign = np.empty(self.R)
        slack_ub = np.empty(self.R)
        for i, row in enumerate(problem.rows):
            if isinstance(row, RangeRow):
                b[i] = row.upper
                slack_sign[i] = 1.0
                slack_ub[i] = row.upper - row.lower
            else:
                b[i] = row.rhs
                slack_sign[i] = -1.0
                slack_ub[i] = np.inf
        self.b = b
        self.slack_sign = slack_sign
        self.slack_ub = slack_ub
        self.art_sign = np.where(b >= 0.0, 1.0, -1.0)
        self.art_ub = np.full(self.R, np.inf)

        self.basis = np.arange(self.art0, self.art0 + self.R, dtype=np.int64)
        # nonbasic-at-upper flags for slacks [0:R) and artificials [R:2R)
        self.at_upper = np.zeros(2 * self.R, dtype=bool)
        self.iterations = 0
        self.phase = 1
        self.x_basis = np.zeros(self.R)
        self.duals = np.zeros(self.R)

    # -- working-variable helpers ------------------------------------

    def _work_columns(self, ids: np.ndarray) -> np.ndarray:
        out = np.zeros((self.R, ids.size))
        struct = ids < self.n
        if struct.any():
            out[:, struct] = self.p.columns(ids[struct])
        for pos in np.flatnonzero(~struct):
            w = int(ids[pos])
            if w < self.art0:
                i = w - self.slack0
                out[i, pos] = self.slack_sign[i]
            else:
                i = w - self.art0
                out[i, pos] = self.art_sign[i]
        return out

    def _work_cost(self, ids: np.ndarray) -> np.ndarray:
        out = np.zeros(ids.size)
        if self.phase == 1:
            out[ids >= self.art0] = -1.0
        else:
            struct = ids < self.n
            if struct.any():
                out[struct] = self.p.objective(ids[struct])
        return out

    def _work_ub(self, ids: np.ndarray) -> np.ndarray:
        out = np.full(ids.size, np.inf)
        slack = (ids >= self.slack0) & (ids < self.art0)
        out[slack] = self.slack_ub[ids[slack] - self.slack0]
        art = ids >= self.art0
        out[art] = self.art_ub[ids[art] - self.art0]
        return out

    def _effective_rhs(self) -> np.ndarray:
        up_s = self.at_upper[: self.R]
        up_a = self.at_upper[self.R :]
        b = self.b.copy()
        b -= np.where(up_s, self.slack_sign * self.slack_ub, 0.0)
        b -= np.where(up_a, self.art_sign * self.art_ub, 0.0)
        return b

    # -- one phase of pivoting ---------------------------------------

    def _refactor(self):
        bmat = self._work_columns(self.basis)
        try:
            lu = lu_factor(bmat, check_finite=False)
        except Exception as exc:  # singular basis: numerical breakdown
            raise EstimationError(f"basis factorization failed: {exc}") from exc
        return lu

    def _price_slacks(self, y: np.ndarray, rule: str):
        """Best nonbasic slack candidate as (work_id, reduced_cost) or None."""
        in_basis = np.zeros(2 * self.R, dtype=bool)
        nb = self.basis[self.basis >= self.slack0] - self.slack0
        in_basis[nb] = True
        best = None
        # Slacks: cost 0, column +/- e_i; artificials never re-enter.
        rc = -self.slack_sign * y
        for i in range(self.R):
            if in_basis[i] or self.slack_ub[i] <= 0.0:
                continue
            if self.at_upper[i]:
                if rc[i] < -self.opt_tol:
                    cand = (self.slack0 + i, rc[i])
                else:
                    continue
            elif rc[i] > self.opt_tol:
                cand = (self.slack0 + i, rc[i])
            else:
                continue
            if rule == "bland":
                return cand
            if best is None or abs(cand[1]) > abs(best[1]):
                best = cand
        return best

    def _infeasibility(self) -> float:
        art = self.basis >= self.art0
        return float(np.sum(np.maximum(self.x_basis[art], 0.0)))

    def _run_phase(self) -> str:
        stall = 0
        bland = False
        last_objective = -np.inf
        basic_struct = set()

        while True:
            lu = self._refactor()
            b_eff = self._effective_rhs()
            x = lu_solve(lu, b_eff, check_finite=False)
            if not np.all(np.isfinite(x)):
                raise EstimationError("numerical breakdown: non-finite basic solution")
            self.x_basis = x
            c_basis = self._work_cost(self.basis)
            y = lu_solve(lu, c_basis, trans=1, check_finite=False)
            self.duals = y
            objective = float(c_basis @ x)

            if self.phase == 1 and self._infeasibility() <= self.feas_tol:
                return "feasible"

            if self.iterations >= self.max_iter:
                return "iteration_limit"

            # -- entering variable
            basic_struct.clear()
            basic_struct.update(int(v) for v in self.basis if v < self.n)
            rule = "bland" if bland else "dantzig"
            cand_struct = price_columns(
                self.p,
                y,
                tol=self.opt_tol,
                exclude=basic_struct,
                rule=rule,
                include_objective=(self.phase == 2),
            )
            cand_slack = self._price_slacks(y, rule)
            if cand_struct is None and cand_slack is None:
                return "optimal"
            if cand_struct is None:
                enter, _ = cand_slack
            elif cand_slack is None:
                enter, _ = cand_struct
            elif bland:
                enter = min(cand_struct[0], cand_slack[0])
            elif abs(cand_slack[1]) > abs(cand_struct[1]):
                enter = cand_slack[0]
            else:
                enter = cand_struct[0]

            enter_at_upper = enter >= self.slack0 and self.at_upper[enter - self.slack0]
            a_enter = self._work_columns(np.array([enter], dtype=np.int64))[:, 0]
            d = lu_solve(lu, a_enter, check_finite=False)
            if not np.all(np.isfinite(d)):
                raise EstimationError("numerical breakdown: non-finite direction")
            step = -d if enter_at_upper else d

            # -- ratio test: x_basis(t) = x_basis - t*step, t >= 0
            ub_basis = self._work_ub(self.basis)
            with np.errstate(divide="ignore", invalid="ignore"):
                t_low = np.where(
                    step > _PIVOT_TOL, np.maximum(x, 0.0) / step, np.inf
                )
                room = ub_basis - x
                t_upp = np.where(
                    (step < -_PIVOT_TOL) & np.isfinite(ub_basis),
                    np.maximum(room, 0.0) / (-step),
                    np.inf,
                )
            t_leave = np.minimum(t_low, t_upp)
            pos_min = int(np.argmin(t_leave))
            t_basic = float(t_leave[pos_min])
            ub_enter = float(self._work_ub(np.array([enter], dtype=np.int64))[0])

            if ub_enter <= t_basic:
                # Bound flip: the entering variable traverses its own range.
                if not np.isfinite(ub_enter):
                    return "unbounded"
                i = enter - self.slack0
                self.at_upper[i] = not self.at_upper[i]
                t = ub_enter
            else:
                if not np.isfinite(t_basic):
                    return "unbounded"
                tie = t_leave <= t_basic * (1.0 + 1e-9) + 1e-15
                tie_pos = np.flatnonzero(tie)
                if bland:
                    pos = int(tie_pos[np.argmin(self.basis[tie_pos])])
                else:
                    pos = int(tie_pos[np.argmax(np.abs(step[tie_pos]))])
                leaving = int(self.basis[pos])
                to_upper = t_upp[pos] < t_low[pos]
                if leaving >= self.slack0:
                    self.at_upper[leaving - self.slack0] = to_upper
                elif to_upper:
                    raise EstimationError("structural variable cannot leave at +inf")
                if enter >= self.slack0:
                    self.at_upper[enter - self.slack0] = False
                self.basis[pos] = enter
                t = t_basic

            self.iterations += 1
            if t > _DEGENERATE_STEP or objective > last_objective + 1e-12:
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > 10 * self.R:
                    bland = True
            last_objective = max(last_objective, objective)

    # -- phase transitions and extraction ----------------------------

    def _freeze_artificials(self):
        """Clamp artificials so phase two cannot regrow any infeasibility."""
        self.art_ub = np.zeros(self.R)
        for pos, w in enumerate(self.basis):
            if w >= self.art0:
                self.art_ub[w - self.art0] = max(float(self.x_basis[pos]), 0.0)

    def _violation_rows(self) -> tuple[int, ...]:
        rows = []
        for pos, w in enumerate(self.basis):
            if w >= self.art0 and self.x_basis[pos] > self.feas_tol:
                rows.append(int(w - self.art0))
        return tuple(sorted(rows))

    def warm_start(self, basis, at_upper_ids) -> bool:
        """Adopt a previous basis if it is primal feasible within tolerance."""
        basis = np.asarray(sorted(int(v) for v in basis), dtype=np.int64)
        if basis.size != self.R or basis.size != np.unique(basis).size:
            return False
        if np.any(basis < 0) or np.any(basis >= self.art0):
            return False
        at_upper = np.zeros(2 * self.R, dtype=bool)
        for w in at_upper_ids:
            w = int(w)
            if not (self.slack0 <= w < self.art0) or w in basis:
                return False
            at_upper[w - self.slack0] = True
        saved = (self.basis, self.at_upper)
        self.basis = basis
        self.at_upper = at_upper
        self.art_ub = np.zeros(self.R)
        try:
            lu = self._refactor()
            x = lu_solve(lu, self._effective_rhs(), check_finite=False)
        except EstimationError:
            self.basis, self.at_upper = saved
            self.art_ub = np.full(self.R, np.inf)
            return False
        ub = self._work_ub(basis)
        violation = float(np.max(np.maximum(-x, x - ub), initial=0.0))
        if not np.all(np.isfinite(x)) or violation > self.feas_tol:
            self.basis, self.at_upper = saved
            self.art_ub = np.full(self.R, np.inf)
            return False
        self.x_basis = x
        return True

    def extract(self, status: str, infeasible_rows=()) -> LpSolution:
        struct = self.basis < self.n
        ids = self.basis[struct]
        vals = np.maximum(self.x_basis[struct], 0.0)
        keep = vals > 0.0
        ids, vals = ids[keep], vals[keep]
        order = np.argsort(ids, kind="stable")
        ids, vals = ids[order], vals[order]
        if ids.size:
            activity = self.p.columns(ids) @ vals
            objective = float(self.p.objective(ids) @ vals)
        else:
            activity = np.zeros(self.R)
            objective = 0.0
        return LpSolution(
            status=status,
            columns=ids,
            masses=vals,
            objective=objective,
            row_activity=activity,
            duals=self.duals.copy(),
            iterations=self.iterations,
            basis=tuple(int(v) for v in self.basis),
            at_upper=tuple(
                int(self.slack0 + i) for i in np.flatnonzero(self.at_upper[: self.R])
            ),
            infeasible_rows=tuple(infeasible_rows),
        )


def solve(
    problem: LpProblem,
    feasibility_tol: float = 1e-9,
    optimality_tol: float = 1e-9,
    max_iterations: int = 50_000,
    warm_start: LpSolution | None = None,
) -> LpSolution:
    """Maximize the problem's objective over its rows and w >= 0.

    Returns an :class:`LpSolution` whose status is ``optimal`` when no
    column prices above ``optimality_tol`` and all rows are satisfied
    within ``feasibility_tol``; ``infeasible`` carries the offending rows.
    A ``warm_start`` solution's basis is adopted when it is still primal
    feasible, skipping phase one.  Identical inputs produce bit-identical
    solutions.
    """
    if max_iterations <= 0:
        raise ParameterError("max_iterations must be positive")
    s = _Simplex(problem, feasibility_tol, optimality_tol, max_iterations)

    warmed = False
    if warm_start is not None and warm_start.status != "infeasible":
        warmed = s.warm_start(warm_start.basis, warm_start.at_upper)

    if not warmed:
        s.phase = 1
        outcome = s._run_phase()
        if outcome == "iteration_limit":
            return s.extract("iteration_limit", s._violation_rows())
        if outcome != "feasible" and s._infeasibility() > s.feas_tol:
            return s.extract("infeasible", s._violation_rows())
        s._freeze_artificials()

    s.phase = 2
    outcome = s._run_phase()
    if outcome == "feasible":  # cannot happen in phase 2; defensive
        outcome = "optimal"
    return s.extract(outcome)


def relax_and_retry(
    problem: LpProblem,
    schedule,
    optimality_tol: float = 1e-9,
    max_iterations: int = 50_000,
) -> LpSolution:
    """Solve through a decreasing feasibility-tolerance schedule.

    The loosest stage establishes feasibility; each tighter stage re-solves
    warm-starting from the previous basis.  The returned solution is the
    tightest stage that succeeded, with every stage's outcome recorded in
    ``stages``.  Infeasibility at the loosest stage is final.
    """
    schedule = [float(t) for t in schedule]
    if not schedule:
        raise ParameterError("tolerance schedule must be nonempty")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ParameterError("tolerance schedule must be strictly decreasing")

    stages: list[StageResult] = []
    best: LpSolution | None = None
    last: LpSolution | None = None
    for tol in schedule:
        sol = solve(
            problem,
            feasibility_tol=tol,
            optimality_tol=optimality_tol,
            max_iterations=max_iterations,
            warm_start=best,
        )
        stages.append(StageResult(tol, sol.status, sol.iterations, sol.objective))
        last = sol
        if sol.status == "optimal":
            best = sol
        elif sol.status == "infeasible":
            break
    chosen = best if best is not None else last
    return dataclasses.replace(chosen, stages=tuple(stages))
