"""Maximum-entropy estimation of heterogeneous effect distributions
from stratified 2x2 count tables."""

from .closed_form import (
    ConditionalHomogeneousSolution,
    HomogeneousSolution,
    r2_to_variance_bound,
    solve_conditional_homogeneous,
    solve_homogeneous,
    theoretical_tjur_r2,
)
from .errors import (
    DegenerateTableError,
    DomainError,
    EstimationError,
    ParameterError,
    TableParseError,
    UndefinedStatisticError,
)
from .grid_lp import Atom, CubeGrid, DiscretizedProblem, atoms_from_solution, build_problem
from .lp_solver import (
    InequalityRow,
    LpProblem,
    LpSolution,
    RangeRow,
    price_columns,
    relax_and_retry,
    solve,
)
from .model import (
    CategoryCounts,
    JointOutcomeProbs,
    PropensityPrognosisTriple,
    StratifiedTable,
    binary_entropy,
    entropy,
    expected_risk,
    joint_probs,
    odds_ratio,
    tjur_r2,
)
from .postprocess import (
    Cluster,
    MixtureSolution,
    cluster_atoms,
    effect_summaries,
    mixture_from_solution,
)
from .tables import load_table, loads_table, resample_table, smooth_table
from .cli import RunConfig, run_bootstrap, run_convergence, run_estimate

__version__ = "0.1.0"
