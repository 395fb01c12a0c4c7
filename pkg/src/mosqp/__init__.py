"""Two-stage multi-objective SQP with a smoothed low-order penalty."""

from mosqp.metrics import MetricsReport, build_reference_front, delta_spread, gamma_spread, purity
from mosqp.pareto import Front, crowding_values, nondominated_filter
from mosqp.problems import PROBLEM_NAMES, Problem, get_problem, reference_front
from mosqp.qp import QPData, QPSolution, QPStatus, solve_qp
from mosqp.smoothing import SmoothingConfig, smooth_h, smooth_h_deriv
from mosqp.solver import RunResult, SolverConfig, check_pareto_critical, solve

__all__ = [
    "Front",
    "MetricsReport",
    "PROBLEM_NAMES",
    "Problem",
    "QPData",
    "QPSolution",
    "QPStatus",
    "RunResult",
    "SmoothingConfig",
    "SolverConfig",
    "build_reference_front",
    "check_pareto_critical",
    "crowding_values",
    "delta_spread",
    "gamma_spread",
    "get_problem",
    "nondominated_filter",
    "purity",
    "reference_front",
    "smooth_h",
    "smooth_h_deriv",
    "solve",
    "solve_qp",
]

__version__ = "0.1.0"
