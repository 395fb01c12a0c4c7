"""Two-stage multi-objective SQP driver.

Stage 1 spreads a feasible point set by taking single-objective SQP steps
that never leave the feasible region. Stage 2 treats every spread point as a
reference ``x_hat`` and minimizes the objective sum subject to
``f_i(x) <= f_i(x_hat)``, globalized by the smoothed low-order penalty and
a Powell-damped BFGS matrix.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from mosqp.pareto import Front, crowding_filter, nondominated_filter, top_crowding, unique_rows
from mosqp.penalty import (
    PenaltyState,
    fallback_direction,
    penalty_gradient,
    penalty_value,
    violation_combination,
)
from mosqp.problems import Problem
from mosqp.qp import QPNumericalError, build_spread_qp, build_stage2_qp, solve_qp
from mosqp.smoothing import SmoothingConfig

logger = logging.getLogger(__name__)

MAX_INIT_DRAWS = 100_000
# BFGS updates producing a condition number above 1e12 are skipped
MAX_CONDITION_INV = 1e-12


class InitializationError(RuntimeError):
    """Rejection sampling could not produce enough feasible start points."""


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm parameters. Defaults follow the benchmark setup
    ``k=0.5, b=4, sigma=0.2, M=2, A=0.5, K=5``."""

    sigma: float = 0.2
    backtrack: float = 0.5
    penalty_growth: float = 2.0
    spreads: int = 5
    n_points: int = 20
    k_exp: float = 0.5
    b_shape: float = 4.0
    eps0: float = 0.1
    pi0: float = 1.0
    crowding_min: float = 1e-4
    d_tol: float = 1e-8
    max_iters: int = 200
    max_backtracks: int = 40
    seed: int = 0
    top_q: int | None = 50
    # slack allowed on g(x) <= 0 when accepting spread steps (rounding at box faces)
    feas_tol: float = 1e-12
    # stage-2 iterates with max g above this are not reported
    output_feas_tol: float = 1e-8
    eps_min: float = 1e-10
    max_penalty_growths: int = 60

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if not 1.0 / self.b_shape < self.k_exp < 1:
            raise ValueError("need 1/b < k < 1")
        if not (self.eps0 > 0 and self.pi0 > 0):
            raise ValueError("eps0 and pi0 must be positive")
        if self.spreads < 0 or self.n_points < 1:
            raise ValueError("spreads must be >= 0 and n_points >= 1")
        if self.top_q is not None and self.top_q < 1:
            raise ValueError("top_q must be positive or None")

    def smoothing(self, eps: float) -> SmoothingConfig:
        return SmoothingConfig(self.k_exp, self.b_shape, eps)

    def replace(self, **changes) -> SolverConfig:
        return dataclasses.replace(self, **changes)


@dataclass
class EvalCounter:
    objectives: int = 0
    constraints: int = 0
    objective_jacobian: int = 0
    constraint_jacobian: int = 0

    def as_dict(self) -> dict[str, int]:
        return dataclasses.asdict(self)


def counted(problem: Problem, counter: EvalCounter) -> Problem:
    """A copy of ``problem`` whose evaluators bump ``counter``."""

    def wrap(name):
        fn = getattr(problem, name)

        def inner(x):
            setattr(counter, name, getattr(counter, name) + 1)
            return fn(x)

        return inner

    names = ("objectives", "constraints", "objective_jacobian", "constraint_jacobian")
    return dataclasses.replace(problem, **{name: wrap(name) for name in names})


def initialize_points(problem: Problem, cfg: SolverConfig) -> list[np.ndarray]:
    """Draw ``cfg.n_points`` feasible points uniformly from the sampling box."""
    rng = np.random.default_rng(cfg.seed)
    points: list[np.ndarray] = []
    for _ in range(MAX_INIT_DRAWS):
        x = rng.uniform(problem.lower, problem.upper)
        if problem.is_feasible(x):
            points.append(x)
            if len(points) == cfg.n_points:
                return points
    raise InitializationError(
        f"{problem.name}: only {len(points)} of {cfg.n_points} feasible points after "
        f"{MAX_INIT_DRAWS} draws; the feasible set is too thin for rejection sampling"
    )


def armijo_feasible(problem: Problem, objective_index: int, x, d, cfg: SolverConfig) -> float | None:
    """Largest ``A^j`` giving sufficient decrease of ``f_i`` at a feasible trial point."""
    f0 = problem.objectives(x)[objective_index]
    slope = float(problem.objective_jacobian(x)[objective_index] @ d)
    alpha = 1.0
    for _ in range(cfg.max_backtracks + 1):
        trial = x + alpha * d
        if problem.is_feasible(trial, cfg.feas_tol):
            if problem.objectives(trial)[objective_index] <= f0 + cfg.sigma * alpha * slope:
                return alpha
        alpha *= cfg.backtrack
    return None


def armijo_penalty(problem: Problem, x, d, st: PenaltyState, cfg: SolverConfig) -> float | None:
    """Largest ``A^j`` with sufficient decrease of the smoothed merit function."""
    p0 = penalty_value(problem, x, st)
    slope = float(penalty_gradient(problem, x, st) @ d)
    alpha = 1.0
    for _ in range(cfg.max_backtracks + 1):
        # NaN merit (trial outside a problem's domain) fails the comparison
        if penalty_value(problem, x + alpha * d, st) <= p0 + cfg.sigma * alpha * slope:
            return alpha
        alpha *= cfg.backtrack
    return None


def _select_round(problem: Problem, points: list[np.ndarray], count: int) -> list[np.ndarray]:
    if not points:
        return points
    xs = np.array(points)
    xs = xs[unique_rows(xs)]
    if len(xs) <= count:
        return list(xs)
    fs = np.array([problem.objectives(x) for x in xs])
    return list(xs[top_crowding(fs, count)])


def spread_stage(problem: Problem, x0, cfg: SolverConfig) -> list[np.ndarray]:
    """Feasible spread: ``K`` rounds of per-objective SQP steps from each point.

    Each round works on at most ``n_points`` points (the most crowding-isolated
    results of the previous round). All produced points are accumulated, and
    the returned set keeps those whose crowding distance exceeds
    ``cfg.crowding_min``.
    """
    eye = np.eye(problem.n)
    current = [problem.check_x(x) for x in x0]
    archive = list(current)
    for _ in range(cfg.spreads):
        produced: list[np.ndarray] = []
        for x in current:
            for i in range(problem.m):
                try:
                    sol = solve_qp(build_spread_qp(problem, x, eye, i))
                except QPNumericalError as exc:
                    logger.warning("spread QP failed at %s (objective %d): %s", x, i, exc)
                    continue
                if not sol.optimal or np.linalg.norm(sol.direction) <= cfg.d_tol:
                    produced.append(x)
                    continue
                alpha = armijo_feasible(problem, i, x, sol.direction, cfg)
                produced.append(x if alpha is None else x + alpha * sol.direction)
        archive.extend(produced)
        current = _select_round(problem, produced, cfg.n_points)
    return accumulated_filter(problem, archive, cfg)


def accumulated_filter(problem: Problem, points, cfg: SolverConfig) -> list[np.ndarray]:
    xs = np.array(points)
    xs = xs[unique_rows(xs)]
    fs = np.array([problem.objectives(x) for x in xs])
    # repeated objective vectors are repeated points as far as crowding is concerned
    first = unique_rows(fs)
    xs, fs = xs[first], fs[first]
    return list(xs[crowding_filter(fs, cfg.crowding_min)])


def damped_bfgs_update(B, s, y) -> np.ndarray:
    """Powell-damped BFGS update; keeps ``B`` symmetric positive definite."""
    B = np.asarray(B, dtype=float)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(s):
        return B.copy()
    Bs = B @ s
    sBs = float(s @ Bs)
    sy = float(s @ y)
    theta = 1.0 if sy >= 0.2 * sBs else 0.8 * sBs / (sBs - sy)
    y_hat = theta * y + (1.0 - theta) * Bs
    B_new = B - np.outer(Bs, Bs) / sBs + np.outer(y_hat, y_hat) / float(s @ y_hat)
    B_new = 0.5 * (B_new + B_new.T)
    if not np.all(np.isfinite(B_new)):
        return B.copy()
    eig = np.linalg.eigvalsh(B_new)
    if eig[0] <= MAX_CONDITION_INV * eig[-1]:
        # rounding (or near-singular curvature) lost definiteness; keep the old matrix
        return B.copy()
    return B_new


def _lagrangian_gradient(problem: Problem, x, mult) -> np.ndarray:
    m = problem.m
    grad = (1.0 + mult[:m]) @ problem.objective_jacobian(x)
    if problem.a:
        grad = grad + mult[m:] @ problem.constraint_jacobian(x)
    return grad


def check_pareto_critical(problem: Problem, x, multipliers, normalize: bool = False) -> float | None:
    """Criticality residual of ``x`` for the weighted sum ``sum (1 + mu_i) f_i``.

    ``multipliers`` are stage-2 QP multipliers (``m`` objective-bound entries,
    then ``a`` constraint entries). Returns the max-norm stationarity residual
    plus the worst of ``|lambda_i g_i(x)|`` and any negative multiplier, or
    None when there are no multipliers to check.

    With ``normalize`` the result is divided by the objective weight sum
    ``sum (1 + mu_i)``, which keeps huge bound multipliers from inflating it.
    """
    if multipliers is None:
        return None
    x = problem.check_x(x)
    mult = np.asarray(multipliers, dtype=float)
    stat = float(np.max(np.abs(_lagrangian_gradient(problem, x, mult))))
    worst = float(max(0.0, -np.min(mult))) if mult.size else 0.0
    if problem.a:
        lam = mult[problem.m :]
        worst = max(worst, float(np.max(np.abs(lam * problem.constraints(x)))))
    if normalize:
        return (stat + worst) / float(np.sum(1.0 + mult[: problem.m]))
    return stat + worst


@dataclass
class StepRecord:
    """One accepted stage-2 step, kept for diagnostics."""

    qp_feasible: bool
    alpha: float
    eps: float
    pi: float
    merit_before: float
    merit_after: float
    min_eig: float


@dataclass
class PointResult:
    x_hat: np.ndarray
    x: np.ndarray
    converged: bool
    multipliers: np.ndarray | None
    iterates: list[np.ndarray]
    iterations: int
    reason: str
    history: list[StepRecord] = field(default_factory=list)


def _shrink_eps(eps, problem, x, f_hat, cfg: SolverConfig) -> float:
    """Bring ``eps`` under the smallest strictly positive slack, by powers of ``A^k``."""
    margins = np.concatenate([f_hat - problem.objectives(x), -problem.constraints(x)])
    # slacks at or below eps_min are rounding noise on active rows
    positive = margins[margins > cfg.eps_min]
    if positive.size:
        bound = float(np.min(positive))
        if eps > bound:
            # smallest power of A^k that brings eps under the bound
            shrink = cfg.backtrack**cfg.k_exp
            eps *= shrink ** np.ceil(np.log(bound / eps) / np.log(shrink))
    else:
        eps *= cfg.backtrack
    return max(eps, cfg.eps_min)


def _violation_floor(problem: Problem, x, f_hat) -> float:
    viol = np.concatenate([problem.constraints(x), problem.objectives(x) - f_hat])
    viol = viol[viol > 0]
    return float(np.max(viol)) if viol.size else 0.0


def _grow_penalty(test, st: PenaltyState, cfg: SolverConfig) -> PenaltyState | None:
    """Multiply the penalty weight by ``M`` until ``test`` holds; None past the cap."""
    for _ in range(cfg.max_penalty_growths + 1):
        if test(st):
            return st
        st = st.replace(pi=st.pi * cfg.penalty_growth)
    return None


def optimize_point(problem: Problem, x_hat, cfg: SolverConfig, record: bool = False) -> PointResult:
    """Run the stage-2 iteration from one reference point."""
    x_hat = problem.check_x(x_hat).copy()
    f_hat = problem.objectives(x_hat)
    x = x_hat.copy()
    B = np.eye(problem.n)
    eps, pi = cfg.eps0, cfg.pi0
    iterates: list[np.ndarray] = []
    history: list[StepRecord] = []
    reason = "max_iters"
    mult = None
    converged = False
    j = 0
    for j in range(cfg.max_iters):
        try:
            sol = solve_qp(build_stage2_qp(problem, x, x_hat, B))
        except QPNumericalError as exc:
            logger.warning("stage-2 QP failed at iteration %d: %s", j, exc)
            sol = None
        qp_ok = sol is not None and sol.optimal
        if qp_ok:
            d = sol.direction
            if np.linalg.norm(d) <= cfg.d_tol:
                converged, mult, reason = True, sol.multipliers, "converged"
                break
            eps = _shrink_eps(eps, problem, x, f_hat, cfg)
            st = PenaltyState(cfg.smoothing(eps), pi, x_hat)
            curvature = 0.5 * float(d @ B @ d)
            grown = _grow_penalty(
                lambda s: float(penalty_gradient(problem, x, s) @ d) <= -curvature,
                st,
                cfg,
            )
            if grown is None:
                # rows inside the smoothing band add slope no penalty weight can offset;
                # keep the old weight as long as d still descends on the merit
                if float(penalty_gradient(problem, x, st) @ d) >= 0:
                    reason = "no_descent"
                    logger.info("no merit descent at %s; stopping point", x)
                    break
            else:
                st = grown
        else:
            st = PenaltyState(cfg.smoothing(eps), pi, x_hat)
            for _ in range(cfg.max_penalty_growths):
                if np.any(violation_combination(problem, x, st)):
                    break
                st = st.replace(eps=max(st.smoothing.eps * cfg.backtrack, cfg.eps_min))
            floor = _violation_floor(problem, x, f_hat)
            grown = _grow_penalty(
                lambda s: float(penalty_gradient(problem, x, s) @ fallback_direction(problem, x, s)) <= -floor,
                st,
                cfg,
            )
            if grown is None:
                reason = "penalty_overflow"
                logger.warning("penalty weight overflow at %s; abandoning point", x)
                break
            st = grown
            d = fallback_direction(problem, x, st)
            if not np.any(d):
                reason = "stalled"
                break
        eps, pi = st.smoothing.eps, st.pi

        alpha = armijo_penalty(problem, x, d, st, cfg)
        if alpha is None:
            reason = "line_search"
            break
        x_new = x + alpha * d
        if record:
            merit_before = penalty_value(problem, x, st)
            merit_after = penalty_value(problem, x_new, st)
        if qp_ok:
            y = _lagrangian_gradient(problem, x_new, sol.multipliers) - _lagrangian_gradient(
                problem, x, sol.multipliers
            )
            B = damped_bfgs_update(B, x_new - x, y)
        if record:
            history.append(
                StepRecord(
                    qp_ok, alpha, eps, pi, merit_before, merit_after, float(np.linalg.eigvalsh(B)[0])
                )
            )
        x = x_new
        iterates.append(x.copy())
    else:
        j = cfg.max_iters
    return PointResult(x_hat, x, converged, mult, iterates, j, reason, history)


def pareto_stage(problem: Problem, x_start, cfg: SolverConfig) -> Front:
    """Stage 2 from every start point, then nondominance and crowding filtering.

    Every accepted iterate enters the archive; a run's final point carries the
    converged flag and, when converged, its QP multipliers. Iterates violating
    ``g <= cfg.output_feas_tol`` are dropped before filtering.
    """
    xs: list[np.ndarray] = []
    flags: list[bool] = []
    mults: list[np.ndarray | None] = []
    runs = []
    for x_hat in x_start:
        res = optimize_point(problem, x_hat, cfg)
        runs.append(res)
        path = res.iterates if res.iterates else [res.x_hat]
        for x in path[:-1]:
            xs.append(x)
            flags.append(False)
            mults.append(None)
        xs.append(path[-1])
        flags.append(res.converged)
        mults.append(res.multipliers)
    front = _filter_archive(problem, xs, flags, mults, cfg)
    front.meta["runs"] = runs
    return front


def _filter_archive(problem: Problem, xs, flags, mults, cfg: SolverConfig) -> Front:
    n = problem.n
    feasible = [i for i, x in enumerate(xs) if problem.is_feasible(x, cfg.output_feas_tol)]
    if not feasible:
        return Front(np.zeros((0, n)), np.zeros((0, problem.m)), problem.name, np.zeros(0, bool))
    X = np.array([xs[i] for i in feasible])
    F = np.array([problem.objectives(x) for x in X])
    conv = np.array([flags[i] for i in feasible])
    mult = [mults[i] for i in feasible]
    # converged copies first so deduplication keeps their multipliers
    order = np.argsort(~conv, kind="stable")
    X, F, conv = X[order], F[order], conv[order]
    mult = [mult[i] for i in order]

    keep = nondominated_filter(F)
    sub = F[keep]
    keep = keep[crowding_filter(sub, cfg.crowding_min)]
    if cfg.top_q is not None:
        keep = keep[top_crowding(F[keep], cfg.top_q)]
    return Front(X[keep], F[keep], problem.name, conv[keep], [mult[i] for i in keep])


@dataclass
class RunResult:
    front: Front
    initial: list[np.ndarray]
    spread: list[np.ndarray]
    counters: EvalCounter
    config: SolverConfig

    @property
    def converged_count(self) -> int:
        conv = self.front.converged
        return 0 if conv is None else int(np.sum(conv))


def solve(problem: Problem, cfg: SolverConfig | None = None) -> RunResult:
    """Initialize, spread and refine; returns the final front with evaluation counts."""
    cfg = cfg or SolverConfig()
    counter = EvalCounter()
    prob = counted(problem, counter)
    x0 = initialize_points(prob, cfg)
    spread = spread_stage(prob, x0, cfg)
    front = pareto_stage(prob, spread, cfg)
    front.meta["counters"] = counter.as_dict()
    return RunResult(front, x0, spread, counter, cfg)
