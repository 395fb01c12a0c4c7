"""Constrained multi-objective problems and the benchmark suite.

A :class:`Problem` bundles ``F(x)`` (``m`` objectives, minimized),
``g(x) <= 0`` (``a`` inequality constraints) and their Jacobians. Box bounds
are written as ordinary inequality rows so downstream QPs see a single
constraint family.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from mosqp.pareto import Front, nondominated_filter

Vector = np.ndarray
Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Problem:
    """A CMOP ``min F(x) s.t. g(x) <= 0``.

    ``lower``/``upper`` give the sampling box used to draw start points; they
    are not constraints by themselves. ``maximize`` marks problems whose
    original formulation maximizes ``-F``, so reports can flip the sign back.
    """

    name: str
    n: int
    m: int
    a: int
    objectives: Evaluator
    constraints: Evaluator
    objective_jacobian: Evaluator
    constraint_jacobian: Evaluator
    lower: np.ndarray
    upper: np.ndarray
    maximize: bool = False

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"a multi-objective problem needs m >= 2, got m={self.m}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")

    def check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"{self.name}: expected x of shape ({self.n},), got {x.shape}")
        return x

    def is_feasible(self, x, tol: float = 0.0) -> bool:
        if self.a == 0:
            return True
        return bool(np.max(self.constraints(x)) <= tol)


@dataclass(frozen=True)
class ConstraintClassification:
    active: tuple[int, ...]
    violated: tuple[int, ...]
    inactive: tuple[int, ...]
    tolerance: float


def classify_constraints(problem: Problem, x, tol: float = 1e-8) -> ConstraintClassification:
    """Split constraint indices (0-based) into active, violated and inactive sets."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    g = problem.constraints(problem.check_x(x))
    idx = np.arange(problem.a)
    return ConstraintClassification(
        active=tuple(int(i) for i in idx[np.abs(g) <= tol]),
        violated=tuple(int(i) for i in idx[g > tol]),
        inactive=tuple(int(i) for i in idx[g < -tol]),
        tolerance=tol,
    )


def _box_constraints(lower: np.ndarray, upper: np.ndarray):
    """Rows ``lower - x <= 0`` then ``x - upper <= 0`` (interleaved per variable)."""
    n = lower.size
    jac = np.zeros((2 * n, n))
    jac[0::2] = -np.eye(n)
    jac[1::2] = np.eye(n)

    def g(x):
        out = np.empty(2 * n)
        out[0::2] = lower - x
        out[1::2] = x - upper
        return out

    def dg(x):
        return jac.copy()

    return g, dg


def make_problem1() -> Problem:
    """Rosenbrock / quadratic pair on the disk ``x1^2 + x2^2 <= 0.5``."""

    def f(x):
        x1, x2 = x
        return np.array(
            [
                (1 - x1) ** 2 + 100 * (x2 - x1**2) ** 2,
                (x1 + x2 - 1) ** 2 + 10 * (x1 - x2) ** 2,
            ]
        )

    def df(x):
        x1, x2 = x
        r = x2 - x1**2
        s = x1 + x2 - 1
        t = x1 - x2
        return np.array(
            [
                [-2 * (1 - x1) - 400 * x1 * r, 200 * r],
                [2 * s + 20 * t, 2 * s - 20 * t],
            ]
        )

    def g(x):
        return np.array([x[0] ** 2 + x[1] ** 2 - 0.5])

    def dg(x):
        return np.array([[2 * x[0], 2 * x[1]]])

    return Problem(
        name="problem1",
        n=2,
        m=2,
        a=1,
        objectives=f,
        constraints=g,
        objective_jacobian=df,
        constraint_jacobian=dg,
        lower=np.full(2, -np.sqrt(0.5)),
        upper=np.full(2, np.sqrt(0.5)),
    )


# floor on f1/g inside sqrt so the ZDT1 gradient stays finite at x1 = 0
_ZDT_RATIO_FLOOR = 1e-12


def _zdt(n: int, name: str) -> Problem:
    if n < 2:
        raise ValueError(f"{name} needs n >= 2, got {n}")
    lower, upper = np.zeros(n), np.ones(n)
    g_box, dg_box = _box_constraints(lower, upper)
    scale = 9.0 / (n - 1)
    convex = name == "zdt1"

    def f(x):
        f1 = x[0]
        gx = 1.0 + scale * np.sum(x[1:])
        ratio = f1 / gx
        # ratio < 0 only off the box (rounding at x1 = 0); extend by continuity
        f2 = 1.0 - np.sqrt(max(ratio, 0.0)) if convex else 1.0 - ratio**2
        return np.array([f1, f2])

    def df(x):
        f1 = x[0]
        gx = 1.0 + scale * np.sum(x[1:])
        ratio = f1 / gx
        if convex:
            dphi = -0.5 / np.sqrt(max(ratio, _ZDT_RATIO_FLOOR))
        else:
            dphi = -2.0 * ratio
        jac = np.zeros((2, n))
        jac[0, 0] = 1.0
        jac[1, 0] = dphi / gx
        jac[1, 1:] = -dphi * f1 / gx**2 * scale
        return jac

    return Problem(
        name=name,
        n=n,
        m=2,
        a=2 * n,
        objectives=f,
        constraints=g_box,
        objective_jacobian=df,
        constraint_jacobian=dg_box,
        lower=lower,
        upper=upper,
    )


def make_zdt1(n: int = 30) -> Problem:
    """ZDT1 with ``f2 = 1 - sqrt(f1/g)``; front ``f2 = 1 - sqrt(f1)``."""
    return _zdt(n, "zdt1")


def make_zdt2(n: int = 30) -> Problem:
    """ZDT2 with ``f2 = 1 - (f1/g)^2``; front ``f2 = 1 - f1^2``."""
    return _zdt(n, "zdt2")


MOP3_A1 = np.sin(1) - 2 * np.cos(1) + np.sin(2) - 1.5 * np.cos(2)
MOP3_A2 = 1.5 * np.sin(1) - np.cos(1) + 2 * np.sin(2) - 0.5 * np.cos(2)


def make_mop3() -> Problem:
    """MOP3 (Poloni) on ``[-pi, pi]^2``.

    The original problem maximizes ``-1 - (A1-B1)^2 - (A2-B2)^2`` and
    ``-(x1+3)^2 - (x2+1)^2``; the stored objectives are their negations.
    """
    lower, upper = np.full(2, -np.pi), np.full(2, np.pi)
    g_box, dg_box = _box_constraints(lower, upper)

    def f(x):
        x1, x2 = x
        b1 = np.sin(x1) - 2 * np.cos(x1) + np.sin(x2) - 1.5 * np.cos(x2)
        b2 = 1.5 * np.sin(x1) - np.cos(x1) + 2 * np.sin(x2) - 0.5 * np.cos(x2)
        return np.array(
            [
                1 + (MOP3_A1 - b1) ** 2 + (MOP3_A2 - b2) ** 2,
                (x1 + 3) ** 2 + (x2 + 1) ** 2,
            ]
        )

    def df(x):
        x1, x2 = x
        b1 = np.sin(x1) - 2 * np.cos(x1) + np.sin(x2) - 1.5 * np.cos(x2)
        b2 = 1.5 * np.sin(x1) - np.cos(x1) + 2 * np.sin(x2) - 0.5 * np.cos(x2)
        db1 = np.array([np.cos(x1) + 2 * np.sin(x1), np.cos(x2) + 1.5 * np.sin(x2)])
        db2 = np.array([1.5 * np.cos(x1) + np.sin(x1), 2 * np.cos(x2) + 0.5 * np.sin(x2)])
        row1 = -2 * (MOP3_A1 - b1) * db1 - 2 * (MOP3_A2 - b2) * db2
        row2 = np.array([2 * (x1 + 3), 2 * (x2 + 1)])
        return np.vstack([row1, row2])

    return Problem(
        name="mop3",
        n=2,
        m=2,
        a=4,
        objectives=f,
        constraints=g_box,
        objective_jacobian=df,
        constraint_jacobian=dg_box,
        lower=lower,
        upper=upper,
        maximize=True,
    )


def get_problem(name: str, n: int | None = None) -> Problem:
    """Look a benchmark up by name: ``problem1``, ``zdt1``, ``zdt2`` or ``mop3``."""
    key = name.lower()
    if key == "problem1":
        return make_problem1()
    if key == "zdt1":
        return make_zdt1(n or 30)
    if key == "zdt2":
        return make_zdt2(n or 30)
    if key == "mop3":
        return make_mop3()
    raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}")


PROBLEM_NAMES = ("problem1", "zdt1", "zdt2", "mop3")


def _grid_front(problem: Problem, resolution: int) -> Front:
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(problem.lower, problem.upper)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, problem.n)
    feasible = [x for x in grid if problem.is_feasible(x)]
    xs = np.array(feasible)
    fs = np.array([problem.objectives(x) for x in xs])
    keep = nondominated_filter(fs)
    return Front(xs[keep], fs[keep], problem.name)


def reference_front(problem_name: str, resolution: int = 200) -> Front:
    """Reference Pareto front for a benchmark.

    ZDT fronts are analytic (``x1 = t`` on a uniform grid, remaining variables
    zero). Problem1 and MOP3 are approximated by the nondominated subset of a
    ``resolution x resolution`` feasible grid.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    problem = get_problem(problem_name)
    if problem.name in ("zdt1", "zdt2"):
        t = np.linspace(0.0, 1.0, resolution)
        xs = np.zeros((resolution, problem.n))
        xs[:, 0] = t
        f2 = 1.0 - np.sqrt(t) if problem.name == "zdt1" else 1.0 - t**2
        return Front(xs, np.column_stack([t, f2]), problem.name)
    return _grid_front(problem, resolution)
