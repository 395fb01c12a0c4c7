"""Smoothed low-order penalty merit function for the Pareto stage.

For a reference point ``x_hat`` the merit is

    P(x) = sum_i f_i(x) + pi * sum_i h(g_i(x)) + pi * sum_i h(f_i(x) - f_i(x_hat))

with ``h`` the smoothed kernel from :mod:`mosqp.smoothing`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mosqp.problems import Problem
from mosqp.smoothing import SmoothingConfig, h_plus, smooth_h, smooth_h_deriv


@dataclass(frozen=True)
class PenaltyState:
    smoothing: SmoothingConfig
    pi: float
    x_hat: np.ndarray

    def __post_init__(self):
        if not self.pi > 0:
            raise ValueError(f"penalty weight must be positive, got {self.pi}")
        object.__setattr__(self, "x_hat", np.asarray(self.x_hat, dtype=float))

    def replace(self, *, eps: float | None = None, pi: float | None = None) -> PenaltyState:
        smoothing = self.smoothing if eps is None else self.smoothing.with_eps(eps)
        return PenaltyState(smoothing, self.pi if pi is None else pi, self.x_hat)


def _arguments(problem: Problem, x, st: PenaltyState):
    x = problem.check_x(x)
    x_hat = problem.check_x(st.x_hat)
    f = problem.objectives(x)
    g = problem.constraints(x)
    return x, f, g, f - problem.objectives(x_hat)


def penalty_value(problem: Problem, x, st: PenaltyState) -> float:
    _, f, g, gap = _arguments(problem, x, st)
    cfg = st.smoothing
    return float(np.sum(f) + st.pi * np.sum(smooth_h(g, cfg)) + st.pi * np.sum(smooth_h(gap, cfg)))


def unsmoothed_penalty_value(problem: Problem, x, st: PenaltyState) -> float:
    """The same merit with the raw kernel ``max(0, t)^k`` (the ``eps -> 0`` limit)."""
    _, f, g, gap = _arguments(problem, x, st)
    k = st.smoothing.k
    return float(np.sum(f) + st.pi * np.sum(h_plus(g, k)) + st.pi * np.sum(h_plus(gap, k)))


def penalty_gradient(problem: Problem, x, st: PenaltyState) -> np.ndarray:
    """Exact gradient of :func:`penalty_value` by the chain rule."""
    x, _, g, gap = _arguments(problem, x, st)
    cfg = st.smoothing
    jf = problem.objective_jacobian(x)
    grad = jf.sum(axis=0) + st.pi * (smooth_h_deriv(gap, cfg) @ jf)
    if problem.a:
        grad = grad + st.pi * (smooth_h_deriv(g, cfg) @ problem.constraint_jacobian(x))
    return grad


def fallback_direction(problem: Problem, x, st: PenaltyState) -> np.ndarray:
    """Steepest descent on the merit, used when the stage-2 QP has no solution."""
    return -penalty_gradient(problem, x, st)


def violation_combination(problem: Problem, x, st: PenaltyState) -> np.ndarray:
    """Weighted sum of gradients of violated constraints and objective bounds.

    Each violated ``g_i > 0`` contributes ``k (g_i + eps/b)^(k-1) grad g_i``;
    each ``f_i(x) > f_i(x_hat)`` contributes the analogous term on ``grad f_i``.
    """
    x, _, g, gap = _arguments(problem, x, st)
    k, b, eps = st.smoothing.k, st.smoothing.b, st.smoothing.eps
    out = np.zeros(problem.n)
    if problem.a:
        viol = g > 0
        if np.any(viol):
            d2 = k * (g[viol] + eps / b) ** (k - 1)
            out += d2 @ problem.constraint_jacobian(x)[viol]
    up = gap > 0
    if np.any(up):
        d3 = k * (gap[up] + eps / b) ** (k - 1)
        out += d3 @ problem.objective_jacobian(x)[up]
    return out
