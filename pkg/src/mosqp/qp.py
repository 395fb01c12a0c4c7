"""Dense strictly convex QP solver and the two SQP subproblem builders.

Problems have the form ``min 1/2 d'Bd + c'd  s.t.  G d + h <= 0``. A phase-1
linear program finds a feasible start (or proves there is none); a primal
active-set method then walks to the optimum and returns its multipliers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import linprog

from mosqp.problems import Problem

# Phase-1 violation (in row-normalized units) above which a QP is declared infeasible.
INFEASIBLE_TOL = 1e-9
_ACTIVE_TOL = 1e-10
_SV_THRESHOLD = 1e-10
_REFINE_STEPS = 2


class QPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


class QPNumericalError(RuntimeError):
    """The active-set iteration cap was exceeded."""


@dataclass(frozen=True)
class QPData:
    """``min 1/2 d'Bd + c'd`` subject to ``G d + h <= 0``."""

    hessian: np.ndarray
    linear: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.hessian, dtype=float))
        c = np.asarray(self.linear, dtype=float).ravel()
        n = c.size
        G = np.asarray(self.normals, dtype=float).reshape(-1, n)
        h = np.asarray(self.offsets, dtype=float).ravel()
        if B.shape != (n, n):
            raise ValueError(f"hessian must be {n}x{n}, got {B.shape}")
        if len(h) != len(G):
            raise ValueError(f"{len(G)} constraint rows but {len(h)} offsets")
        scale = max(1.0, float(np.max(np.abs(B))))
        if np.max(np.abs(B - B.T)) > 1e-10 * scale:
            raise ValueError("hessian is not symmetric")
        B = 0.5 * (B + B.T)
        try:
            cho_factor(B)
        except LinAlgError as exc:
            raise ValueError("hessian is not positive definite") from exc
        object.__setattr__(self, "hessian", B)
        object.__setattr__(self, "linear", c)
        object.__setattr__(self, "normals", G)
        object.__setattr__(self, "offsets", h)

    @property
    def n(self) -> int:
        return self.linear.size

    @property
    def r(self) -> int:
        return self.offsets.size

    def objective(self, d) -> float:
        return float(0.5 * d @ self.hessian @ d + self.linear @ d)


@dataclass(frozen=True)
class QPSolution:
    direction: np.ndarray | None
    multipliers: np.ndarray | None
    status: QPStatus
    iterations: int = 0
    phase1_violation: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is QPStatus.OPTIMAL


def kkt_residuals(data: QPData, d, mult) -> tuple[float, float, float]:
    """Stationarity, primal infeasibility and complementarity (all max-norm)."""
    B, c, G, h = data.hessian, data.linear, data.normals, data.offsets
    stat = B @ d + c + G.T @ mult
    cons = G @ d + h
    prim = float(max(0.0, np.max(cons))) if len(h) else 0.0
    comp = float(np.max(np.abs(mult * cons))) if len(h) else 0.0
    return float(np.max(np.abs(stat))), prim, comp


def _phase1(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize the largest violation ``t`` of ``G d + h <= t``, ``t >= 0``."""
    r, n = G.shape
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    A_ub = np.hstack([G, -np.ones((r, 1))])
    bounds = [(None, None)] * n + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=-h, bounds=bounds, method="highs")
    if res.status != 0:
        raise QPNumericalError(f"phase-1 LP failed: {res.message}")
    return res.x[:n], float(res.x[-1])


def _independent_subset(A: np.ndarray, candidates) -> list[int]:
    chosen: list[int] = []
    for i in candidates:
        trial = A[chosen + [i]]
        if np.linalg.matrix_rank(trial, tol=_SV_THRESHOLD) == len(chosen) + 1:
            chosen.append(i)
        if len(chosen) == A.shape[1]:
            break
    return chosen


def _eqp_step(B, A, grad):
    """Null-space solve of ``min 1/2 p'Bp + grad'p  s.t.  A p = 0``.

    Returns the step and the working-set multipliers. With a full working set
    the step is exactly zero.
    """
    n, w = B.shape[0], A.shape[0]
    if w == 0:
        return -np.linalg.solve(B, grad), np.zeros(0)
    Q, R = np.linalg.qr(A.T, mode="complete")
    Z = Q[:, w:]
    if Z.shape[1]:
        p = Z @ np.linalg.solve(Z.T @ B @ Z, -(Z.T @ grad))
    else:
        p = np.zeros(n)
    lam = np.linalg.lstsq(A.T, -(grad + B @ p), rcond=_SV_THRESHOLD)[0]
    return p, lam


def _kkt_solve(B, A, rhs_top, rhs_bottom):
    n, w = B.shape[0], A.shape[0]
    K = np.zeros((n + w, n + w))
    K[:n, :n] = B
    K[:n, n:] = A.T
    K[n:, :n] = A
    rhs = np.concatenate([rhs_top, rhs_bottom])

    def solve(b):
        try:
            return np.linalg.solve(K, b)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(K, b, rcond=_SV_THRESHOLD)[0]

    sol = solve(rhs)
    # refinement matters when near-parallel active rows make K ill-conditioned
    for _ in range(_REFINE_STEPS):
        sol = sol + solve(rhs - K @ sol)
    return sol[:n], sol[n:]


def solve_qp(data: QPData, max_iter: int | None = None) -> QPSolution:
    """Solve a strictly convex QP with a primal active-set method.

    Returns status ``infeasible`` when the phase-1 program cannot bring every
    row to ``<= 0``. The working set leaves by most negative multiplier
    (lowest index on ties) and grows by the first blocking row.

    Raises:
        QPNumericalError: if ``max_iter`` (default ``50 (n + r)``) is exceeded.
    """
    B, c, G, h = data.hessian, data.linear, data.normals, data.offsets
    n, r = data.n, data.r
    if max_iter is None:
        max_iter = 50 * (n + r)
    chol = cho_factor(B)
    d_free = -cho_solve(chol, c)
    if r == 0:
        return QPSolution(d_free, np.zeros(0), QPStatus.OPTIMAL)

    norms = np.linalg.norm(G, axis=1)
    live = norms > 0
    if np.any(h[~live] > INFEASIBLE_TOL):
        return QPSolution(None, None, QPStatus.INFEASIBLE, 0, float(np.max(h[~live])))
    scale = np.where(live, norms, 1.0)
    Gs = G / scale[:, None]
    hs = h / scale
    rows = np.flatnonzero(live)

    if np.all(Gs[rows] @ d_free + hs[rows] <= 0):
        return QPSolution(d_free, np.zeros(r), QPStatus.OPTIMAL)

    if np.all(hs[rows] <= 0):
        d = np.zeros(n)
    else:
        d, viol = _phase1(Gs[rows], hs[rows])
        if viol > INFEASIBLE_TOL:
            return QPSolution(None, None, QPStatus.INFEASIBLE, 0, viol)

    cons = Gs[rows] @ d + hs[rows]
    near = rows[cons >= -_ACTIVE_TOL]
    work = sorted(_independent_subset(Gs, list(near)))

    for it in range(1, max_iter + 1):
        grad = B @ d + c
        A = Gs[work]
        p, lam = _eqp_step(B, A, grad)
        if np.linalg.norm(p) <= 1e-12 * (1.0 + np.linalg.norm(d)):
            if not work or np.min(lam) >= -1e-12 * (1.0 + np.max(np.abs(lam))):
                return _finish(data, Gs, hs, scale, work, it)
            work.pop(int(np.argmin(lam)))
            continue
        slope = Gs[rows] @ p
        slack = np.maximum(-(Gs[rows] @ d + hs[rows]), 0.0)
        alpha, block = 1.0, None
        in_work = set(work)
        for j, i in enumerate(rows):
            if i in in_work or slope[j] <= 1e-14:
                continue
            ratio = slack[j] / slope[j]
            if ratio < alpha:
                alpha, block = ratio, int(i)
        d = d + alpha * p
        if block is not None:
            work = sorted(work + [block])
    raise QPNumericalError(f"active-set iteration cap {max_iter} exceeded (n={n}, r={r})")


def _finish(data: QPData, Gs, hs, scale, work, iterations) -> QPSolution:
    B, c = data.hessian, data.linear
    A = Gs[work]
    d, lam = _kkt_solve(B, A, -c, -hs[work])
    mult = np.zeros(data.r)
    mult[work] = np.maximum(lam, 0.0) / scale[work]
    return QPSolution(d, mult, QPStatus.OPTIMAL, iterations)


def build_spread_qp(problem: Problem, x, B, objective_index: int) -> QPData:
    """Single-objective subproblem: linear term ``grad f_i``, linearized ``g <= 0``.

    ``objective_index`` is 0-based.
    """
    x = problem.check_x(x)
    if not 0 <= objective_index < problem.m:
        raise ValueError(f"objective index {objective_index} out of range for m={problem.m}")
    c = problem.objective_jacobian(x)[objective_index]
    G = problem.constraint_jacobian(x).reshape(problem.a, problem.n)
    return QPData(B, c, G, problem.constraints(x))


def build_stage2_qp(problem: Problem, x, x_hat, B) -> QPData:
    """All-objective subproblem with ``f_i(x) + grad f_i' d <= f_i(x_hat)`` rows.

    Rows are the ``m`` objective bounds followed by the ``a`` constraints.
    """
    x = problem.check_x(x)
    x_hat = problem.check_x(x_hat)
    jf = problem.objective_jacobian(x)
    G = np.vstack([jf, problem.constraint_jacobian(x).reshape(problem.a, problem.n)])
    h = np.concatenate([problem.objectives(x) - problem.objectives(x_hat), problem.constraints(x)])
    return QPData(B, jf.sum(axis=0), G, h)
