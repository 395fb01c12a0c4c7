"""Purity and spread metrics of a front against a reference front.

Purity here is ``|reference| / |matched|``, so smaller is better and an
unmatched front scores ``inf``. Spreads use consecutive gaps along each
objective, with the reference front's extreme values as end anchors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mosqp.pareto import Front, nondominated_filter


def _objectives(front) -> np.ndarray:
    f = front.f if isinstance(front, Front) else front
    return np.atleast_2d(np.asarray(f, dtype=float))


@dataclass(frozen=True)
class MetricsReport:
    purity: float
    gamma: float
    delta: float
    front_size: int
    reference_size: int

    def as_dict(self) -> dict:
        return {
            "purity": self.purity,
            "gamma": self.gamma,
            "delta": self.delta,
            "front_size": self.front_size,
            "reference_size": self.reference_size,
        }


def build_reference_front(fronts: list[Front]) -> Front:
    """Nondominated union of several fronts (duplicates removed)."""
    if not fronts:
        raise ValueError("need at least one front")
    dims = {fr.f.shape[1] for fr in fronts if len(fr)}
    if len(dims) > 1:
        raise ValueError(f"fronts mix objective dimensions {sorted(dims)}")
    widths = {fr.x.shape[1] for fr in fronts if len(fr)}
    F = np.vstack([fr.f for fr in fronts if len(fr)])
    if len(widths) == 1:
        X = np.vstack([fr.x for fr in fronts if len(fr)])
    else:
        X = np.full((len(F), 0), np.nan)
    keep = nondominated_filter(F)
    return Front(X[keep], F[keep], fronts[0].problem_name)


def purity(solver_front, reference, match_tol: float = 1e-6) -> float:
    """``|reference|`` over the number of solver points matching a reference point.

    A match is an infinity-norm distance of at most ``match_tol`` in objective
    space. Returns ``inf`` when nothing matches.
    """
    if match_tol < 0:
        raise ValueError("match_tol must be nonnegative")
    ref = _objectives(reference)
    if ref.size == 0:
        raise ValueError("reference front is empty")
    sol = _objectives(solver_front)
    if sol.size == 0:
        return float("inf")
    dist = np.max(np.abs(sol[:, None, :] - ref[None, :, :]), axis=2)
    matched = int(np.sum(np.min(dist, axis=1) <= match_tol))
    return float("inf") if matched == 0 else len(ref) / matched


def front_extremes(reference) -> np.ndarray:
    """Per-objective ``(min, max)`` of a front, shape ``(m, 2)``."""
    f = _objectives(reference)
    return np.column_stack([f.min(axis=0), f.max(axis=0)])


def _gaps(values: np.ndarray, low: float, high: float) -> np.ndarray:
    v = np.sort(values)
    inner = np.diff(v)
    return np.concatenate([[abs(v[0] - low)], inner, [abs(high - v[-1])]])


def gamma_spread(solver_front, extremes) -> float:
    """Largest gap between consecutive values along any objective (anchors included)."""
    f = _objectives(solver_front)
    if f.size == 0:
        raise ValueError("solver front is empty")
    ext = np.asarray(extremes, dtype=float).reshape(-1, 2)
    return float(max(np.max(_gaps(f[:, j], *ext[j])) for j in range(f.shape[1])))


def delta_spread(solver_front, extremes) -> float:
    """Worst-objective ratio ``(d0 + dN + sum|di - mean|) / (d0 + dN + (N-1) mean)``.

    ``d0`` and ``dN`` are the gaps to the anchors and ``di`` the ``N-1``
    interior gaps with mean ``mean``.
    """
    f = _objectives(solver_front)
    if len(f) < 2:
        raise ValueError("delta spread needs at least two points")
    ext = np.asarray(extremes, dtype=float).reshape(-1, 2)
    n = len(f)
    worst = 0.0
    for j in range(f.shape[1]):
        gaps = _gaps(f[:, j], *ext[j])
        edge = gaps[0] + gaps[-1]
        inner = gaps[1:-1]
        mean = inner.mean()
        den = edge + (n - 1) * mean
        ratio = 0.0 if den == 0 else (edge + np.sum(np.abs(inner - mean))) / den
        worst = max(worst, float(ratio))
    return worst


def evaluate(solver_front, reference, match_tol: float = 1e-6) -> MetricsReport:
    """All three metrics with anchors taken from ``reference``."""
    ext = front_extremes(reference)
    size = len(_objectives(solver_front))
    delta = delta_spread(solver_front, ext) if size >= 2 else float("nan")
    return MetricsReport(
        purity=purity(solver_front, reference, match_tol),
        gamma=gamma_spread(solver_front, ext),
        delta=delta,
        front_size=size,
        reference_size=len(_objectives(reference)),
    )
