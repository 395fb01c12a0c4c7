"""Fronts, nondominance and crowding distance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Front:
    """Decision vectors ``x`` (rows) with their objective vectors ``f``.

    ``converged`` optionally flags rows that ended a converged stage-2 run and
    ``multipliers`` holds their final QP multipliers (None elsewhere); both
    travel with :meth:`subset`.
    """

    x: np.ndarray
    f: np.ndarray
    problem_name: str = ""
    converged: np.ndarray | None = None
    multipliers: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.f = np.atleast_2d(np.asarray(self.f, dtype=float))
        if self.x.size == 0:
            self.x = self.x.reshape(0, self.x.shape[-1] if self.x.ndim == 2 else 0)
        if self.f.size == 0:
            self.f = self.f.reshape(0, self.f.shape[-1] if self.f.ndim == 2 else 0)
        if len(self.x) != len(self.f):
            raise ValueError(f"{len(self.x)} decision vectors but {len(self.f)} objective vectors")

    def __len__(self) -> int:
        return len(self.f)

    @property
    def m(self) -> int:
        return self.f.shape[1]

    def subset(self, idx) -> Front:
        idx = np.asarray(idx, dtype=int)
        conv = None if self.converged is None else self.converged[idx]
        mult = None if self.multipliers is None else [self.multipliers[i] for i in idx]
        return Front(self.x[idx], self.f[idx], self.problem_name, conv, mult, dict(self.meta))


def nondominated_filter(points) -> np.ndarray:
    """Indices (ascending) of the points no other point dominates.

    ``u`` dominates ``v`` when ``u <= v`` componentwise and ``u != v``. Among
    exact duplicates only the lowest index is kept.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros(0, dtype=int)
    pts = np.atleast_2d(pts)
    n, m = pts.shape
    # a dominator (or an earlier duplicate) always precedes its victim in this order
    order = np.lexsort([np.arange(n)] + [pts[:, j] for j in reversed(range(m))])
    kept = np.empty(n, dtype=int)
    kept_pts = np.empty((n, m))
    count = 0
    for i in order:
        p = pts[i]
        if count and np.any(np.all(kept_pts[:count] <= p, axis=1)):
            continue
        kept[count] = i
        kept_pts[count] = p
        count += 1
    return np.sort(kept[:count])


def crowding_values(objectives) -> np.ndarray:
    """NSGA-II crowding distance of each row of ``objectives``.

    Per objective the extreme points get ``inf`` and interior points add the
    normalized gap between their sorted neighbours. A constant objective
    contributes nothing.
    """
    f = np.atleast_2d(np.asarray(objectives, dtype=float))
    n, m = f.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(f[:, j], kind="stable")
        col = f[order, j]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if span <= 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def crowding_filter(objectives, threshold: float) -> np.ndarray:
    """Indices of rows whose crowding distance exceeds ``threshold``."""
    dist = crowding_values(objectives)
    return np.flatnonzero(dist > threshold)


def top_crowding(objectives, q: int) -> np.ndarray:
    """Indices (ascending) of the ``q`` rows with the largest crowding distance."""
    dist = crowding_values(objectives)
    if len(dist) <= q:
        return np.arange(len(dist))
    # stable sort on -dist keeps lower indices first among ties
    order = np.argsort(-dist, kind="stable")
    return np.sort(order[:q])


def unique_rows(values) -> np.ndarray:
    """Indices (ascending) of the first occurrence of each distinct row."""
    v = np.atleast_2d(np.asarray(values, dtype=float))
    if len(v) == 0:
        return np.zeros(0, dtype=int)
    _, first = np.unique(v, axis=0, return_index=True)
    return np.sort(first)
