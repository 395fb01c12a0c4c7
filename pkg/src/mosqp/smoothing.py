"""Low-order penalty kernel and its C1 smoothing.

The kernel is ``h^k(t) = max(0, t)^k``. For ``k <= 1`` it is not differentiable
at the origin, so the merit function uses a three-branch smoothing
``h_eps^k`` that vanishes below ``-eps``, rises as a ``k*b`` power on
``[-eps, 0)`` and is a shifted power ``(t + eps/b)^k`` for ``t >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SmoothingConfig:
    """Parameters ``k`` (exponent), ``b`` (shape) and ``eps`` (width) of the smoothing."""

    k: float
    b: float
    eps: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def differentiable(self) -> bool:
        return 1.0 / self.b < self.k

    def with_eps(self, eps: float) -> SmoothingConfig:
        return SmoothingConfig(self.k, self.b, eps)


def _scalar_or_array(t, out):
    return float(out) if np.ndim(t) == 0 else out


def h_plus(t, k: float):
    """Return ``max(0, t)**k``, with 0 for every ``t < 0``."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    arr = np.asarray(t, dtype=float)
    out = np.zeros_like(arr)
    pos = arr >= 0
    out[pos] = arr[pos] ** k
    return _scalar_or_array(t, out)


def _middle(t, cfg: SmoothingConfig):
    k, b, eps = cfg.k, cfg.b, cfg.eps
    return eps ** (k * (1.0 - b)) * b ** (-k) * (t + eps) ** (k * b)


def _right(t, cfg: SmoothingConfig):
    return (t + cfg.eps / cfg.b) ** cfg.k


def _middle_deriv(t, cfg: SmoothingConfig):
    k, b, eps = cfg.k, cfg.b, cfg.eps
    # d/dt (t+eps)^(kb) brings down k*b, hence b^(1-k) rather than b^(-k)
    return k * b ** (1.0 - k) * eps ** (k * (1.0 - b)) * (t + eps) ** (k * b - 1.0)


def _right_deriv(t, cfg: SmoothingConfig):
    return cfg.k * (t + cfg.eps / cfg.b) ** (cfg.k - 1.0)


def smooth_h(t, cfg: SmoothingConfig):
    """Evaluate the smoothed kernel ``h_eps^k(t)``.

    Accepts a scalar or an array; a scalar input yields a float.
    """
    arr = np.asarray(t, dtype=float)
    out = np.zeros_like(arr)
    mid = (arr >= -cfg.eps) & (arr < 0)
    right = arr >= 0
    out[mid] = _middle(arr[mid], cfg)
    out[right] = _right(arr[right], cfg)
    return _scalar_or_array(t, out)


def smooth_h_deriv(t, cfg: SmoothingConfig):
    """Derivative of :func:`smooth_h` with respect to ``t``.

    Requires ``1/b < k``; otherwise the middle branch is unbounded at ``-eps``.

    Raises:
        ValueError: if ``k * b <= 1``.
    """
    if not cfg.differentiable:
        raise ValueError(f"smoothing is not C1 for k={cfg.k}, b={cfg.b} (need 1/b < k)")
    arr = np.asarray(t, dtype=float)
    out = np.zeros_like(arr)
    mid = (arr > -cfg.eps) & (arr <= 0)
    right = arr > 0
    out[mid] = _middle_deriv(arr[mid], cfg)
    out[right] = _right_deriv(arr[right], cfg)
    return _scalar_or_array(t, out)
