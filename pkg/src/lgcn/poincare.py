"""Poincare ball model and the hyperboloid <-> ball isomorphisms.

The ball D^{n,alpha} is the open ball of radius 1/sqrt(alpha) (alpha > 0)
with the conformal hyperbolic metric.  It is kept deliberately minimal: it
exists as the independent second route for checking that the hyperboloid
graph operations commute with the isomorphism (Mobius matvec and Mobius
pointwise nonlinearity are the only gyro-operations implemented).

Cross-model comparisons pair curvatures as alpha = 1/beta, which is what the
two diffeomorphisms below preserve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import Nonlinearity
from .hyperboloid import HyperPoint, _check_beta, _freeze

# arctanh argument cap; keeps the maps finite right at the numerical boundary.
ATANH_MAX = 1.0 - 1e-15
_EPS = 1e-15


@dataclass(frozen=True)
class BallPoint:
    """Point strictly inside the Poincare ball: alpha * ||coords||^2 < 1."""

    coords: np.ndarray
    alpha: float

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64).copy()
        if coords.ndim != 1 or coords.size < 1:
            raise ValueError(f"coords must be a 1-d array, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coords has non-finite entries")
        alpha = _check_beta(self.alpha)
        if alpha * float(coords @ coords) >= 1.0:
            raise ValueError("point is on or outside the ball boundary")
        object.__setattr__(self, "coords", _freeze(coords))
        object.__setattr__(self, "alpha", alpha)

    @property
    def dim(self) -> int:
        return self.coords.size


def ball_exp_origin(v, alpha: float) -> BallPoint:
    """Exponential map at the ball origin: tanh(sqrt(a)||v||) * v / (sqrt(a)||v||)."""
    v = np.asarray(v, dtype=np.float64)
    alpha = _check_beta(alpha)
    sqrt_a = np.sqrt(alpha)
    r = np.linalg.norm(v)
    if r < _EPS:
        return BallPoint(np.zeros_like(v), alpha)
    return BallPoint(np.tanh(sqrt_a * r) * v / (sqrt_a * r), alpha)


def ball_log_origin(y: BallPoint) -> np.ndarray:
    """Logarithmic map at the ball origin: arctanh(sqrt(a)||y||) * y / (sqrt(a)||y||)."""
    sqrt_a = np.sqrt(y.alpha)
    r = np.linalg.norm(y.coords)
    if r < _EPS:
        return np.zeros_like(y.coords)
    arg = min(sqrt_a * r, ATANH_MAX)
    return np.arctanh(arg) * y.coords / (sqrt_a * r)


def hyperboloid_to_ball(x: HyperPoint) -> BallPoint:
    """Diffeomorphism H^{n,beta} -> D^{n,1/beta}: sqrt(b)*spatial / (sqrt(b)+x0)."""
    sqrt_b = np.sqrt(x.beta)
    return BallPoint(sqrt_b * x.spatial / (sqrt_b + x.coords[0]), 1.0 / x.beta)


def ball_to_hyperboloid(y: BallPoint) -> HyperPoint:
    """Diffeomorphism D^{n,alpha} -> H^{n,1/alpha} (inverse of hyperboloid_to_ball)."""
    alpha = y.alpha
    sq = float(y.coords @ y.coords)
    denom = 1.0 - alpha * sq
    if denom <= 0.0:
        raise ValueError("point is on or outside the ball boundary")
    sqrt_a = np.sqrt(alpha)
    coords = np.concatenate(([1.0 / sqrt_a + sqrt_a * sq], 2.0 * y.coords)) / denom
    # Renormalize x0 so the result is on-manifold exactly despite the division.
    beta = 1.0 / alpha
    coords[0] = np.sqrt(beta + coords[1:] @ coords[1:])
    return HyperPoint(coords, beta)


def mobius_matvec(m, y: BallPoint) -> BallPoint:
    """Mobius matrix-vector multiplication on the ball.

    (1/sqrt(a)) * tanh((||My||/||y||) * arctanh(sqrt(a)||y||)) * My/||My||.
    Continuity fixes the 0/0 cases: y = 0 or My = 0 map to the origin of the
    output ball.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != y.dim:
        raise ValueError(f"matrix shape {m.shape} does not map dimension {y.dim}")
    alpha = y.alpha
    sqrt_a = np.sqrt(alpha)
    norm_y = np.linalg.norm(y.coords)
    if norm_y < _EPS:
        return BallPoint(np.zeros(m.shape[0]), alpha)
    my = m @ y.coords
    norm_my = np.linalg.norm(my)
    if norm_my < _EPS:
        return BallPoint(np.zeros(m.shape[0]), alpha)
    arg = min(sqrt_a * norm_y, ATANH_MAX)
    scale = np.tanh((norm_my / norm_y) * np.arctanh(arg)) / (sqrt_a * norm_my)
    return BallPoint(scale * my, alpha)


def mobius_pointwise(sigma: Nonlinearity, y: BallPoint) -> BallPoint:
    """Mobius pointwise nonlinearity: exp_0(sigma(log_0(y)))."""
    if not isinstance(sigma, Nonlinearity):
        raise TypeError("sigma must be a Nonlinearity tag")
    return ball_exp_origin(sigma(ball_log_origin(y)), y.alpha)
