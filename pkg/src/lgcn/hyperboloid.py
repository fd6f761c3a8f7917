"""Hyperboloid model of hyperbolic space: exact double-precision kernels.

Convention: a point of the n-dimensional manifold carries n+1 coordinates
(x0, ..., xn) with -x0^2 + sum_i xi^2 = -beta and x0 > 0 (beta > 0, sectional
curvature -1/beta).  Tangent vectors at the origin (sqrt(beta), 0, ..., 0)
have first coordinate exactly 0, which makes their Lorentzian norm equal to
the Euclidean norm of the spatial part.

All public operations are pure functions over immutable values and are safe
to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# On-manifold tolerance for |<x,x>_L + beta|; holds for radii up to ~8.
MANIFOLD_ATOL = 1e-9
# Tangent norms below this map to the origin exactly.
EPS_ZERO = 1e-12


def _as_vector(x, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError(f"{name} must be a 1-d array of length >= 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not np.isfinite(beta) or beta <= 0.0:
        raise ValueError(f"beta must be a positive real, got {beta}")
    return beta


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def lorentz_inner(x, y) -> float:
    """Lorentzian scalar product -x0*y0 + sum_{i>=1} xi*yi.

    Args:
        x, y: real vectors of equal length n+1 >= 2.

    Returns:
        The scalar product as a float.
    """
    xv = _as_vector(x, "x")
    yv = _as_vector(y, "y")
    if xv.shape != yv.shape:
        raise ValueError(f"length mismatch: {xv.shape} vs {yv.shape}")
    return float(-xv[0] * yv[0] + xv[1:] @ yv[1:])


def lorentz_norm(v, modulus: bool = False) -> float:
    """Lorentzian norm sqrt(<v,v>_L).

    For tangent vectors at the origin (v0 = 0) the inner product is
    non-negative and this equals the Euclidean norm of the spatial part.
    With ``modulus=True`` returns sqrt(|<v,v>_L|), defined for every vector;
    otherwise a negative inner product raises.
    """
    vv = _as_vector(v, "v")
    inner = float(-vv[0] * vv[0] + vv[1:] @ vv[1:])
    if modulus:
        return float(np.sqrt(abs(inner)))
    if inner < 0.0:
        raise ValueError(f"<v,v>_L = {inner} < 0; use modulus=True for sqrt(|.|)")
    return float(np.sqrt(inner))


@dataclass(frozen=True)
class HyperPoint:
    """Point on the hyperboloid manifold, n+1 coordinates plus its beta."""

    coords: np.ndarray
    beta: float

    def __post_init__(self):
        coords = _as_vector(self.coords, "coords").copy()
        beta = _check_beta(self.beta)
        if coords[0] <= 0.0:
            raise ValueError(f"x0 must be positive, got {coords[0]}")
        inner = -coords[0] * coords[0] + coords[1:] @ coords[1:]
        if abs(inner + beta) > MANIFOLD_ATOL:
            raise ValueError(
                f"off-manifold point: <x,x>_L = {inner}, expected {-beta} "
                f"(|error| = {abs(inner + beta):.3e} > {MANIFOLD_ATOL})"
            )
        object.__setattr__(self, "coords", _freeze(coords))
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self) -> int:
        """Manifold dimension n (ambient dimension minus one)."""
        return self.coords.size - 1

    @property
    def spatial(self) -> np.ndarray:
        return self.coords[1:]


@dataclass(frozen=True)
class TangentVector:
    """Vector in the tangent space at the origin of H^{n,beta}; v0 is exactly 0."""

    coords: np.ndarray
    beta: float

    def __post_init__(self):
        coords = _as_vector(self.coords, "coords").copy()
        beta = _check_beta(self.beta)
        if coords[0] != 0.0:
            raise ValueError(f"tangent vectors at the origin require v0 == 0, got {coords[0]}")
        object.__setattr__(self, "coords", _freeze(coords))
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_spatial(cls, spatial, beta: float) -> "TangentVector":
        spatial = np.asarray(spatial, dtype=np.float64)
        return cls(np.concatenate(([0.0], spatial)), beta)

    @property
    def spatial(self) -> np.ndarray:
        return self.coords[1:]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords[1:]))


def origin(n: int, beta: float) -> HyperPoint:
    """Origin (sqrt(beta), 0, ..., 0) of the n-dimensional manifold."""
    beta = _check_beta(beta)
    coords = np.zeros(n + 1)
    coords[0] = np.sqrt(beta)
    return HyperPoint(coords, beta)


def project_to_manifold(raw, beta: float) -> HyperPoint:
    """Renormalize raw coordinates onto the manifold.

    Keeps the spatial part and recomputes x0 = sqrt(beta + ||spatial||^2),
    which satisfies the manifold constraint exactly.  Idempotent.
    """
    raw = _as_vector(raw, "raw")
    beta = _check_beta(beta)
    return HyperPoint(_project_array(raw, beta), beta)


def exp_origin(v: TangentVector) -> HyperPoint:
    """Exponential map at the origin.

    A tangent vector of norm r maps to the point at geodesic distance r from
    the origin in direction v.  Norms below EPS_ZERO return the origin
    exactly.
    """
    beta = v.beta
    return HyperPoint(_exp0(v.spatial, beta), beta)


def log_origin(x: HyperPoint) -> TangentVector:
    """Logarithmic map at the origin (inverse of exp_origin).

    The origin itself maps to the zero tangent vector by continuity.  The
    first coordinate of the result is structurally 0.
    """
    return TangentVector.from_spatial(_log0(x.coords, x.beta), x.beta)


def distance(x: HyperPoint, y: HyperPoint) -> float:
    """Intrinsic geodesic distance sqrt(beta) * arcosh(-<x,y>_L / beta).

    The arcosh argument is clamped to 1 from below; analytically it is >= 1
    but floating point can dip under for nearly equal points.
    """
    _check_same_beta(x, y)
    inner = lorentz_inner(x.coords, y.coords)
    arg = max(1.0, -inner / x.beta)
    return float(np.sqrt(x.beta) * np.arccosh(arg))


def sq_lorentz_distance(x: HyperPoint, y: HyperPoint) -> float:
    """Squared Lorentzian distance -2*beta - 2*<x,y>_L; non-negative."""
    _check_same_beta(x, y)
    inner = lorentz_inner(x.coords, y.coords)
    return float(-2.0 * x.beta - 2.0 * inner)


def _check_same_beta(x: HyperPoint, y: HyperPoint) -> None:
    if x.beta != y.beta:
        raise ValueError(f"curvature mismatch: beta {x.beta} vs {y.beta}")


# ---------------------------------------------------------------------------
# Array kernels.  These operate on plain float64 arrays, support a batched
# leading axis, and skip the per-point validation of the dataclass API; the
# composite graph operations and analysis code build on them.
# ---------------------------------------------------------------------------


def _project_array(raw: np.ndarray, beta: float) -> np.ndarray:
    """x0 := sqrt(beta + ||spatial||^2) for points along the last axis."""
    spatial = raw[..., 1:]
    x0 = np.sqrt(beta + np.sum(spatial * spatial, axis=-1, keepdims=True))
    return np.concatenate([x0, spatial], axis=-1)


def _inner_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Lorentzian inner product along the last axis."""
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def _exp0(spatial: np.ndarray, beta: float) -> np.ndarray:
    """exp at the origin from spatial tangent coordinates (..., n) -> (..., n+1)."""
    spatial = np.asarray(spatial, dtype=np.float64)
    sqrt_b = np.sqrt(beta)
    r = np.linalg.norm(spatial, axis=-1, keepdims=True)
    x0 = sqrt_b * np.cosh(r / sqrt_b)
    # sinh(r/sb)*sb/r -> 1 as r -> 0; guard the division, then pin tiny norms.
    safe_r = np.maximum(r, EPS_ZERO)
    scale = sqrt_b * np.sinh(safe_r / sqrt_b) / safe_r
    scale = np.where(r < EPS_ZERO, 0.0, scale)
    x0 = np.where(r < EPS_ZERO, sqrt_b, x0)
    return np.concatenate([x0, scale * spatial], axis=-1)


def _log0(points: np.ndarray, beta: float) -> np.ndarray:
    """log at the origin to spatial tangent coordinates (..., n+1) -> (..., n)."""
    points = np.asarray(points, dtype=np.float64)
    sqrt_b = np.sqrt(beta)
    spatial = points[..., 1:]
    sp_norm = np.linalg.norm(spatial, axis=-1, keepdims=True)
    r = sqrt_b * np.arccosh(np.maximum(points[..., :1] / sqrt_b, 1.0))
    scale = r / np.maximum(sp_norm, EPS_ZERO)
    return scale * spatial


def _distance_matrix(points: np.ndarray, beta: float) -> np.ndarray:
    """Pairwise intrinsic distances for stacked points (m, n+1) -> (m, m)."""
    g = points.copy()
    g[:, 0] = -g[:, 0]
    gram = points @ g.T  # <x_i, x_j>_L
    arg = np.maximum(1.0, -gram / beta)
    return np.sqrt(beta) * np.arccosh(arg)
