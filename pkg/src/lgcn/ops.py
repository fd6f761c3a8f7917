"""Graph operations on the hyperboloid: transformation, aggregation, attention.

Every operation here follows the same lifting recipe: map to the origin
tangent space, act on the spatial coordinates only (the leading 0 coordinate
keeps the result inside the tangent space), and map back.  Neighborhood
aggregation is the closed-form centroid of the squared Lorentzian distance,
with a gradient-descent Frechet mean kept alongside as its independent
check.

Operations are pure; per-node computations are independent given fixed layer
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activations import Nonlinearity
from .hyperboloid import (
    EPS_ZERO,
    HyperPoint,
    _check_beta,
    _exp0,
    _inner_array,
    _log0,
    _project_array,
)

# Aggregating valid on-manifold points cannot make |<s,s>_L| collapse; a tiny
# value therefore signals corrupted input rather than an unlucky sample.
DEGENERATE_TOL = 1e-15


def lift_euclidean(h, beta: float) -> HyperPoint:
    """Map a Euclidean feature vector onto H^{k,beta}.

    A 0 first coordinate is prepended (placing h in the origin tangent
    space) and the exponential map is applied.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or h.size < 1:
        raise ValueError(f"feature must be a 1-d vector, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("feature has non-finite entries")
    beta = _check_beta(beta)
    return HyperPoint(_exp0(h, beta), beta)


def change_curvature(x: HyperPoint, beta_new: float) -> HyperPoint:
    """Move a point to the manifold with curvature -1/beta_new.

    Composition exp_0^{new} o log_0^{old}: the origin tangent vector is
    carried over unchanged, so directions and distances to the origin are
    preserved.
    """
    beta_new = _check_beta(beta_new)
    if beta_new == x.beta:
        return x
    return HyperPoint(_exp0(_log0(x.coords, x.beta), beta_new), beta_new)


def lorentz_matvec(m, x: HyperPoint) -> HyperPoint:
    """Linear transformation lifted to the manifold, H^{n,beta} -> H^{m,beta}.

    m is a plain m-by-n matrix acting on the spatial tangent coordinates;
    the first tangent coordinate stays 0, so the output is on-manifold by
    construction.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if m.shape[1] != x.dim:
        raise ValueError(f"matrix shape {m.shape} does not map dimension {x.dim}")
    v = _log0(x.coords, x.beta)
    return HyperPoint(_exp0(m @ v, x.beta), x.beta)


def clip_radius(x: HyperPoint, max_radius: float) -> HyperPoint:
    """Pull a point back to normalized geodesic radius <= max_radius.

    The manifold constraint stops being representable in float64 once
    cosh^2 of the normalized radius reaches ~1e-9/eps (radius ~8), so layer
    stacks clip transformed points before that regime; points inside the cap
    pass through untouched.
    """
    v = _log0(x.coords, x.beta)
    r = float(np.linalg.norm(v))
    cap = max_radius * np.sqrt(x.beta)
    if r <= cap:
        return x
    return HyperPoint(_exp0(v * (cap / r), x.beta), x.beta)


def lorentz_pointwise(sigma: Nonlinearity, x: HyperPoint) -> HyperPoint:
    """Pointwise nonlinearity applied to the spatial tangent coordinates."""
    if not isinstance(sigma, Nonlinearity):
        raise TypeError("sigma must be a Nonlinearity tag")
    return HyperPoint(_exp0(sigma(_log0(x.coords, x.beta)), x.beta), x.beta)


def lorentz_centroid(points: Sequence[HyperPoint], weights) -> HyperPoint:
    """Closed-form weighted centroid under the squared Lorentzian distance.

    c = sqrt(beta) * s / sqrt(|<s,s>_L|) with s the weighted coordinate sum.
    This is the exact minimizer of sum_j w_j * d_L^2(h_j, c) over the
    manifold, and is invariant to rescaling all weights by a positive
    constant.
    """
    if len(points) == 0:
        raise ValueError("centroid of an empty point set")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(points),):
        raise ValueError(f"{len(points)} points but weight shape {weights.shape}")
    if np.any(weights <= 0.0):
        raise ValueError("weights must be strictly positive")
    beta = points[0].beta
    stacked = np.stack([p.coords for p in points])
    if any(p.beta != beta for p in points):
        raise ValueError("points live on manifolds with different beta")
    s = weights @ stacked
    norm_sq = abs(float(_inner_array(s, s)))
    if norm_sq < DEGENERATE_TOL:
        raise ValueError("degenerate configuration: |<s,s>_L| ~ 0 (corrupted input?)")
    c = np.sqrt(beta) * s / np.sqrt(norm_sq)
    return HyperPoint(_project_array(c, beta), beta)


def centroid_objective(points: Sequence[HyperPoint], weights, c: HyperPoint) -> float:
    """sum_j w_j * d_L^2(h_j, c), the quantity the centroid minimizes."""
    stacked = np.stack([p.coords for p in points])
    inner = _inner_array(stacked, c.coords[None, :])
    return float(np.asarray(weights) @ (-2.0 * c.beta - 2.0 * inner))


def frechet_descent_centroid(
    points: Sequence[HyperPoint],
    weights,
    distance_kind: str = "sq_lorentzian",
    steps: int = 2000,
    lr: float = 1e-2,
) -> tuple[HyperPoint, float]:
    """Weighted mean by projected gradient descent; the centroid's slow twin.

    Minimizes sum_j w_j * d(h_j, c)^2 with d either the squared Lorentzian
    distance ("sq_lorentzian", converging to lorentz_centroid) or the
    intrinsic geodesic distance ("intrinsic", the Frechet mean proper, which
    has no closed form).  The spatial coordinates are the free variables;
    the ambient gradient is pushed through x0 = sqrt(beta + ||spatial||^2)
    by the chain rule and the iterate is renormalized every step.

    Returns the final iterate and its objective value; running out of steps
    is not an error, the caller judges convergence from the objective.
    """
    if len(points) == 0:
        raise ValueError("centroid of an empty point set")
    if distance_kind not in ("sq_lorentzian", "intrinsic"):
        raise ValueError(f"unknown distance_kind {distance_kind!r}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    weights = np.asarray(weights, dtype=np.float64)
    beta = points[0].beta
    h = np.stack([p.coords for p in points])
    h0 = h[:, 0]
    h_sp = h[:, 1:]

    # Start from the renormalized weighted Euclidean mean.
    c = _project_array(weights @ h / np.sum(weights), beta)
    for _ in range(steps):
        if distance_kind == "sq_lorentzian":
            # F = sum w_j (-2b - 2<h_j,c>): dF/dc0 = 2 s0, dF/dspatial = -2 s_sp.
            g0 = 2.0 * float(weights @ h0)
            g_sp = -2.0 * (weights @ h_sp)
        else:
            u = np.maximum(-_inner_array(h, c[None, :]) / beta, 1.0)
            # d(arcosh^2)/du = 2 arcosh(u)/sqrt(u^2-1); the ratio -> 1 at u=1.
            ratio = np.ones_like(u)
            mask = u > 1.0 + 1e-12
            um = u[mask]
            ratio[mask] = np.arccosh(um) / np.sqrt(um * um - 1.0)
            coef = weights * 2.0 * ratio
            g0 = float(coef @ h0)
            g_sp = -(coef @ h_sp)
        grad_spatial = g_sp + g0 * c[1:] / c[0]
        step = lr * grad_spatial
        c = _project_array(np.concatenate(([c[0]], c[1:] - step)), beta)
        if np.max(np.abs(step)) < 1e-14:
            break

    result = HyperPoint(c, beta)
    if distance_kind == "sq_lorentzian":
        objective = centroid_objective(points, weights, result)
    else:
        inner = _inner_array(h, c[None, :])
        d = np.sqrt(beta) * np.arccosh(np.maximum(-inner / beta, 1.0))
        objective = float(weights @ (d * d))
    return result, objective


@dataclass(frozen=True)
class AttentionWeights:
    """Per-node aggregation weights over N(i) + {i}; each row is a distribution."""

    indices: tuple[np.ndarray, ...]
    weights: tuple[np.ndarray, ...]

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.indices[i], self.weights[i]

    def __len__(self) -> int:
        return len(self.indices)


def _self_loop_rows(n: int, neighborhoods) -> list[np.ndarray]:
    rows = []
    for i in range(n):
        nbrs = np.asarray(neighborhoods[i], dtype=np.int64)
        rows.append(np.concatenate((nbrs, [i])) if nbrs.size else np.array([i], dtype=np.int64))
    return rows


def uniform_weights(n: int, neighborhoods) -> AttentionWeights:
    """Equal weights 1/|N(i)+{i}| per row; the attention-off aggregation."""
    rows = _self_loop_rows(n, neighborhoods)
    return AttentionWeights(
        tuple(rows), tuple(np.full(r.size, 1.0 / r.size) for r in rows)
    )


def attention_weights(features: Sequence[HyperPoint], m_att, neighborhoods) -> AttentionWeights:
    """Distance-based self-attention over each neighborhood (self included).

    The coefficient for edge (i, j) is minus the squared Lorentzian distance
    between the attention-transformed features, normalized per row with a
    max-shifted softmax (the coefficients are unbounded below, so the shift
    guards the exponentials).
    """
    m_att = np.asarray(m_att, dtype=np.float64)
    if m_att.ndim != 2 or m_att.shape[0] != m_att.shape[1]:
        raise ValueError(f"attention matrix must be square, got shape {m_att.shape}")
    beta = features[0].beta
    stacked = np.stack([p.coords for p in features])
    transformed = _exp0(_log0(stacked, beta) @ m_att.T, beta)

    rows = _self_loop_rows(len(features), neighborhoods)
    indices, weights = [], []
    for i, row in enumerate(rows):
        # mu_ij = -d_L^2 = 2*beta + 2*<ti, tj>_L
        inner = _inner_array(transformed[row], transformed[i][None, :])
        mu = 2.0 * beta + 2.0 * inner
        e = np.exp(mu - np.max(mu))
        w = e / np.sum(e)
        # mu gaps beyond ~745 underflow; keep the weights strictly positive.
        indices.append(row)
        weights.append(np.maximum(w, np.finfo(np.float64).tiny))
    return AttentionWeights(tuple(indices), tuple(weights))


def lgcn_layer_forward(
    features: Sequence[HyperPoint],
    m,
    m_att,
    sigma: Nonlinearity,
    beta_in: float,
    beta_out: float,
    neighborhoods,
    max_radius: float | None = None,
) -> list[HyperPoint]:
    """One full layer: curvature map, transform, attention, centroid, nonlinearity.

    ``m_att=None`` aggregates with uniform weights instead of attention.
    ``max_radius`` optionally clips the transformed points (see clip_radius);
    aggregation and the nonlinearity cannot increase the radius afterwards.
    Every intermediate stays on-manifold; the output is renormalized once
    more as part of the per-layer projection cadence.
    """
    beta_out = _check_beta(beta_out)
    n = len(features)
    if n != len(neighborhoods):
        raise ValueError(f"{n} features but {len(neighborhoods)} neighborhoods")
    x = list(features)
    if beta_in != beta_out:
        x = [change_curvature(p, beta_out) for p in x]
    if max_radius is None:
        x = [lorentz_matvec(m, p) for p in x]
    else:
        # Fused transform + clip: the cap must apply to the tangent before
        # exponentiating, otherwise the unclipped point is built (and checked)
        # first.  Equals clip_radius(lorentz_matvec(m, x)) in exact arithmetic.
        m = np.asarray(m, dtype=np.float64)
        cap = max_radius * np.sqrt(beta_out)
        tangents = [m @ _log0(p.coords, beta_out) for p in x]
        norms = [float(np.linalg.norm(t)) for t in tangents]
        tangents = [t if r <= cap else t * (cap / r) for t, r in zip(tangents, norms)]
        x = [HyperPoint(_exp0(t, beta_out), beta_out) for t in tangents]
    att = uniform_weights(n, neighborhoods) if m_att is None else attention_weights(x, m_att, neighborhoods)
    aggregated = []
    for i in range(n):
        idx, w = att.row(i)
        aggregated.append(lorentz_centroid([x[j] for j in idx], w))
    return [lorentz_pointwise(sigma, p) for p in aggregated]
