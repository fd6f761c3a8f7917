"""Network assembly, task heads, losses and the training loop.

Two forward paths exist on purpose.  Training builds the layer stack as a
scalar autodiff graph (lists of tape Values per node) so every parameter,
including the curvature pre-parameters, receives exact reverse-mode
gradients.  Evaluation recomputes embeddings with the plain numpy operations
from ops.py; the two paths implement the same composition and are tested
against each other.

A "euclidean" geometry switch provides the identity-curvature ablation
(linear transform + plain mean aggregation + the same decoder on squared
Euclidean distance) used as the flat baseline in the acceptance suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from . import ops
from .activations import Nonlinearity, parse_nonlinearity
from .autodiff import Adam, CurvatureParam, Parameter, Tape, Value, dropconnect_mask
from .graphs import Graph, Splits, UndefinedMetricError, _sample_non_edges, make_splits
from .hyperboloid import HyperPoint

_TINY = 1e-15


@dataclass
class LgcnConfig:
    """Hyperparameters for one training run."""

    dims: list[int]
    nonlinearity: str = "leaky_relu:0.5"
    attention: bool = True
    tie_curvature: bool = False
    dropconnect: float = 0.0
    lr: float = 0.01
    weight_decay: float = 0.0
    max_epochs: int = 200
    patience: int = 100
    seed: int = 0
    task: str = "lp"
    r: float = 2.0
    t: float = 1.0
    beta_init: float = 1.0
    geometry: str = "hyperboloid"
    normalize_features: bool = True
    max_radius: float = 6.0

    def __post_init__(self):
        if len(self.dims) < 2 or any(d < 1 for d in self.dims):
            raise ValueError(f"dims needs an input dim and >= 1 layer dims, got {self.dims}")
        if not 0.0 <= self.dropconnect < 1.0:
            raise ValueError("dropconnect rate must be in [0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.r <= 0.0 or self.t <= 0.0:
            raise ValueError("decoder parameters r and t must be positive")
        if self.task not in ("lp", "nc"):
            raise ValueError(f"task must be 'lp' or 'nc', got {self.task!r}")
        if self.geometry not in ("hyperboloid", "euclidean"):
            raise ValueError(f"geometry must be 'hyperboloid' or 'euclidean', got {self.geometry!r}")
        if self.max_epochs < 1 or self.lr <= 0.0 or self.weight_decay < 0.0:
            raise ValueError("need max_epochs >= 1, lr > 0, weight_decay >= 0")
        if self.max_radius <= 0.0:
            raise ValueError("max_radius must be positive (use a large value to disable)")

    @property
    def sigma(self) -> Nonlinearity:
        return parse_nonlinearity(self.nonlinearity)


@dataclass
class Layer:
    transform: Parameter
    attention: Optional[Parameter]
    curvature: Optional[CurvatureParam]


class LgcnModel:
    """Parameter container for the layer stack plus optional classifier head."""

    def __init__(self, config: LgcnConfig, rng: np.random.Generator):
        self.config = config
        self.layers: list[Layer] = []
        shared_curv = None
        if config.geometry == "hyperboloid" and config.tie_curvature:
            shared_curv = CurvatureParam.from_beta(config.beta_init, name="theta_beta")
        for l in range(1, len(config.dims)):
            fan_in, fan_out = config.dims[l - 1], config.dims[l]
            scale = math.sqrt(2.0 / (fan_in + fan_out))
            m = Parameter(scale * rng.standard_normal((fan_out, fan_in)), name=f"layer{l}.M")
            m_att = None
            if config.attention and config.geometry == "hyperboloid":
                # Contractive start: attention coefficients are minus squared
                # Lorentzian distances, which blow up exponentially in the
                # tangent radius and saturate the softmax if M_att starts big.
                att_scale = 0.3 * math.sqrt(1.0 / fan_out)
                m_att = Parameter(
                    att_scale * rng.standard_normal((fan_out, fan_out)), name=f"layer{l}.M_att"
                )
            curv = None
            if config.geometry == "hyperboloid":
                curv = shared_curv or CurvatureParam.from_beta(
                    config.beta_init, name=f"layer{l}.theta_beta"
                )
            self.layers.append(Layer(m, m_att, curv))
        self.classifier_w: Optional[Parameter] = None
        self.classifier_b: Optional[Parameter] = None
        self._rng = rng

    def init_classifier(self, n_classes: int) -> None:
        d = self.config.dims[-1]
        scale = math.sqrt(2.0 / (d + n_classes))
        self.classifier_w = Parameter(
            scale * self._rng.standard_normal((n_classes, d)), name="classifier.W"
        )
        self.classifier_b = Parameter(np.zeros(n_classes), name="classifier.b")

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        seen = set()
        for layer in self.layers:
            params.append(layer.transform)
            if layer.attention is not None:
                params.append(layer.attention)
            if layer.curvature is not None and id(layer.curvature.param) not in seen:
                seen.add(id(layer.curvature.param))
                params.append(layer.curvature.param)
        if self.classifier_w is not None:
            params.extend([self.classifier_w, self.classifier_b])
        return params

    def weight_parameters(self) -> list[Parameter]:
        """Matrices subject to L2 decay (curvatures and biases are exempt)."""
        params = [l.transform for l in self.layers]
        params.extend(l.attention for l in self.layers if l.attention is not None)
        if self.classifier_w is not None:
            params.append(self.classifier_w)
        return params

    def betas(self) -> list[float]:
        return [l.curvature.beta() for l in self.layers if l.curvature is not None]

    def state_dict(self) -> dict:
        state = {"layers": [], "config": self.config.__dict__ | {"dims": list(self.config.dims)}}
        for layer in self.layers:
            entry = {"M": layer.transform.values.tolist()}
            if layer.attention is not None:
                entry["M_att"] = layer.attention.values.tolist()
            if layer.curvature is not None:
                entry["theta_beta"] = layer.curvature.theta
            state["layers"].append(entry)
        if self.classifier_w is not None:
            state["classifier"] = {
                "W": self.classifier_w.values.tolist(),
                "b": self.classifier_b.values.tolist(),
            }
        return state

    def snapshot(self) -> list[np.ndarray]:
        return [p.values.copy() for p in self.parameters()]

    def restore(self, snap: list[np.ndarray]) -> None:
        for p, vals in zip(self.parameters(), snap):
            p.values[...] = vals


def save_checkpoint(model: LgcnModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.state_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> LgcnModel:
    with open(path) as fh:
        state = json.load(fh)
    config = LgcnConfig(**state["config"])
    model = LgcnModel(config, np.random.default_rng(0))
    for layer, entry in zip(model.layers, state["layers"]):
        layer.transform.values[...] = np.array(entry["M"])
        if layer.attention is not None:
            layer.attention.values[...] = np.array(entry["M_att"])
        if layer.curvature is not None:
            layer.curvature.param.values[0] = entry["theta_beta"]
    if "classifier" in state:
        w = np.array(state["classifier"]["W"])
        model.init_classifier(w.shape[0])
        model.classifier_w.values[...] = w
        model.classifier_b.values[...] = np.array(state["classifier"]["b"])
    return model


# ---------------------------------------------------------------------------
# Scalar-graph forward pass (training path).
# ---------------------------------------------------------------------------


def _exp0_v(spatial: list[Value], sqrt_b: Value) -> list[Value]:
    sumsq = spatial[0] * spatial[0]
    for v in spatial[1:]:
        sumsq = sumsq + v * v
    r = ad.sqrt(sumsq)
    rs = ad.maximum(r, _TINY)
    arg = rs / sqrt_b
    x0 = sqrt_b * ad.cosh(r / sqrt_b)
    scale = sqrt_b * ad.sinh(arg) / rs
    return [x0] + [scale * v for v in spatial]


def _log0_v(point: list[Value], sqrt_b: Value) -> list[Value]:
    spatial = point[1:]
    sumsq = spatial[0] * spatial[0]
    for v in spatial[1:]:
        sumsq = sumsq + v * v
    sp_norm = ad.maximum(ad.sqrt(sumsq), _TINY)
    rr = sqrt_b * ad.arcosh(point[0] / sqrt_b)
    scale = rr / sp_norm
    return [scale * v for v in spatial]


def _inner_v(x: list[Value], y: list[Value]) -> Value:
    acc = -(x[0] * y[0])
    for a, b in zip(x[1:], y[1:]):
        acc = acc + a * b
    return acc


def _sq_dist_v(x: list[Value], y: list[Value], beta: Value) -> Value:
    return -2.0 * beta - 2.0 * _inner_v(x, y)


def _clip_tangent_v(spatial: list[Value], sqrt_b: Value, max_radius: float) -> list[Value]:
    """Scale the tangent down to normalized radius max_radius when above it."""
    sumsq = spatial[0] * spatial[0]
    for v in spatial[1:]:
        sumsq = sumsq + v * v
    r = ad.maximum(ad.sqrt(sumsq), _TINY)
    factor = ad.minimum(max_radius * sqrt_b / r, 1.0)
    return [factor * v for v in spatial]


def _matvec_rows(rows: list[list[Value]], v: Sequence[Value]) -> list[Value]:
    out = []
    for row in rows:
        acc = row[0] * v[0]
        for w, x in zip(row[1:], v[1:]):
            acc = acc + w * x
        out.append(acc)
    return out


def _matvec_const(rows: list[list[Value]], h: np.ndarray) -> list[Value]:
    """Rows of Values times a constant vector; zero entries contribute nothing."""
    nz = [int(j) for j in np.flatnonzero(h)]
    out = []
    for row in rows:
        acc = None
        for j in nz:
            term = row[j] * float(h[j])
            acc = term if acc is None else acc + term
        if acc is None:
            acc = row[0] * 0.0
        out.append(acc)
    return out


def _stage_matrix(tape: Tape, param: Parameter, mask: Optional[np.ndarray]) -> list[list[Value]]:
    staged = tape.stage(param)
    rows: list[list[Value]] = []
    for i in range(param.values.shape[0]):
        if mask is None:
            rows.append(list(staged[i]))
        else:
            rows.append([staged[i, j] * float(mask[i, j]) for j in range(param.values.shape[1])])
    return rows


def _softmax_v(mu: list[Value]) -> list[Value]:
    m = mu[0]
    for v in mu[1:]:
        m = ad.maximum(v, m)
    exps = [ad.exp(v - m) for v in mu]
    total = exps[0]
    for e in exps[1:]:
        total = total + e
    return [e / total for e in exps]


def _apply_sigma_v(sigma: Nonlinearity, vs: list[Value]) -> list[Value]:
    if sigma.kind == "relu":
        return [ad.relu(v) for v in vs]
    return [ad.leaky_relu(v, sigma.slope) for v in vs]


def forward_values(
    tape: Tape,
    model: LgcnModel,
    neighborhoods: Sequence[np.ndarray],
    features: np.ndarray,
    training: bool = False,
    drop_rng: Optional[np.random.Generator] = None,
) -> tuple[list[list[Value]], Optional[Value]]:
    """Build the full layer stack on a tape.

    Returns per-node embedding coordinate lists and the final beta node
    (None for euclidean geometry).  DropConnect masks are sampled per call
    when training.
    """
    config = model.config
    n = features.shape[0]
    sigma = config.sigma
    rate = config.dropconnect if training else 0.0

    if config.geometry == "euclidean":
        h: list[list[Value]] = [[tape.constant(x) for x in row] for row in features]
        for layer in model.layers:
            mask = dropconnect_mask(layer.transform.values.shape, rate, drop_rng) if rate > 0 else None
            rows = _stage_matrix(tape, layer.transform, mask)
            t = [_matvec_rows(rows, h[i]) for i in range(n)]
            agg = []
            for i in range(n):
                members = list(neighborhoods[i]) + [i]
                w = 1.0 / len(members)
                coords = []
                for c in range(len(t[i])):
                    acc = t[members[0]][c]
                    for j in members[1:]:
                        acc = acc + t[j][c]
                    coords.append(acc * w)
                agg.append(coords)
            h = [_apply_sigma_v(sigma, coords) for coords in agg]
        return h, None

    staged_betas: dict[int, Value] = {}
    x: list[list[Value]] = []
    prev_sqrt_b: Optional[Value] = None
    beta_v: Optional[Value] = None
    for layer_idx, layer in enumerate(model.layers):
        key = id(layer.curvature.param)
        if key not in staged_betas:
            staged_betas[key] = layer.curvature.beta_value(tape)
        new_beta = staged_betas[key]
        sqrt_b = ad.sqrt(new_beta)

        mask = dropconnect_mask(layer.transform.values.shape, rate, drop_rng) if rate > 0 else None
        rows = _stage_matrix(tape, layer.transform, mask)
        if layer_idx == 0:
            # Lift + log cancel: the Euclidean features are already the
            # origin-tangent coordinates of their lifted points.
            tangents = [_matvec_const(rows, features[i]) for i in range(n)]
        else:
            same_curv = beta_v is new_beta
            tangents = [
                _matvec_rows(rows, _log0_v(x[i], prev_sqrt_b if not same_curv else sqrt_b))
                for i in range(n)
            ]
        beta_v = new_beta
        prev_sqrt_b = sqrt_b
        tangents = [_clip_tangent_v(t, sqrt_b, config.max_radius) for t in tangents]
        x = [_exp0_v(t, sqrt_b) for t in tangents]

        if layer.attention is not None:
            att_mask = dropconnect_mask(layer.attention.values.shape, rate, drop_rng) if rate > 0 else None
            att_rows = _stage_matrix(tape, layer.attention, att_mask)
            transformed = [_exp0_v(_matvec_rows(att_rows, _log0_v(p, sqrt_b)), sqrt_b) for p in x]

        aggregated = []
        for i in range(n):
            members = list(neighborhoods[i]) + [i]
            if layer.attention is not None:
                mu = [
                    -_sq_dist_v(transformed[i], transformed[j], beta_v) for j in members
                ]
                weights = _softmax_v(mu)
            else:
                weights = [1.0 / len(members)] * len(members)
            dim = len(x[i])
            s = []
            for c in range(dim):
                acc = x[members[0]][c] * weights[0]
                for j, wj in zip(members[1:], weights[1:]):
                    acc = acc + x[j][c] * wj
                s.append(acc)
            inner = _inner_v(s, s)
            norm = ad.sqrt(ad.maximum(inner, -inner))
            scale = sqrt_b / norm
            aggregated.append([scale * c for c in s])

        x = [_exp0_v(_apply_sigma_v(sigma, _log0_v(c, sqrt_b)), sqrt_b) for c in aggregated]
    return x, beta_v


# ---------------------------------------------------------------------------
# Decoders and losses.
# ---------------------------------------------------------------------------


def fermi_dirac_score(u_i: HyperPoint, u_j: HyperPoint, r: float, t: float) -> float:
    """Edge probability 1 / (exp((d_L^2 - r)/t) + 1); decreasing in distance."""
    if t <= 0.0 or r <= 0.0:
        raise ValueError("decoder parameters r and t must be positive")
    from .hyperboloid import sq_lorentz_distance

    return _fd_prob(sq_lorentz_distance(u_i, u_j), r, t)


def _fd_prob(sq_dist: float, r: float, t: float) -> float:
    z = (r - sq_dist) / t
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _sq_dist_embed_v(embeddings, beta: Optional[Value], i: int, j: int) -> Value:
    if beta is not None:
        return _sq_dist_v(embeddings[i], embeddings[j], beta)
    acc = None
    for a, b in zip(embeddings[i], embeddings[j]):
        diff = a - b
        term = diff * diff
        acc = term if acc is None else acc + term
    return acc


def link_prediction_loss(
    embeddings: list[list[Value]],
    pos_edges,
    neg_edges,
    r: float,
    t: float,
    beta: Optional[Value] = None,
) -> Value:
    """Mean binary cross-entropy of Fermi-Dirac scores, positives labeled 1.

    ``beta`` selects squared Lorentzian distance (hyperboloid embeddings,
    n+1 coordinate lists) or, when None, squared Euclidean distance.
    Written in the softplus form -log sigmoid(z) = softplus(-z): finite for
    every distance (squared Lorentzian distances grow exponentially in the
    radius), and unlike clamping the probabilities it never zeroes the pull
    on a far-away positive pair.
    """
    pos_edges = np.asarray(pos_edges)
    neg_edges = np.asarray(neg_edges)
    if pos_edges.size == 0 or neg_edges.size == 0:
        raise ValueError("link prediction needs non-empty positive and negative edge sets")

    def logit(u, v):
        return (r - _sq_dist_embed_v(embeddings, beta, int(u), int(v))) * (1.0 / t)

    terms: list[Value] = []
    for u, v in pos_edges:
        terms.append(ad.softplus(-logit(u, v)))
    for u, v in neg_edges:
        terms.append(ad.softplus(logit(u, v)))
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total * (1.0 / len(terms))


def _nc_logits_v(
    embeddings: list[list[Value]],
    beta: Optional[Value],
    w_rows: list[list[Value]],
    b_vals: list[Value],
    sqrt_b: Optional[Value],
    node: int,
) -> list[Value]:
    coords = embeddings[node]
    if beta is not None:
        coords = _log0_v(coords, sqrt_b)
    z = _matvec_rows(w_rows, coords)
    return [zi + bi for zi, bi in zip(z, b_vals)]


def node_classification_loss(
    embeddings: list[list[Value]],
    beta: Optional[Value],
    model: LgcnModel,
    tape: Tape,
    nodes,
    labels: np.ndarray,
) -> Value:
    """Mean softmax cross-entropy over ``nodes``; logits read the tangent space."""
    n_classes = model.classifier_w.values.shape[0]
    bad = [int(i) for i in nodes if not 0 <= labels[i] < n_classes]
    if bad:
        raise ValueError(f"labels out of range [0,{n_classes}) at nodes {bad}")
    w_rows = _stage_matrix(tape, model.classifier_w, None)
    b_vals = list(tape.stage(model.classifier_b))
    sqrt_b = ad.sqrt(beta) if beta is not None else None
    terms = []
    for i in nodes:
        logits = _nc_logits_v(embeddings, beta, w_rows, b_vals, sqrt_b, int(i))
        m = logits[0]
        for z in logits[1:]:
            m = ad.maximum(z, m)
        total = ad.exp(logits[0] - m)
        for z in logits[1:]:
            total = total + ad.exp(z - m)
        lse = m + ad.log(total)
        terms.append(lse - logits[int(labels[i])])
    loss = terms[0]
    for term in terms[1:]:
        loss = loss + term
    return loss * (1.0 / len(terms))


def node_classification_head(
    embeddings: Sequence[HyperPoint] | np.ndarray,
    labels: np.ndarray,
    w_cls: np.ndarray,
    b_cls: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Numpy head: tangent-space linear logits; returns (mean CE, argmax preds)."""
    from .hyperboloid import _log0

    if isinstance(embeddings[0], HyperPoint):
        beta = embeddings[0].beta
        coords = np.stack([p.coords for p in embeddings])
        feats = _log0(coords, beta)
    else:
        feats = np.asarray(embeddings)
    logits = feats @ np.asarray(w_cls).T + np.asarray(b_cls)
    preds = np.argmax(logits, axis=1)
    labels = np.asarray(labels)
    n_classes = logits.shape[1]
    if np.any((labels < 0) | (labels >= n_classes)):
        raise ValueError(f"labels out of range [0,{n_classes})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    ce = float(np.mean(lse - shifted[np.arange(len(labels)), labels]))
    return ce, preds


def evaluate_auc(scores, labels) -> float:
    """Mann-Whitney rank AUC; tied scores receive half credit via midranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both a positive and a negative example")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(np.sum(ranks[labels == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# Numpy evaluation path.
# ---------------------------------------------------------------------------


def forward_numpy(model: LgcnModel, neighborhoods, features: np.ndarray):
    """Evaluation forward pass; returns (embeddings, beta) or (array, None)."""
    config = model.config
    if config.geometry == "euclidean":
        h = features
        sigma = config.sigma
        n = h.shape[0]
        for layer in model.layers:
            t = h @ layer.transform.values.T
            agg = np.empty_like(t)
            for i in range(n):
                members = list(neighborhoods[i]) + [i]
                agg[i] = t[members].mean(axis=0)
            h = sigma(agg)
        return h, None

    sigma = config.sigma
    points = None
    beta_prev = None
    for layer_idx, layer in enumerate(model.layers):
        beta = layer.curvature.beta()
        if layer_idx == 0:
            points = [ops.lift_euclidean(features[i], beta) for i in range(features.shape[0])]
            beta_prev = beta
        m_att = layer.attention.values if layer.attention is not None else None
        points = ops.lgcn_layer_forward(
            points, layer.transform.values, m_att, sigma, beta_prev, beta, neighborhoods,
            max_radius=config.max_radius,
        )
        beta_prev = beta
    return points, beta_prev


def score_edges(embeddings, edges, r: float, t: float) -> np.ndarray:
    """Fermi-Dirac scores for an (E, 2) edge array on either geometry."""
    edges = np.asarray(edges).reshape(-1, 2)
    if len(edges) == 0:
        return np.zeros(0)
    if isinstance(embeddings[0], HyperPoint):
        from .hyperboloid import sq_lorentz_distance

        d = [sq_lorentz_distance(embeddings[int(u)], embeddings[int(v)]) for u, v in edges]
    else:
        arr = np.asarray(embeddings)
        diff = arr[edges[:, 0]] - arr[edges[:, 1]]
        d = np.sum(diff * diff, axis=1)
    return np.array([_fd_prob(float(x), r, t) for x in d])


# ---------------------------------------------------------------------------
# Training loop.
# ---------------------------------------------------------------------------


@dataclass
class TrainedModel:
    """Best-validation parameters plus the embeddings they produce."""

    model: LgcnModel
    embeddings: object
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    val_metric: float = 0.0
    test_metric: float = 0.0
    splits: Optional[Splits] = None


def _epoch_metrics(model, splits, neighborhoods, features, labels):
    """Validation/test metrics from the numpy path at the current parameters."""
    config = model.config
    emb, _ = forward_numpy(model, neighborhoods, features)
    if config.task == "lp":
        def auc_for(pos, neg):
            scores = np.concatenate([score_edges(emb, pos, config.r, config.t),
                                     score_edges(emb, neg, config.r, config.t)])
            y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
            return evaluate_auc(scores, y)

        return auc_for(splits.val_edges, splits.val_neg), auc_for(splits.test_edges, splits.test_neg), emb
    _, preds = node_classification_head(
        emb, np.maximum(labels, 0), model.classifier_w.values, model.classifier_b.values
    )
    val_acc = float(np.mean(preds[splits.val_nodes] == labels[splits.val_nodes]))
    test_acc = float(np.mean(preds[splits.test_nodes] == labels[splits.test_nodes]))
    return val_acc, test_acc, emb


def train(graph: Graph, config: LgcnConfig, splits: Optional[Splits] = None) -> TrainedModel:
    """Adam + L2 decay + DropConnect with validation-based early stopping.

    Deterministic given (graph, config): the seed drives splits, parameter
    init, negative sampling and DropConnect through independent derived
    streams.  The returned model carries the parameters of the best
    validation epoch, not the last one.
    """
    if splits is None:
        splits = make_splits(graph, config.task, config.seed)
    features = graph.feature_matrix()
    if config.normalize_features:
        norms = np.linalg.norm(features, axis=1)
        mean_norm = float(np.mean(norms[norms > 0])) if np.any(norms > 0) else 1.0
        features = features / mean_norm
    if features.shape[1] != config.dims[0]:
        raise ValueError(
            f"feature dim {features.shape[1]} does not match config input dim {config.dims[0]}"
        )

    init_rng = np.random.default_rng([config.seed, 11])
    neg_rng = np.random.default_rng([config.seed, 12])
    drop_rng = np.random.default_rng([config.seed, 13])
    model = LgcnModel(config, init_rng)

    if config.task == "lp":
        mp_graph = splits.train_graph
        train_pos = splits.train_edges
        if train_pos.shape[0] == 0:
            raise ValueError("empty training edge split")
        full_edges = {(int(u), int(v)) for u, v in graph.edges()}
        labels = None
    else:
        mp_graph = graph
        labels = graph.labels
        if splits.train_nodes.size == 0 or splits.val_nodes.size == 0 or splits.test_nodes.size == 0:
            raise ValueError("empty node split")
        n_classes = int(labels.max()) + 1
        model.init_classifier(n_classes)
    neighborhoods = mp_graph.neighbor_lists()

    optimizer = Adam(model.parameters(), lr=config.lr)
    history: list[dict] = []
    best_val = -np.inf
    best_epoch = 0
    best_test = 0.0
    best_snap = model.snapshot()
    best_emb = None

    for epoch in range(1, config.max_epochs + 1):
        tape = Tape()
        emb_v, beta_v = forward_values(
            tape, model, neighborhoods, features, training=True, drop_rng=drop_rng
        )
        if config.task == "lp":
            neg = _sample_non_edges(graph.n, train_pos.shape[0], full_edges, set(), neg_rng)
            loss = link_prediction_loss(emb_v, train_pos, neg, config.r, config.t, beta=beta_v)
        else:
            loss = node_classification_loss(emb_v, beta_v, model, tape, splits.train_nodes, labels)
        train_loss = loss.data

        optimizer.zero_grad()
        tape.backward(loss)
        if config.weight_decay > 0.0:
            for p in model.weight_parameters():
                p.grads += 2.0 * config.weight_decay * p.values
        optimizer.step()

        val_metric, test_metric, emb = _epoch_metrics(model, splits, neighborhoods, features, labels)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_metric": val_metric})
        if val_metric > best_val:
            best_val = val_metric
            best_epoch = epoch
            best_test = test_metric
            best_snap = model.snapshot()
            best_emb = emb
        if epoch - best_epoch >= config.patience:
            break

    model.restore(best_snap)
    if best_emb is None:
        _, best_test, best_emb = _epoch_metrics(model, splits, neighborhoods, features, labels)
    return TrainedModel(
        model=model,
        embeddings=best_emb,
        history=history,
        best_epoch=best_epoch,
        val_metric=float(best_val),
        test_metric=float(best_test),
        splits=splits,
    )
