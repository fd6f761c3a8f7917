"""Graph ingestion, splits, shortest paths, hyperbolicity and distortion.

Graphs are undirected, unweighted, stored as CSR neighbor lists (sorted,
deduplicated, no self-loops; aggregation adds the self-loop logically).
The O(n^2) BFS sweep and the O(n^4) four-point enumeration are the hot
kernels: they run under numba by default with vectorized numpy fallbacks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._backend import USE_NUMBA
from .hyperboloid import HyperPoint, _distance_matrix


class GraphParseError(ValueError):
    """Malformed dataset file; message carries file and line number."""


class UndefinedMetricError(ValueError):
    """A metric was requested on an input where it is undefined."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph: CSR adjacency + optional features/labels."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    features: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    @classmethod
    def from_edges(cls, n: int, edges, features=None, labels=None) -> "Graph":
        """Build from an iterable of (u, v) pairs; symmetrizes and dedupes."""
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                continue
            pairs.add((min(u, v), max(u, v)))
        adj = [[] for _ in range(n)]
        for u, v in pairs:
            adj[u].append(v)
            adj[v].append(u)
        indptr = np.zeros(n + 1, dtype=np.int64)
        for i in range(n):
            adj[i].sort()
            indptr[i + 1] = indptr[i] + len(adj[i])
        indices = np.array([v for row in adj for v in row], dtype=np.int64)
        if features is not None:
            features = np.asarray(features, dtype=np.float64)
            if features.shape[0] != n:
                raise ValueError(f"{features.shape[0]} feature rows for {n} nodes")
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ValueError(f"label shape {labels.shape} for {n} nodes")
        return cls(n, indptr, indices, features, labels)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    def neighbor_lists(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n)]

    def edges(self) -> np.ndarray:
        """Undirected edge list as (E, 2) with u < v, lexicographically sorted."""
        out = []
        for u in range(self.n):
            for v in self.neighbors(u):
                if u < v:
                    out.append((u, v))
        return np.array(out, dtype=np.int64).reshape(-1, 2)

    @property
    def num_edges(self) -> int:
        return self.indices.size // 2

    def feature_matrix(self) -> np.ndarray:
        """Stored features, or the one-hot identity fallback."""
        if self.features is not None:
            return self.features
        return np.eye(self.n)


# ---------------------------------------------------------------------------
# Loading and saving.
# ---------------------------------------------------------------------------


def _parse_int(tok: str, path, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise GraphParseError(f"{path}:{lineno}: expected integer, got {tok!r}") from None


def load_graph(edge_list_path, features_path=None, labels_path=None) -> Graph:
    """Load a graph from CSV files.

    Edge rows are "u,v" with 0-indexed integer nodes; feature rows align
    with node indices; label rows are "node,label".  The node count is the
    feature row count when features are given, otherwise max index + 1.
    """
    edges = []
    max_node = -1
    with open(edge_list_path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise GraphParseError(f"{edge_list_path}:{lineno}: expected 'u,v', got {line!r}")
            u = _parse_int(parts[0], edge_list_path, lineno)
            v = _parse_int(parts[1], edge_list_path, lineno)
            if u < 0 or v < 0:
                raise GraphParseError(f"{edge_list_path}:{lineno}: negative node index")
            edges.append((u, v))
            max_node = max(max_node, u, v)

    features = None
    if features_path is not None:
        rows = []
        width = None
        with open(features_path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = [float(tok) for tok in line.split(",")]
                except ValueError:
                    raise GraphParseError(f"{features_path}:{lineno}: non-numeric feature") from None
                if width is None:
                    width = len(row)
                elif len(row) != width:
                    raise GraphParseError(
                        f"{features_path}:{lineno}: ragged row ({len(row)} values, expected {width})"
                    )
                rows.append(row)
        features = np.array(rows, dtype=np.float64)

    n = features.shape[0] if features is not None else max_node + 1
    if max_node >= n:
        raise GraphParseError(f"{edge_list_path}: node {max_node} out of range for n={n}")

    labels = None
    if labels_path is not None:
        labels = np.full(n, -1, dtype=np.int64)
        with open(labels_path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 2:
                    raise GraphParseError(f"{labels_path}:{lineno}: expected 'node,label'")
                node = _parse_int(parts[0], labels_path, lineno)
                label = _parse_int(parts[1], labels_path, lineno)
                if not 0 <= node < n:
                    raise GraphParseError(f"{labels_path}:{lineno}: node {node} out of range")
                labels[node] = label

    return Graph.from_edges(n, edges, features, labels)


def save_graph(graph: Graph, out_dir) -> dict:
    """Write edges.csv (+features.csv/labels.csv when present); returns paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {"edges": os.path.join(out_dir, "edges.csv")}
    with open(paths["edges"], "w") as fh:
        for u, v in graph.edges():
            fh.write(f"{u},{v}\n")
    if graph.features is not None:
        paths["features"] = os.path.join(out_dir, "features.csv")
        with open(paths["features"], "w") as fh:
            for row in graph.features:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
    if graph.labels is not None:
        paths["labels"] = os.path.join(out_dir, "labels.csv")
        with open(paths["labels"], "w") as fh:
            for node, label in enumerate(graph.labels):
                fh.write(f"{node},{label}\n")
    return paths


# ---------------------------------------------------------------------------
# Train/validation/test splits.
# ---------------------------------------------------------------------------

# Link prediction edge fractions (train gets the flooring remainder).
LP_VAL_FRAC = 0.05
LP_TEST_FRAC = 0.10
# Node classification: the per-class protocol when the graph is large enough,
# otherwise proportional 30/10/60.
NC_TRAIN_PER_CLASS = 20
NC_VAL_COUNT = 500
NC_TEST_COUNT = 1000


@dataclass(frozen=True)
class Splits:
    """Per-task split sets; LP fields or NC fields are populated, not both."""

    task: str
    train_edges: Optional[np.ndarray] = None
    val_edges: Optional[np.ndarray] = None
    test_edges: Optional[np.ndarray] = None
    val_neg: Optional[np.ndarray] = None
    test_neg: Optional[np.ndarray] = None
    train_graph: Optional[Graph] = None
    train_nodes: Optional[np.ndarray] = None
    val_nodes: Optional[np.ndarray] = None
    test_nodes: Optional[np.ndarray] = None


def _sample_non_edges(n: int, count: int, edge_set: set, exclude: set,
                      rng: np.random.Generator) -> np.ndarray:
    """count distinct non-edges (u < v) avoiding edge_set and exclude."""
    total_pairs = n * (n - 1) // 2
    available = total_pairs - len(edge_set) - len(exclude)
    if count > available:
        raise ValueError(f"requested {count} non-edges but only {available} exist")
    picked: list[tuple[int, int]] = []
    seen = set()
    attempts = 0
    limit = 50 * max(count, 1) + 1000
    while len(picked) < count and attempts < limit:
        attempts += 1
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        pair = (min(u, v), max(u, v))
        if pair in edge_set or pair in exclude or pair in seen:
            continue
        seen.add(pair)
        picked.append(pair)
    if len(picked) < count:
        # Dense or tiny graph: enumerate the remaining non-edges outright.
        pool = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if (u, v) not in edge_set and (u, v) not in exclude and (u, v) not in seen
        ]
        idx = rng.choice(len(pool), size=count - len(picked), replace=False)
        picked.extend(pool[i] for i in idx)
    return np.array(picked, dtype=np.int64).reshape(-1, 2)


def make_splits(graph: Graph, task: str, seed: int) -> Splits:
    """Deterministic splits for one task.

    LP: 85/5/10 edge split (floor + remainder to train); val/test negative
    pairs are disjoint from every true edge and from each other; the
    message-passing graph keeps only training edges.
    NC: 20 train nodes per class with 500/1000 val/test nodes when the graph
    can afford it, otherwise 30/10/60 percent of the labeled nodes.
    """
    if task == "lp":
        rng = np.random.default_rng([int(seed), 101])
        edges = graph.edges()
        if edges.shape[0] == 0:
            raise ValueError("graph has no edges to split")
        order = rng.permutation(edges.shape[0])
        edges = edges[order]
        n_val = int(LP_VAL_FRAC * edges.shape[0])
        n_test = int(LP_TEST_FRAC * edges.shape[0])
        val_edges = edges[:n_val]
        test_edges = edges[n_val : n_val + n_test]
        train_edges = edges[n_val + n_test :]
        edge_set = {(int(u), int(v)) for u, v in edges}
        val_neg = _sample_non_edges(graph.n, n_val, edge_set, set(), rng)
        exclude = {(int(u), int(v)) for u, v in val_neg}
        test_neg = _sample_non_edges(graph.n, n_test, edge_set, exclude, rng)
        train_graph = Graph.from_edges(graph.n, train_edges, graph.features, graph.labels)
        return Splits(
            task="lp",
            train_edges=train_edges,
            val_edges=val_edges,
            test_edges=test_edges,
            val_neg=val_neg,
            test_neg=test_neg,
            train_graph=train_graph,
        )

    if task == "nc":
        if graph.labels is None:
            raise ValueError("node classification needs labels")
        rng = np.random.default_rng([int(seed), 202])
        labeled = np.flatnonzero(graph.labels >= 0)
        classes = np.unique(graph.labels[labeled])
        big_enough = labeled.size >= NC_TRAIN_PER_CLASS * classes.size + NC_VAL_COUNT + NC_TEST_COUNT
        if big_enough:
            train: list[int] = []
            for c in classes:
                members = rng.permutation(labeled[graph.labels[labeled] == c])
                if members.size < NC_TRAIN_PER_CLASS:
                    raise ValueError(
                        f"class {int(c)} has {members.size} nodes, fewer than "
                        f"{NC_TRAIN_PER_CLASS} requested training nodes"
                    )
                train.extend(int(i) for i in members[:NC_TRAIN_PER_CLASS])
            rest = rng.permutation(np.setdiff1d(labeled, np.array(train, dtype=np.int64)))
            val = rest[:NC_VAL_COUNT]
            test = rest[NC_VAL_COUNT : NC_VAL_COUNT + NC_TEST_COUNT]
            train_arr = np.array(sorted(train), dtype=np.int64)
        else:
            order = rng.permutation(labeled)
            n_tr = int(0.3 * labeled.size)
            n_val = int(0.1 * labeled.size)
            train_arr = np.sort(order[:n_tr])
            val = order[n_tr : n_tr + n_val]
            test = order[n_tr + n_val :]
        return Splits(
            task="nc",
            train_nodes=train_arr,
            val_nodes=np.sort(val),
            test_nodes=np.sort(test),
        )

    raise ValueError(f"unknown task {task!r} (use 'lp' or 'nc')")


# ---------------------------------------------------------------------------
# All-pairs shortest paths.
# ---------------------------------------------------------------------------


def _bfs_all_py(indptr: np.ndarray, indices: np.ndarray, n: int) -> np.ndarray:
    dist = np.full((n, n), -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        row = dist[s]
        row[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            du = row[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if row[v] < 0:
                    row[v] = du + 1
                    queue[tail] = v
                    tail += 1
    return dist


if USE_NUMBA:
    import numba

    _bfs_all = numba.njit("int64[:,::1](int64[::1], int64[::1], int64)", cache=True)(_bfs_all_py)
else:
    _bfs_all = None


def _bfs_all_numpy(graph: Graph) -> np.ndarray:
    """Level-synchronous multi-source BFS with boolean matrix products."""
    n = graph.n
    adj = np.zeros((n, n), dtype=bool)
    for u in range(n):
        adj[u, graph.neighbors(u)] = True
    dist = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    visited = np.eye(n, dtype=bool)
    frontier = visited.copy()
    d = 0
    while frontier.any():
        d += 1
        frontier = (frontier @ adj) & ~visited
        dist[frontier] = d
        visited |= frontier
    return dist


def all_pairs_distances(graph: Graph) -> np.ndarray:
    """BFS from every node; (n, n) float matrix, unreachable pairs are inf."""
    if USE_NUMBA:
        raw = _bfs_all(graph.indptr, graph.indices, graph.n)
    else:
        raw = _bfs_all_numpy(graph)
    out = raw.astype(np.float64)
    out[raw < 0] = np.inf
    return out


# ---------------------------------------------------------------------------
# Gromov four-point hyperbolicity.
# ---------------------------------------------------------------------------

EXACT_QUADRUPLE_CAP = 30  # default n cap for exact O(n^4) enumeration


def delta_quadruple(d: np.ndarray, v1: int, v2: int, v3: int, v4: int) -> float:
    """Four-point delta of one quadruple: (largest - middle pairing sum) / 2."""
    nodes = (v1, v2, v3, v4)
    if len(set(nodes)) != 4:
        raise ValueError(f"quadruple nodes must be distinct, got {nodes}")
    s1 = d[v1, v2] + d[v3, v4]
    s2 = d[v1, v3] + d[v2, v4]
    s3 = d[v1, v4] + d[v2, v3]
    if not (np.isfinite(s1) and np.isfinite(s2) and np.isfinite(s3)):
        raise ValueError(f"quadruple {nodes} has an unreachable pair")
    lo, mid, hi = sorted((s1, s2, s3))
    return (hi - mid) / 2.0


def _score_quadruples(d: np.ndarray, quads: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized deltas for (m, 4) index rows; returns (deltas, finite mask)."""
    i, j, k, l = quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]
    sums = np.stack([d[i, j] + d[k, l], d[i, k] + d[j, l], d[i, l] + d[j, k]])
    finite = np.all(np.isfinite(sums), axis=0)
    sums = np.sort(sums, axis=0)
    deltas = (sums[2] - sums[1]) / 2.0
    return deltas, finite


def _exact_enum_py(d: np.ndarray, n: int) -> tuple[float, float, int, int]:
    total = 0.0
    worst = 0.0
    counted = 0
    skipped = 0
    for i in range(n - 3):
        for j in range(i + 1, n - 2):
            dij = d[i, j]
            for k in range(j + 1, n - 1):
                dik = d[i, k]
                djk = d[j, k]
                for l in range(k + 1, n):
                    s1 = dij + d[k, l]
                    s2 = dik + d[j, l]
                    s3 = d[i, l] + djk
                    if not (np.isfinite(s1) and np.isfinite(s2) and np.isfinite(s3)):
                        skipped += 1
                        continue
                    hi = max(s1, s2, s3)
                    lo = min(s1, s2, s3)
                    mid = s1 + s2 + s3 - hi - lo
                    delta = (hi - mid) / 2.0
                    total += delta
                    if delta > worst:
                        worst = delta
                    counted += 1
    return total, worst, counted, skipped


if USE_NUMBA:
    _exact_enum = numba.njit(
        "Tuple((float64, float64, int64, int64))(float64[:,::1], int64)", cache=True
    )(_exact_enum_py)


def _exact_enum_numpy(d: np.ndarray, n: int) -> tuple[float, float, int, int]:
    quads = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), 4)),
        dtype=np.int64,
    ).reshape(-1, 4)
    deltas, finite = _score_quadruples(d, quads)
    counted = int(np.sum(finite))
    skipped = quads.shape[0] - counted
    kept = deltas[finite]
    worst = float(kept.max()) if counted else 0.0
    return float(kept.sum()), worst, counted, skipped


@dataclass(frozen=True)
class HyperbolicityResult:
    delta_avg: float
    delta_worst: float
    mode: str
    samples: int
    skipped: int

    def as_dict(self) -> dict:
        return {
            "delta_avg": self.delta_avg,
            "delta_worst": self.delta_worst,
            "mode": self.mode,
            "samples": self.samples,
            "skipped": self.skipped,
        }


def delta_avg(
    graph: Graph,
    mode: str = "exact",
    samples: int = 10_000,
    seed: int = 0,
    cap: int = EXACT_QUADRUPLE_CAP,
    distances: Optional[np.ndarray] = None,
) -> HyperbolicityResult:
    """Average (and worst) four-point delta over node quadruples.

    mode="exact" enumerates all C(n,4) quadruples and requires n <= cap;
    mode="sampled" averages over ``samples`` uniform random quadruples of
    distinct nodes.  Quadruples containing an unreachable pair are skipped
    and reported, not zero-filled.
    """
    n = graph.n
    if n < 4:
        raise UndefinedMetricError(f"hyperbolicity needs at least 4 nodes, graph has {n}")
    d = all_pairs_distances(graph) if distances is None else distances
    if mode == "exact":
        if n > cap:
            raise ValueError(f"exact mode is O(n^4); n={n} exceeds cap={cap} (use sampled)")
        if USE_NUMBA:
            total, worst, counted, skipped = _exact_enum(d, n)
        else:
            total, worst, counted, skipped = _exact_enum_numpy(d, n)
        if counted == 0:
            raise UndefinedMetricError("all quadruples contain unreachable pairs")
        return HyperbolicityResult(total / counted, worst, "exact", counted, skipped)
    if mode == "sampled":
        rng = np.random.default_rng([int(seed), 303])
        quads = np.empty((samples, 4), dtype=np.int64)
        for row in range(samples):
            quads[row] = rng.choice(n, size=4, replace=False)
        deltas, finite = _score_quadruples(d, quads)
        counted = int(np.sum(finite))
        if counted == 0:
            raise UndefinedMetricError("all sampled quadruples contain unreachable pairs")
        kept = deltas[finite]
        return HyperbolicityResult(
            float(kept.mean()), float(kept.max()), "sampled", counted, samples - counted
        )
    raise ValueError(f"unknown mode {mode!r} (use 'exact' or 'sampled')")


# ---------------------------------------------------------------------------
# Average distortion.
# ---------------------------------------------------------------------------


def average_distortion_from_matrix(d_embed: np.ndarray, d_graph: np.ndarray) -> float:
    """Distortion from precomputed distance matrices (or flat pair arrays).

    Both distance sets are normalized by their mean over the counted pairs;
    the score is mean((ratio^2 - 1)^2).  Pairs with i = j or unreachable
    graph distance are excluded from both the averages and the sum.
    """
    d_embed = np.asarray(d_embed, dtype=np.float64)
    d_graph = np.asarray(d_graph, dtype=np.float64)
    if d_embed.shape != d_graph.shape:
        raise ValueError("distance arrays must have matching shapes")
    if d_embed.ndim == 2:
        iu = np.triu_indices(d_embed.shape[0], k=1)
        d_embed = d_embed[iu]
        d_graph = d_graph[iu]
    mask = np.isfinite(d_graph) & (d_graph > 0)
    if not np.any(mask):
        raise UndefinedMetricError("no finite node pairs to measure distortion on")
    de = d_embed[mask]
    dg = d_graph[mask]
    ratio = (de / de.mean()) / (dg / dg.mean())
    return float(np.mean((ratio * ratio - 1.0) ** 2))


def average_distortion(embeddings: Sequence[HyperPoint], d_graph: np.ndarray) -> float:
    """Distortion of hyperboloid embeddings against graph distances."""
    beta = embeddings[0].beta
    coords = np.stack([p.coords for p in embeddings])
    return average_distortion_from_matrix(_distance_matrix(coords, beta), d_graph)


# ---------------------------------------------------------------------------
# Synthetic dataset generators.
# ---------------------------------------------------------------------------


def generate_tree(
    depth: int,
    branching: int = 2,
    feature_mode: str = "path",
    noise: float = 0.1,
    seed: int = 0,
) -> Graph:
    """Complete branching^depth tree with labels and features.

    Labels are the top-level subtree id (the root gets 0).  Feature modes:
    "onehot" is the identity, "label" is a noisy label indicator, and
    "path" encodes the branch choices from the root as signed coordinates
    plus Gaussian noise (so ancestry, not just the top split, is visible).
    """
    if depth < 1 or branching < 2:
        raise ValueError("need depth >= 1 and branching >= 2")
    n = (branching ** (depth + 1) - 1) // (branching - 1)
    edges = []
    for i in range(n):
        for c in range(branching):
            child = branching * i + 1 + c
            if child < n:
                edges.append((i, child))

    parents = np.full(n, -1, dtype=np.int64)
    level = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        parents[i] = (i - 1) // branching
        level[i] = level[parents[i]] + 1

    labels = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        a = i
        while parents[a] != 0:
            a = parents[a]
        labels[i] = a - 1

    rng = np.random.default_rng([int(seed), 404])
    if feature_mode == "onehot":
        features = np.eye(n)
    elif feature_mode == "label":
        features = np.eye(branching)[labels] + noise * rng.standard_normal((n, branching))
    elif feature_mode == "path":
        features = np.zeros((n, depth))
        for i in range(1, n):
            choice = (i - 1) % branching
            signed = 2.0 * choice / (branching - 1) - 1.0
            features[i] = features[parents[i]]
            features[i, level[i] - 1] = signed
        features += noise * rng.standard_normal(features.shape)
    else:
        raise ValueError(f"unknown feature_mode {feature_mode!r}")
    return Graph.from_edges(n, edges, features, labels)


def generate_blocks(
    n: int,
    p_in: float,
    p_out: float,
    noise: float = 0.1,
    seed: int = 0,
) -> Graph:
    """Two-block stochastic block model with noisy block-indicator features."""
    if n < 4:
        raise ValueError("need at least 4 nodes")
    if not (0.0 <= p_out <= p_in <= 1.0):
        raise ValueError("need 0 <= p_out <= p_in <= 1")
    rng = np.random.default_rng([int(seed), 505])
    labels = np.zeros(n, dtype=np.int64)
    labels[n // 2 :] = 1
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            p = p_in if labels[u] == labels[v] else p_out
            if rng.random() < p:
                edges.append((u, v))
    features = np.eye(2)[labels] + noise * rng.standard_normal((n, 2))
    return Graph.from_edges(n, edges, features, labels)
