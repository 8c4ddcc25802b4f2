"""Graph representation, I/O, synthetic generation and structural metrics.

Graphs are undirected, unweighted and immutable once built: a CSR adjacency
(symmetric, deduplicated, no self-loops), a float64 feature matrix, integer
class labels and the class count. Two on-disk formats are supported, an
edge-list text file paired with a features/labels CSV, and a self-describing
JSON bundle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels


class LoadError(ValueError):
    """Raised when a graph file is missing, malformed or inconsistent."""


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Minimal CSR matrix; matmul is dispatched to the active kernel backend."""

    shape: tuple[int, int]
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_spmm", kernels.make_spmm(
            self.indptr, self.indices, self.data, self.shape))

    def matmul(self, dense: np.ndarray) -> np.ndarray:
        """A @ dense for a 2-D float64 dense matrix."""
        return self._spmm(dense)

    def __matmul__(self, dense):
        if dense.ndim == 1:
            return self._spmm(dense[:, None])[:, 0]
        return self._spmm(dense)

    def toarray(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for r in range(self.shape[0]):
            for k in range(self.indptr[r], self.indptr[r + 1]):
                out[r, self.indices[k]] += self.data[k]
        return out

    @staticmethod
    def from_coo(rows, cols, vals, shape) -> "CsrMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return CsrMatrix(shape, indptr.astype(np.int32),
                         cols.astype(np.int32), vals)


class Graph:
    """Undirected attributed graph with ground-truth labels.

    Invariants enforced at construction: symmetric deduplicated adjacency
    without self-loops, labels in [0, num_classes) with every class present,
    finite features with one row per node.
    """

    def __init__(self, adjacency: CsrMatrix, features: np.ndarray,
                 labels: np.ndarray, num_classes: int):
        features = np.ascontiguousarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        n = adjacency.shape[0]
        if adjacency.shape != (n, n):
            raise ValueError("adjacency must be square")
        if features.ndim != 2 or features.shape[0] != n:
            raise ValueError(
                f"feature matrix has {features.shape[0]} rows for {n} nodes")
        if not np.all(np.isfinite(features)):
            raise ValueError("features contain non-finite values")
        if labels.shape != (n,):
            raise ValueError("labels must be one class index per node")
        if num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= num_classes:
            raise ValueError(f"label outside [0, {num_classes})")
        present = np.bincount(labels, minlength=num_classes)
        if np.any(present == 0):
            missing = int(np.flatnonzero(present == 0)[0])
            raise ValueError(f"class {missing} has no nodes")
        self.adjacency = adjacency
        self.features = features
        self.labels = labels
        self.num_classes = int(num_classes)

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr).astype(np.int64)

    @cached_property
    def norm_adj(self) -> CsrMatrix:
        return normalized_adjacency(self)

    @cached_property
    def centrality(self) -> np.ndarray:
        ranks, _ = pagerank(self)
        return ranks

    @classmethod
    def from_edges(cls, edges, features, labels, num_classes) -> "Graph":
        """Build from a (possibly directed / duplicated) edge list.

        Edges are symmetrized, deduplicated and self-loops dropped.
        """
        n = np.asarray(features).shape[0]
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            bad = edges[(edges < 0).any(axis=1) | (edges >= n).any(axis=1)][0]
            raise LoadError(f"node id out of range: edge ({bad[0]}, {bad[1]}) "
                            f"with {n} nodes")
        edges = edges[edges[:, 0] != edges[:, 1]]
        both = np.vstack([edges, edges[:, ::-1]])
        keys = np.unique(both[:, 0] * n + both[:, 1])
        rows, cols = keys // n, keys % n
        adj = CsrMatrix.from_coo(rows, cols, np.ones(len(rows)), (n, n))
        return cls(adj, features, labels, num_classes)

    def undirected_edges(self) -> np.ndarray:
        """Each stored edge once, as (u, v) with u < v."""
        rows = np.repeat(np.arange(self.num_nodes), np.diff(self.adjacency.indptr))
        cols = self.adjacency.indices.astype(np.int64)
        keep = rows < cols
        return np.column_stack([rows[keep], cols[keep]])


@dataclass(frozen=True, eq=False)
class DataSplit:
    """Disjoint train/valid/test node index sets."""

    train_idx: np.ndarray
    valid_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        sets = [set(self.train_idx.tolist()), set(self.valid_idx.tolist()),
                set(self.test_idx.tolist())]
        if any(len(s) == 0 for s in sets):
            raise ValueError("every split set must be non-empty")
        if len(sets[0] | sets[1] | sets[2]) != sum(len(s) for s in sets):
            raise ValueError("split sets must be pairwise disjoint")


@dataclass(frozen=True)
class SbmConfig:
    """Stochastic block model with Gaussian class-separated features."""

    num_nodes: int
    class_proportions: tuple
    intra_edge_prob: float
    inter_edge_prob: float
    feature_dim: int
    feature_signal: float

    def __post_init__(self):
        props = tuple(float(p) for p in self.class_proportions)
        object.__setattr__(self, "class_proportions", props)
        if abs(sum(props) - 1.0) > 1e-9:
            raise ValueError(f"class proportions sum to {sum(props)}, not 1")
        if any(p < 0 for p in props):
            raise ValueError("class proportions must be non-negative")
        if not (0.0 <= self.inter_edge_prob <= self.intra_edge_prob <= 1.0):
            raise ValueError("need 0 <= inter_edge_prob <= intra_edge_prob <= 1")
        if self.num_nodes < 1 or self.feature_dim < 1:
            raise ValueError("num_nodes and feature_dim must be positive")


def largest_remainder_sizes(proportions, total: int) -> np.ndarray:
    """Round proportions to integer class sizes summing to total.

    Floors first, then hands leftover units to the largest remainders
    (ties broken by lowest class index).
    """
    props = np.asarray(proportions, dtype=np.float64)
    raw = props * total
    sizes = np.floor(raw).astype(np.int64)
    remainders = raw - sizes
    leftover = total - int(sizes.sum())
    if leftover > 0:
        order = np.lexsort((np.arange(len(props)), -remainders))
        sizes[order[:leftover]] += 1
    return sizes


def generate_sbm(config: SbmConfig, seed: int) -> Graph:
    """Sample an SBM graph; identical (config, seed) pairs are byte-identical.

    Nodes are laid out in contiguous class blocks. Features are unit-variance
    Gaussians with the class-c mean at feature_signal * e_c.
    """
    m = len(config.class_proportions)
    if config.num_nodes < m:
        raise ValueError(f"num_nodes={config.num_nodes} < {m} classes")
    if config.feature_dim < m:
        raise ValueError(
            f"feature_dim={config.feature_dim} < {m} classes; class means "
            "sit on distinct basis directions")
    sizes = largest_remainder_sizes(config.class_proportions, config.num_nodes)
    labels = np.repeat(np.arange(m), sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)])

    rng = np.random.default_rng(seed)
    rows, cols = [], []
    for ci in range(m):
        for cj in range(ci, m):
            ni, nj = sizes[ci], sizes[cj]
            if ni == 0 or nj == 0:
                continue
            if ci == cj:
                p = config.intra_edge_prob
                draw = rng.random((ni, ni))
                r, c = np.nonzero(np.triu(draw < p, k=1))
            else:
                p = config.inter_edge_prob
                draw = rng.random((ni, nj))
                r, c = np.nonzero(draw < p)
            rows.append(r + starts[ci])
            cols.append(c + starts[cj])
    edges = np.column_stack([np.concatenate(rows) if rows else np.array([], dtype=np.int64),
                             np.concatenate(cols) if cols else np.array([], dtype=np.int64)])

    features = rng.standard_normal((config.num_nodes, config.feature_dim))
    for c in range(m):
        features[starts[c]:starts[c + 1], c] += config.feature_signal
    return Graph.from_edges(edges, features, labels, m)


def normalized_adjacency(g: Graph) -> CsrMatrix:
    """Symmetrically normalized adjacency with self-loops.

    Entry (u, v) is 1/sqrt(d_u * d_v) with degrees counting the added
    self-loop, so an isolated node maps to a lone 1.0 on the diagonal.
    """
    n = g.num_nodes
    deg = g.degrees + 1.0
    rows = np.repeat(np.arange(n), np.diff(g.adjacency.indptr))
    cols = g.adjacency.indices.astype(np.int64)
    rows = np.concatenate([rows, np.arange(n)])
    cols = np.concatenate([cols, np.arange(n)])
    vals = 1.0 / np.sqrt(deg[rows] * deg[cols])
    return CsrMatrix.from_coo(rows, cols, vals, (n, n))


def pagerank(g: Graph, damping: float = 0.85, tol: float = 1e-8,
             max_iter: int = 100) -> tuple[np.ndarray, bool]:
    """Power-iteration PageRank over the undirected adjacency.

    Dangling nodes (degree 0) redistribute their mass uniformly. Returns the
    score vector and a convergence flag; on non-convergence the best (last)
    iterate is returned.

    Args:
        damping: walk-continuation probability in (0, 1).
        tol: L1 convergence threshold between successive iterates.
    """
    if not (0.0 < damping < 1.0):
        raise ValueError("damping must be in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = g.num_nodes
    deg = g.degrees.astype(np.float64)
    dangling = deg == 0
    inv_deg = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, deg))
    ranks = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    for _ in range(max_iter):
        spread = g.adjacency @ (ranks * inv_deg)
        lost = ranks[dangling].sum() / n
        new = damping * (spread + lost) + base
        if np.abs(new - ranks).sum() < tol:
            return new, True
        ranks = new
    return ranks, False


def make_split(g: Graph, seed: int, valid_size: int, test_size: int) -> DataSplit:
    """Uniform random disjoint valid/test sample; the remainder is train."""
    n = g.num_nodes
    if valid_size < 1 or test_size < 1:
        raise ValueError("valid_size and test_size must be >= 1")
    if valid_size + test_size >= n:
        raise ValueError(
            f"valid_size + test_size = {valid_size + test_size} leaves no "
            f"training nodes out of {n}")
    perm = np.random.default_rng(seed).permutation(n)
    test = np.sort(perm[:test_size])
    valid = np.sort(perm[test_size:test_size + valid_size])
    train = np.sort(perm[test_size + valid_size:])
    return DataSplit(train, valid, test)


def imbalance_ratio(class_counts) -> float:
    """min/max of the class counts; 1.0 when all equal (or all zero)."""
    counts = np.asarray(class_counts, dtype=np.int64)
    if counts.size == 0:
        raise ValueError("class_counts is empty")
    lo, hi = int(counts.min()), int(counts.max())
    if hi == 0:
        return 1.0
    return lo / hi


def save_json_bundle(g: Graph, path) -> None:
    bundle = {
        "num_nodes": g.num_nodes,
        "edges": g.undirected_edges().tolist(),
        "features": g.features.tolist(),
        "labels": g.labels.tolist(),
        "num_classes": g.num_classes,
    }
    Path(path).write_text(json.dumps(bundle))


def save_edgelist(g: Graph, edge_path, csv_path=None) -> None:
    """Write the two-file format: edge list plus features/labels CSV."""
    edge_path = Path(edge_path)
    csv_path = Path(csv_path) if csv_path else edge_path.with_suffix(".csv")
    lines = [f"{u} {v}" for u, v in g.undirected_edges()]
    edge_path.write_text("\n".join(lines) + ("\n" if lines else ""))
    header = ",".join([f"f{i}" for i in range(g.feature_dim)] + ["label"])
    rows = [header]
    for i in range(g.num_nodes):
        feats = ",".join(repr(float(x)) for x in g.features[i])
        rows.append(f"{feats},{g.labels[i]}")
    csv_path.write_text("\n".join(rows) + "\n")


def _load_json_bundle(path: Path) -> Graph:
    try:
        bundle = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("num_nodes", "edges", "features", "labels", "num_classes"):
        if key not in bundle:
            raise LoadError(f"{path}: bundle missing key {key!r}")
    n = int(bundle["num_nodes"])
    features = np.asarray(bundle["features"], dtype=np.float64)
    labels = np.asarray(bundle["labels"], dtype=np.int64)
    m = int(bundle["num_classes"])
    if features.shape[0] != n or labels.shape[0] != n:
        raise LoadError(f"{path}: features/labels rows do not match num_nodes")
    if labels.size and (labels.min() < 0 or labels.max() >= m):
        bad = int(np.flatnonzero((labels < 0) | (labels >= m))[0])
        raise LoadError(f"{path}: label {labels[bad]} of node {bad} outside "
                        f"[0, {m})")
    try:
        return Graph.from_edges(bundle["edges"], features, labels, m)
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from exc


def _load_edgelist(edge_path: Path, csv_path: Path) -> Graph:
    if not csv_path.exists():
        raise LoadError(f"missing file: {csv_path}")
    features, labels = [], []
    with csv_path.open() as fh:
        header = fh.readline().strip()
        columns = header.split(",")
        if columns[-1] != "label":
            raise LoadError(f"{csv_path} line 1: last column must be 'label', "
                            f"got {columns[-1]!r}")
        d = len(columns) - 1
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != d + 1:
                raise LoadError(f"{csv_path} line {lineno}: expected "
                                f"{d + 1} columns, got {len(parts)}")
            try:
                features.append([float(x) for x in parts[:-1]])
            except ValueError:
                raise LoadError(
                    f"{csv_path} line {lineno}: non-numeric feature") from None
            try:
                labels.append(int(parts[-1]))
            except ValueError:
                raise LoadError(
                    f"{csv_path} line {lineno}: non-integer label") from None
    if not labels:
        raise LoadError(f"{csv_path}: no data rows")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0:
        raise LoadError(f"{csv_path}: negative label")
    m = int(labels.max()) + 1

    edges = []
    with edge_path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise LoadError(f"{edge_path} line {lineno}: expected two "
                                f"node ids, got {line!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise LoadError(
                    f"{edge_path} line {lineno}: non-integer node id") from None
    try:
        return Graph.from_edges(edges, np.asarray(features), labels, m)
    except ValueError as exc:
        raise LoadError(f"{edge_path}: {exc}") from exc


def load_graph(path, fmt: str = "auto", features_path=None) -> Graph:
    """Load a graph from disk.

    Formats: ``json`` (single bundle file) or ``edgelist`` (edge file plus a
    features/labels CSV, defaulting to the edge path with a .csv suffix).
    ``auto`` picks by file extension.
    """
    path = Path(path)
    if not path.exists():
        raise LoadError(f"missing file: {path}")
    if fmt == "auto":
        fmt = "json" if path.suffix == ".json" else "edgelist"
    if fmt == "json":
        return _load_json_bundle(path)
    if fmt == "edgelist":
        csv_path = Path(features_path) if features_path else path.with_suffix(".csv")
        return _load_edgelist(path, csv_path)
    raise ValueError(f"unknown graph format {fmt!r}")
