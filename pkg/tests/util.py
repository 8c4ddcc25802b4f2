"""Shared test helpers: finite differences and tiny random instances."""

import numpy as np

from gcbr.graphs import Graph


def finite_diff(f, arr, h=1e-6):
    """Central-difference gradient of scalar f w.r.t. every entry of arr."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = f()
        flat[i] = orig - h
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * h)
    return grad


def max_rel_err(analytic, numeric, floor=1e-8):
    """Largest relative error over coordinates that are not jointly tiny."""
    a = np.asarray(analytic).reshape(-1)
    n = np.asarray(numeric).reshape(-1)
    scale = np.maximum(np.abs(a), np.abs(n))
    mask = scale > floor
    if not mask.any():
        return 0.0
    return float((np.abs(a - n)[mask] / scale[mask]).max())


def random_small_graph(rng, n_nodes, n_classes=2, feature_dim=3,
                       edge_prob=0.4):
    """Connected-ish random undirected graph with all classes present."""
    edges = []
    for u in range(n_nodes):
        for v in range(u + 1, n_nodes):
            if rng.random() < edge_prob:
                edges.append((u, v))
    labels = np.concatenate([np.arange(n_classes),
                             rng.integers(0, n_classes,
                                          max(0, n_nodes - n_classes))])
    rng.shuffle(labels)
    features = rng.standard_normal((n_nodes, feature_dim))
    return Graph.from_edges(edges, features, labels, n_classes)


def dense_gcn_oracle(adj_dense, x, params, softmax_rows=False):
    """Straight-line dense re-evaluation of the two-layer propagation."""
    hidden = np.maximum(adj_dense @ x @ params.w0, 0.0)
    out = adj_dense @ hidden @ params.w1
    if softmax_rows:
        e = np.exp(out - out.max(axis=1, keepdims=True))
        out = e / e.sum(axis=1, keepdims=True)
    return hidden, out
