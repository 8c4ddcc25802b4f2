import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcbr.graphs import (Graph, LoadError, SbmConfig, generate_sbm,
                         imbalance_ratio, largest_remainder_sizes, load_graph,
                         make_split, normalized_adjacency, pagerank,
                         save_edgelist, save_json_bundle)


def triangle_graph():
    features = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return Graph.from_edges([(0, 1), (1, 2), (2, 0)], features,
                            [0, 1, 0], 2)


def path_graph(n, m=2):
    edges = [(i, i + 1) for i in range(n - 1)]
    labels = [i % m for i in range(n)]
    return Graph.from_edges(edges, np.eye(n), labels, m)


# ---------------------------------------------------------------- loading

def test_json_roundtrip_triangle(tmp_path):
    g = triangle_graph()
    path = tmp_path / "tri.json"
    save_json_bundle(g, path)
    g2 = load_graph(path)
    assert g2.num_nodes == 3
    assert g2.num_classes == 2
    assert np.array_equal(g2.labels, g.labels)
    assert np.array_equal(g2.features, g.features)
    assert np.array_equal(g2.adjacency.toarray(), g.adjacency.toarray())


def test_edgelist_roundtrip_triangle(tmp_path):
    g = triangle_graph()
    save_edgelist(g, tmp_path / "tri.edges")
    g2 = load_graph(tmp_path / "tri.edges", "edgelist")
    assert g2.num_nodes == 3
    assert g2.num_classes == 2
    assert np.array_equal(g2.adjacency.toarray(), g.adjacency.toarray())
    assert np.allclose(g2.features, g.features)


def test_load_symmetrizes_and_dedupes(tmp_path):
    bundle = {"num_nodes": 3, "edges": [[0, 1], [1, 0], [0, 1], [1, 2]],
              "features": [[0.0], [1.0], [2.0]], "labels": [0, 1, 1],
              "num_classes": 2}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(bundle))
    g = load_graph(path)
    dense = g.adjacency.toarray()
    assert np.array_equal(dense, dense.T)
    assert dense[0, 1] == 1.0 and dense[1, 0] == 1.0
    assert dense.sum() == 4  # two undirected edges


def test_node_id_out_of_range(tmp_path):
    bundle = {"num_nodes": 3, "edges": [[0, 5]],
              "features": [[0.0], [0.0], [0.0]], "labels": [0, 1, 0],
              "num_classes": 2}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(bundle))
    with pytest.raises(LoadError, match="node id out of range"):
        load_graph(path)


def test_label_out_of_range(tmp_path):
    bundle = {"num_nodes": 2, "edges": [[0, 1]], "features": [[0.0], [0.0]],
              "labels": [0, 7], "num_classes": 2}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(bundle))
    with pytest.raises(LoadError, match="label"):
        load_graph(path)


def test_non_numeric_feature_names_line(tmp_path):
    (tmp_path / "g.edges").write_text("0 1\n")
    (tmp_path / "g.csv").write_text("f0,label\n0.5,0\nbogus,1\n")
    with pytest.raises(LoadError, match="line 3"):
        load_graph(tmp_path / "g.edges", "edgelist")


def test_missing_file():
    with pytest.raises(LoadError, match="missing file"):
        load_graph("/nonexistent/g.json")


def test_cora_scale_bundle(tmp_path):
    # format check at citation-graph scale: 2708 nodes, 5278 undirected
    # edges, 1433 binary features, 7 classes
    rng = np.random.default_rng(0)
    n, e, d, m = 2708, 5278, 1433, 7
    edges = set()
    while len(edges) < e:
        u, v = rng.integers(0, n, 2)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    features = (rng.random((n, d)) < 0.01).astype(float)
    labels = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
    bundle = {"num_nodes": n, "edges": [list(map(int, uv)) for uv in edges],
              "features": features.tolist(),
              "labels": labels.tolist(), "num_classes": m}
    path = tmp_path / "big.json"
    path.write_text(json.dumps(bundle))
    g = load_graph(path)
    assert g.num_nodes == 2708
    assert g.undirected_edges().shape[0] == 5278
    assert g.feature_dim == 1433
    assert g.num_classes == 7


def test_every_class_must_appear():
    with pytest.raises(ValueError, match="class 2 has no nodes"):
        Graph.from_edges([(0, 1)], np.zeros((2, 1)), [0, 1], 3)


# ---------------------------------------------------------------- SBM

def test_sbm_balanced_sizes():
    g = generate_sbm(SbmConfig(10, (0.5, 0.5), 1.0, 0.0, 4, 1.0), seed=0)
    assert np.array_equal(np.bincount(g.labels), [5, 5])


def test_sbm_skewed_sizes_exact():
    cfg = SbmConfig(1000, (0.6, 0.2, 0.1, 0.06, 0.04), 0.05, 0.01, 8, 1.0)
    g = generate_sbm(cfg, seed=1)
    assert np.array_equal(np.bincount(g.labels), [600, 200, 100, 60, 40])


def test_largest_remainder_tie_break():
    # 10 * 1/3 = 3.33 each; one leftover goes to the lowest class index
    assert np.array_equal(
        largest_remainder_sizes((1 / 3, 1 / 3, 1 / 3), 10), [4, 3, 3])


def test_sbm_intra_density_monte_carlo():
    # realized intra-class density should track the Bernoulli probability
    cfg = SbmConfig(1000, (0.5, 0.5), 0.1, 0.01, 4, 1.0)
    densities = []
    for seed in range(10):
        g = generate_sbm(cfg, seed)
        edges = g.undirected_edges()
        same = g.labels[edges[:, 0]] == g.labels[edges[:, 1]]
        n_pairs = 2 * (500 * 499 / 2)
        densities.append(same.sum() / n_pairs)
    mean = np.mean(densities)
    assert abs(mean - 0.1) < 0.02  # +-20% of 0.1


def test_sbm_deterministic():
    cfg = SbmConfig(300, (0.7, 0.3), 0.05, 0.01, 8, 1.5)
    a, b = generate_sbm(cfg, 42), generate_sbm(cfg, 42)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.adjacency.indptr, b.adjacency.indptr)
    assert np.array_equal(a.adjacency.indices, b.adjacency.indices)
    c = generate_sbm(cfg, 43)
    assert not np.array_equal(a.features, c.features)


def test_sbm_too_few_nodes():
    with pytest.raises(ValueError, match="< 3 classes"):
        generate_sbm(SbmConfig(2, (0.4, 0.3, 0.3), 0.1, 0.0, 4, 1.0), 0)


def test_sbm_config_validation():
    with pytest.raises(ValueError, match="sum"):
        SbmConfig(10, (0.5, 0.6), 0.1, 0.0, 4, 1.0)
    with pytest.raises(ValueError, match="inter_edge_prob"):
        SbmConfig(10, (0.5, 0.5), 0.1, 0.5, 4, 1.0)


# ------------------------------------------------- normalized adjacency

def test_norm_adj_isolated_node():
    g = Graph.from_edges([(0, 1)], np.zeros((3, 1)), [0, 1, 0], 2)
    dense = normalized_adjacency(g).toarray()
    assert dense[2, 2] == 1.0
    assert dense[2, :2].sum() == 0.0


def test_norm_adj_single_edge():
    g = Graph.from_edges([(0, 1)], np.zeros((2, 1)), [0, 1], 2)
    dense = normalized_adjacency(g).toarray()
    assert np.allclose(dense, 0.5)


def test_norm_adj_path_entry():
    g = path_graph(3)
    dense = normalized_adjacency(g).toarray()
    # degrees with self-loops: (2, 3, 2)
    assert dense[0, 1] == pytest.approx(1.0 / np.sqrt(2 * 3), abs=1e-12)
    assert dense[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert dense[1, 1] == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_norm_adj_pure_and_symmetric():
    g = generate_sbm(SbmConfig(80, (0.5, 0.5), 0.2, 0.05, 4, 1.0), 5)
    a = normalized_adjacency(g)
    b = normalized_adjacency(g)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(a.indices, b.indices)
    dense = a.toarray()
    assert np.array_equal(dense, dense.T)


def test_norm_adj_pattern_is_a_tilde():
    g = path_graph(4)
    dense = normalized_adjacency(g).toarray()
    expected_pattern = (g.adjacency.toarray() + np.eye(4)) > 0
    assert np.array_equal(dense > 0, expected_pattern)


# ---------------------------------------------------------------- pagerank

def pagerank_oracle(adj_dense, damping, iters=20000, tol=1e-14):
    """Straight-line dense power iteration of the centrality recurrence."""
    n = adj_dense.shape[0]
    deg = adj_dense.sum(axis=1)
    ranks = np.full(n, 1.0 / n)
    for _ in range(iters):
        new = np.full(n, (1 - damping) / n)
        dangling = ranks[deg == 0].sum()
        new += damping * dangling / n
        for v in range(n):
            acc = 0.0
            for u in range(n):
                if adj_dense[v, u] and deg[u] > 0:
                    acc += ranks[u] / deg[u]
            new[v] += damping * acc
        if np.abs(new - ranks).sum() < tol:
            return new
        ranks = new
    return ranks


def test_pagerank_two_nodes():
    g = Graph.from_edges([(0, 1)], np.zeros((2, 1)), [0, 1], 2)
    ranks, converged = pagerank(g)
    assert converged
    assert np.allclose(ranks, [0.5, 0.5], atol=1e-9)


def test_pagerank_sums_to_one():
    g = generate_sbm(SbmConfig(120, (0.6, 0.4), 0.1, 0.02, 4, 1.0), 3)
    ranks, _ = pagerank(g)
    assert ranks.sum() == pytest.approx(1.0, abs=1e-9)
    assert (ranks >= 0).all()


def test_pagerank_path_matches_oracle():
    g = path_graph(3)
    ranks, converged = pagerank(g, tol=1e-14, max_iter=1000)
    assert converged
    expected = pagerank_oracle(g.adjacency.toarray(), 0.85)
    assert np.abs(ranks - expected).max() < 1e-10
    # fixed point of the recurrence at damping 0.85
    assert ranks[1] == pytest.approx(0.486486, abs=1e-5)
    assert ranks[0] == pytest.approx(0.256757, abs=1e-5)


def test_pagerank_random_graph_matches_oracle():
    g = generate_sbm(SbmConfig(25, (0.5, 0.5), 0.3, 0.1, 4, 1.0), 9)
    ranks, _ = pagerank(g, tol=1e-14, max_iter=2000)
    expected = pagerank_oracle(g.adjacency.toarray(), 0.85)
    assert np.abs(ranks - expected).max() < 1e-10


def test_pagerank_vertex_transitive_cycle():
    n = 12
    edges = [(i, (i + 1) % n) for i in range(n)]
    g = Graph.from_edges(edges, np.eye(n), [i % 2 for i in range(n)], 2)
    ranks, _ = pagerank(g)
    assert np.allclose(ranks, 1.0 / n, atol=1e-9)


def test_pagerank_dangling_node():
    # node 2 is isolated; its mass spreads uniformly
    g = Graph.from_edges([(0, 1)], np.zeros((3, 1)), [0, 1, 0], 2)
    ranks, converged = pagerank(g, tol=1e-14, max_iter=2000)
    assert converged
    expected = pagerank_oracle(g.adjacency.toarray(), 0.85)
    assert np.abs(ranks - expected).max() < 1e-10
    assert ranks.sum() == pytest.approx(1.0, abs=1e-9)


def test_pagerank_nonconvergence_flag():
    g = generate_sbm(SbmConfig(100, (0.5, 0.5), 0.2, 0.05, 4, 1.0), 1)
    _, converged = pagerank(g, tol=1e-15, max_iter=1)
    assert not converged


# ---------------------------------------------------------------- splits

def test_make_split_counts_and_disjoint():
    g = generate_sbm(SbmConfig(10, (0.5, 0.5), 0.5, 0.2, 4, 1.0), 0)
    split = make_split(g, seed=0, valid_size=2, test_size=3)
    assert split.train_idx.size == 5
    all_idx = np.concatenate([split.train_idx, split.valid_idx, split.test_idx])
    assert len(set(all_idx.tolist())) == 10


def test_make_split_deterministic():
    g = generate_sbm(SbmConfig(50, (0.5, 0.5), 0.2, 0.1, 4, 1.0), 0)
    a = make_split(g, 7, 10, 10)
    b = make_split(g, 7, 10, 10)
    assert np.array_equal(a.train_idx, b.train_idx)
    assert np.array_equal(a.test_idx, b.test_idx)


def test_make_split_citation_scale_pool():
    rng = np.random.default_rng(0)
    n = 2708
    labels = np.concatenate([np.arange(7), rng.integers(0, 7, n - 7)])
    g = Graph.from_edges([(0, 1)], np.zeros((n, 1)), labels, 7)
    split = make_split(g, 3, valid_size=500, test_size=1000)
    assert split.train_idx.size == 1208


def test_make_split_too_large():
    g = generate_sbm(SbmConfig(10, (0.5, 0.5), 0.5, 0.2, 4, 1.0), 0)
    with pytest.raises(ValueError, match="no training nodes"):
        make_split(g, 0, 5, 5)


# ---------------------------------------------------------- imbalance ratio

def test_imbalance_ratio_values():
    assert imbalance_ratio([5, 5, 5]) == 1.0
    assert imbalance_ratio([1, 4]) == 0.25
    assert imbalance_ratio([3, 0, 2]) == 0.0
    assert imbalance_ratio([0, 0]) == 1.0


def test_imbalance_ratio_cora_class_counts():
    # full-label class counts of the Cora citation graph
    assert round(imbalance_ratio([818, 426, 418, 351, 298, 217, 180]), 2) == 0.22


def test_imbalance_ratio_empty():
    with pytest.raises(ValueError, match="empty"):
        imbalance_ratio([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=1000), min_size=1,
                max_size=12),
       st.integers(min_value=1, max_value=50))
def test_imbalance_ratio_scale_invariant(counts, k):
    scaled = [k * c for c in counts]
    assert imbalance_ratio(scaled) == imbalance_ratio(counts)
