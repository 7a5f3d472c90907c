import math

import numpy as np
import pytest

from gravelet.graph import (
    DisconnectedGraphError,
    GraphError,
    build_graph,
    component_labels,
    induced_subgraph,
    is_connected,
    khop_neighborhood,
    laplacian,
    largest_component,
    relabel,
    require_connected,
    to_networkx,
)

from conftest import cycle, path, random_connected


def test_path_graph_from_labels():
    g = build_graph([("a", "b"), ("b", "c")])
    assert g.n == 3
    assert g.node_labels == ("a", "b", "c")
    assert g.degrees.tolist() == [1, 2, 1]


def test_symmetric_duplicate_is_one_edge():
    g = build_graph([("a", "b"), ("b", "a")])
    assert g.n == 2 and g.num_edges == 1


def test_equal_weight_duplicate_accepted():
    g = build_graph([("a", "b", 2.0), ("b", "a", 2.0)])
    assert g.num_edges == 1


@pytest.mark.parametrize("edges", [
    [("a", "a")],
    [("a", "b", 0.0)],
    [("a", "b", -1.0)],
    [("a", "b", math.inf)],
    [("a", "b", math.nan)],
    [("a", "b", 1.0), ("b", "a", 2.0)],
    [("", "b")],
])
def test_rejects_bad_edges(edges):
    with pytest.raises(GraphError):
        build_graph(edges)


def test_adjacency_invariants():
    g = random_connected(3)
    A = g.adjacency.toarray()
    assert np.array_equal(A, A.T)
    assert np.allclose(A.sum(axis=1), g.degrees)
    assert np.all(np.diag(A) == 0)


def test_laplacian_k2():
    assert laplacian(build_graph([("a", "b")])).matrix.toarray().tolist() == [[1, -1], [-1, 1]]


def test_laplacian_weighted_k2():
    L = laplacian(build_graph([("a", "b", 2.0)])).matrix.toarray()
    assert L.tolist() == [[2, -2], [-2, 2]]


def test_laplacian_path():
    L = laplacian(path(3)).matrix.toarray()
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    assert np.array_equal(L, np.diag([1, 2, 1]) - A)


def test_laplacian_rows_sum_to_zero_and_psd():
    rng = np.random.default_rng(0)
    for seed in range(10):
        g = random_connected(seed)
        L = laplacian(g).matrix
        assert np.abs(L @ np.ones(g.n)).max() <= 1e-12 * g.degrees.max()
        for _ in range(5):
            x = rng.standard_normal(g.n)
            assert x @ (L @ x) >= -1e-10


def test_khop_examples():
    g = path(3)
    assert khop_neighborhood(g, 0, 1) == {0, 1}
    assert khop_neighborhood(g, 1, 0) == {1}
    assert khop_neighborhood(cycle(6), 2, 3) == set(range(6))
    with pytest.raises(IndexError):
        khop_neighborhood(g, 5, 1)


def test_khop_monotone():
    g = random_connected(7)
    prev = set()
    for K in range(g.n):
        cur = khop_neighborhood(g, 0, K)
        assert prev <= cur
        prev = cur
    assert prev == set(range(g.n))


def test_connectivity():
    assert is_connected(build_graph([("a", "b")]))
    two = build_graph([("a", "b"), ("c", "d")])
    assert not is_connected(two)
    assert is_connected(build_graph([], nodes=["x"]))
    with pytest.raises(DisconnectedGraphError, match="2, 2"):
        require_connected(two)


def test_largest_component():
    g = build_graph([("a", "b"), ("b", "c"), ("x", "y")])
    lc = largest_component(g)
    assert lc.node_labels == ("a", "b", "c")
    assert lc.num_edges == 2
    assert len(set(component_labels(g))) == 2


def test_induced_and_relabel():
    g = cycle(5)
    sub = induced_subgraph(g, [0, 1, 2])
    assert sub.num_edges == 2
    r = relabel(g, [4, 3, 2, 1, 0])
    assert r.node_labels == ("4", "3", "2", "1", "0")
    assert r.num_edges == 5


def test_content_hash_depends_on_edges():
    assert cycle(5).content_hash() == cycle(5).content_hash()
    assert cycle(5).content_hash() != path(5).content_hash()


def test_to_networkx_roundtrip():
    g = random_connected(4)
    G = to_networkx(g)
    assert G.number_of_nodes() == g.n
    assert G.number_of_edges() == g.num_edges
