import math

import numpy as np
import pytest

from gravelet.embedding import (
    EmbeddingConfig,
    char_function,
    check_bounds,
    column_names,
    embed_all,
    nearest_neighbors,
    pairwise_distances,
    structural_distance,
)
from gravelet.graph import DisconnectedGraphError, build_graph, khop_neighborhood, relabel
from gravelet.spectral import WaveletColumn
from gravelet.synthgen import generate, make_barbell

from conftest import random_connected

K2 = build_graph([("a", "b")])


def test_sample_points():
    cfg = EmbeddingConfig(d=4, t_max=2.0)
    assert cfg.sample_points.tolist() == [0.5, 1.0, 1.5, 2.0]
    assert EmbeddingConfig().dim == 200
    with pytest.raises(ValueError):
        EmbeddingConfig(d=0)
    with pytest.raises(ValueError):
        EmbeddingConfig(scales=(-1.0,))


def test_char_function_at_zero():
    col = np.random.default_rng(0).random(7)
    assert char_function(col, 0.0) == (1.0, 0.0)


@pytest.mark.parametrize("t", [0.3, 2.0, 50.0])
def test_char_function_impulse_and_uniform(t):
    n = 9
    delta = np.zeros(n)
    delta[2] = 1
    re, im = char_function(WaveletColumn(2, 0.0, delta, "dense"), t)
    assert re == pytest.approx((n - 1 + math.cos(t)) / n, abs=1e-15)
    assert im == pytest.approx(math.sin(t) / n, abs=1e-15)
    re, im = char_function(np.full(n, 1 / n), t)
    assert (re, im) == pytest.approx((math.cos(t / n), math.sin(t / n)), abs=1e-15)


@pytest.mark.parametrize("mode", ["dense", "chebyshev"])
def test_k2_single_scale(mode):
    s, tau = 0.6, 3.0
    cfg = EmbeddingConfig(d=1, t_max=tau, scales=(s,))
    emb = embed_all(K2, cfg, mode=mode)
    atoms = [(1 + math.exp(-2 * s)) / 2, (1 - math.exp(-2 * s)) / 2]
    phi = np.mean(np.exp(1j * tau * np.array(atoms)))
    assert np.abs(emb.matrix - [phi.real, phi.imag]).max() <= 1e-8
    assert np.array_equal(emb.matrix[0], emb.matrix[1])


def test_default_dimension_and_columns():
    emb = embed_all(random_connected(0))
    assert emb.matrix.shape[1] == 200
    names = column_names(2, 50)
    assert names[:3] == ["s1_t1_re", "s1_t1_im", "s1_t2_re"]
    assert names[-1] == "s2_t50_im"


def test_layout_interleaves_and_orders_scales():
    g = random_connected(2, 40)
    cfg = EmbeddingConfig(d=3, t_max=6.0, scales=(0.2, 0.9))
    emb = embed_all(g, cfg, mode="dense")
    for j, s in enumerate(cfg.scales):
        one = embed_all(g, EmbeddingConfig(d=3, t_max=6.0, scales=(s,)), mode="dense")
        assert np.array_equal(emb.matrix[:, 6 * j:6 * (j + 1)], one.matrix)


def _orbits(b):
    return [np.flatnonzero(b.roles == r) for r in range(len(b.role_names))]


def test_barbell_orbit_mates_identical():
    b = make_barbell()
    emb = embed_all(b.graph, mode="dense")
    for members in _orbits(b):
        for a in members[1:]:
            assert structural_distance(emb[members[0]], emb[a]) <= 1e-6


def test_barbell_clique_pair_closer_than_clique_chain():
    b = make_barbell()
    emb = embed_all(b.graph, mode="dense")
    clique = np.flatnonzero(b.roles == b.role_names.index("clique"))
    middle = np.flatnonzero(b.roles == b.role_names.index("chain_5"))[0]
    same = structural_distance(emb[clique[0]], emb[clique[1]])
    assert same < structural_distance(emb[clique[0]], emb[middle])


def test_structural_distance_examples():
    assert structural_distance([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert structural_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        structural_distance([1.0], [1.0, 2.0])


def test_pairwise_distances_symmetric():
    X = np.random.default_rng(0).random((10, 4))
    D = pairwise_distances(X)
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)


def test_nearest_neighbors():
    b = make_barbell()
    emb = embed_all(b.graph, mode="dense")
    clique = b.role_names.index("clique")
    a = int(np.flatnonzero(b.roles == clique)[0])
    (nb, _), = nearest_neighbors(emb, a, 1)
    assert b.roles[nb] == clique and nb != a
    keep = 7
    rest = [i for i in range(len(emb)) if i not in (a, keep)]
    assert [n for n, _ in nearest_neighbors(emb, a, 1, exclude=rest)] == [keep]
    ranked = nearest_neighbors(emb, a, len(emb) - 1)
    assert sorted(n for n, _ in ranked) == [i for i in range(len(emb)) if i != a]
    dists = [d for _, d in ranked]
    assert dists == sorted(dists)
    with pytest.raises(ValueError):
        nearest_neighbors(emb, a, len(emb))


def test_nearest_neighbors_ties_by_index():
    b = make_barbell()
    emb = embed_all(b.graph, mode="dense")
    emb.matrix[:] = 0.0
    assert [n for n, _ in nearest_neighbors(emb, 3, 3)] == [0, 1, 2]


def test_characteristic_function_bounded_and_lipschitz():
    g = random_connected(4)
    cfg = EmbeddingConfig(d=400, t_max=20.0)
    emb = embed_all(g, cfg, mode="dense")
    assert check_bounds(emb) <= 1 + 1e-12
    phi = emb.matrix[:, 0::2] + 1j * emb.matrix[:, 1::2]
    step = cfg.t_max / cfg.d
    n_scales = len(emb.scales)
    for j in range(n_scales):
        block = phi[:, j * cfg.d:(j + 1) * cfg.d]
        assert np.abs(np.diff(block, axis=1)).max() <= step + 1e-12


def test_permutation_equivariance():
    b = make_barbell()
    perm = np.random.default_rng(3).permutation(b.graph.n)
    g2 = relabel(b.graph, perm)
    e1 = embed_all(b.graph, mode="dense")
    e2 = embed_all(g2, mode="dense")
    for new, old in enumerate(perm):
        assert e2.labels[new] == e1.labels[old]
    assert np.abs(e2.matrix - e1.matrix[perm]).max() <= 1e-8


def test_sparse_path_matches_dense_path():
    g = random_connected(6, 180)
    d = embed_all(g, mode="dense")
    c = embed_all(g, mode="chebyshev")
    assert d.scales == pytest.approx(c.scales, rel=1e-6)
    assert np.abs(d.matrix - c.matrix).max() <= 1e-6


def test_threads_do_not_change_results():
    g = random_connected(7, 300)
    a = embed_all(g, mode="chebyshev", threads=1, block=64)
    b = embed_all(g, mode="chebyshev", threads=4, block=64)
    assert np.array_equal(a.matrix, b.matrix)


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraphError):
        embed_all(build_graph([("a", "b"), ("c", "d")]))


def test_far_rewire_moves_embedding_less_than_role_gap():
    b = generate("house", 0)
    g = b.graph
    emb = embed_all(g, mode="dense")
    a = 0
    near = khop_neighborhood(g, a, 3)
    u, v, _ = next(e for e in g.edges if e[0] not in near and e[1] not in near)
    w = next(x for x in range(g.n) if x not in near and x not in (u, v)
             and x not in g.neighbors(u))
    pairs = [(g.node_labels[p], g.node_labels[q]) for p, q, _ in g.edges if (p, q) != (u, v)]
    pairs.append((g.node_labels[u], g.node_labels[w]))
    g2 = build_graph(pairs, nodes=g.node_labels)
    moved = structural_distance(emb[a], embed_all(g2, emb.config, mode="dense")[a])
    others = np.flatnonzero(b.roles != b.roles[a])
    gap = min(structural_distance(emb[a], emb[o]) for o in others)
    assert moved < gap
