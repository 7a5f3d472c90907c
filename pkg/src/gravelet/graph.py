"""Immutable undirected weighted graphs and their combinatorial Laplacian."""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    """Raised for malformed edge lists (self-loops, bad weights, conflicts)."""


class DisconnectedGraphError(GraphError):
    """Raised when an operation needs a connected graph and did not get one."""

    def __init__(self, component_sizes: Sequence[int]):
        self.component_sizes = sorted(component_sizes, reverse=True)
        sizes = ", ".join(str(s) for s in self.component_sizes[:10])
        more = "" if len(self.component_sizes) <= 10 else ", ..."
        super().__init__(
            f"graph has {len(self.component_sizes)} connected components "
            f"(sizes {sizes}{more}); use the largest component"
        )


@dataclass(frozen=True)
class Graph:
    n: int
    node_labels: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]
    adjacency: sp.csr_matrix = field(repr=False, compare=False)
    degrees: np.ndarray = field(repr=False, compare=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    @property
    def _label_index(self) -> dict[str, int]:
        cache = self.__dict__.get("_label_cache")
        if cache is None:
            cache = {lab: i for i, lab in enumerate(self.node_labels)}
            object.__setattr__(self, "_label_cache", cache)
        return cache

    def neighbors(self, a: int) -> np.ndarray:
        A = self.adjacency
        return A.indices[A.indptr[a]:A.indptr[a + 1]]

    def content_hash(self) -> str:
        """SHA-256 over labels and the canonical edge list."""
        h = hashlib.sha256()
        for lab in self.node_labels:
            h.update(lab.encode("utf-8") + b"\0")
        for u, v, w in self.edges:
            h.update(f"{u} {v} {w!r}\n".encode())
        return h.hexdigest()


@dataclass(frozen=True)
class Laplacian:
    matrix: sp.csr_matrix
    n: int


def _check_weight(w) -> float:
    w = float(w)
    if not math.isfinite(w) or w <= 0:
        raise GraphError(f"edge weight must be positive and finite, got {w!r}")
    return w


def build_graph(
    edge_list: Iterable[Sequence],
    nodes: Iterable[Hashable] = (),
) -> Graph:
    """Build a graph from ``(u, v)`` or ``(u, v, weight)`` tuples.

    Labels are converted to ``str`` and assigned dense indices in first-seen
    order; ``nodes`` may pre-register labels (isolated nodes included).
    Symmetric duplicates are merged when their weights agree.
    """
    index: dict[str, int] = {}
    labels: list[str] = []

    def idx(label) -> int:
        key = str(label)
        if not key:
            raise GraphError("node labels must be nonempty")
        i = index.get(key)
        if i is None:
            i = index[key] = len(labels)
            labels.append(key)
        return i

    for lab in nodes:
        idx(lab)

    weights: dict[tuple[int, int], float] = {}
    for item in edge_list:
        if len(item) == 2:
            a, b = item
            w = 1.0
        elif len(item) == 3:
            a, b, w = item
            w = 1.0 if w is None else _check_weight(w)
        else:
            raise GraphError(f"edge must have 2 or 3 fields, got {item!r}")
        u, v = idx(a), idx(b)
        if u == v:
            raise GraphError(f"self-loop on node {labels[u]!r}")
        key = (u, v) if u < v else (v, u)
        prev = weights.get(key)
        if prev is None:
            weights[key] = w
        elif prev != w:
            raise GraphError(
                f"conflicting weights {prev} and {w} for edge "
                f"{labels[key[0]]!r}-{labels[key[1]]!r}"
            )

    n = len(labels)
    edges = tuple((u, v, w) for (u, v), w in weights.items())
    if edges:
        e = np.array([(u, v) for u, v, _ in edges], dtype=np.int64)
        w = np.array([w for *_, w in edges], dtype=np.float64)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        vals = np.concatenate([w, w])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sort_indices()
    degrees = np.asarray(A.sum(axis=1)).ravel()
    return Graph(n, tuple(labels), edges, A, degrees)


def laplacian(g: Graph) -> Laplacian:
    L = (sp.diags(g.degrees) - g.adjacency).tocsr()
    L.sort_indices()
    return Laplacian(L, g.n)


def khop_neighborhood(g: Graph, a: int, K: int) -> set[int]:
    """Nodes within ``K`` hops of ``a`` (``a`` included)."""
    if not 0 <= a < g.n:
        raise IndexError(f"node index {a} out of range [0, {g.n})")
    if K < 0:
        raise ValueError("hop count must be >= 0")
    seen = {a}
    frontier = deque([(a, 0)])
    while frontier:
        u, d = frontier.popleft()
        if d == K:
            continue
        for v in g.neighbors(u):
            v = int(v)
            if v not in seen:
                seen.add(v)
                frontier.append((v, d + 1))
    return seen


def component_labels(g: Graph) -> np.ndarray:
    _, comp = connected_components(g.adjacency, directed=False)
    return comp


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    ncomp, _ = connected_components(g.adjacency, directed=False)
    return ncomp == 1


def require_connected(g: Graph) -> None:
    if not is_connected(g):
        comp = component_labels(g)
        raise DisconnectedGraphError(np.bincount(comp).tolist())


def largest_component(g: Graph) -> Graph:
    """Induced subgraph on the largest connected component.

    Ties go to the component containing the smallest node index. Node
    order within the component is preserved.
    """
    if is_connected(g):
        return g
    comp = component_labels(g)
    sizes = np.bincount(comp)
    keep = int(np.argmax(sizes))
    members = np.flatnonzero(comp == keep)
    return induced_subgraph(g, members)


def induced_subgraph(g: Graph, members: Iterable[int]) -> Graph:
    members = sorted(int(m) for m in members)
    pos = {m: i for i, m in enumerate(members)}
    labels = [g.node_labels[m] for m in members]
    edges = [
        (labels[pos[u]], labels[pos[v]], w)
        for u, v, w in g.edges
        if u in pos and v in pos
    ]
    return build_graph(edges, nodes=labels)


def relabel(g: Graph, order: Sequence[int]) -> Graph:
    """Rebuild ``g`` with nodes registered in ``order`` (a permutation)."""
    labels = [g.node_labels[i] for i in order]
    edges = [(g.node_labels[u], g.node_labels[v], w) for u, v, w in g.edges]
    return build_graph(edges, nodes=labels)


def to_networkx(g: Graph):
    import networkx as nx

    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_weighted_edges_from(g.edges)
    return G
