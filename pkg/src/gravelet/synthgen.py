"""Seeded generators for graphs with planted structural roles.

Every generator returns a :class:`RoleBenchmark`: the graph, one role id
per node, and the recipe that reproduces it. Same recipe and seed give the
same edge list, byte for byte.

A shape is planted by one edge from its anchor node to a skeleton node;
that skeleton node takes the ``attachment`` role.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .graph import Graph, build_graph, is_connected


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class Shape:
    kind: str
    size: int
    edges: tuple[tuple[int, int], ...]
    anchor: int
    orbits: tuple[str, ...]  # per-node role tag, rooted at the anchor


def house() -> Shape:
    # 0-1 floor, 3-2 ceiling, 4 roof apex; anchored at a floor corner
    edges = ((0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (3, 4))
    orbits = ("house_anchor", "house_floor", "house_wall_far",
              "house_wall_near", "house_apex")
    return Shape("house", 5, edges, 0, orbits)


def fan(path_len: int = 4) -> Shape:
    edges = tuple((0, i) for i in range(1, path_len + 1))
    edges += tuple((i, i + 1) for i in range(1, path_len))
    orbits = ["fan_anchor"]
    for i in range(1, path_len + 1):
        depth = min(i - 1, path_len - i)
        orbits.append("fan_end" if depth == 0 else f"fan_inner{depth}")
    return Shape("fan", path_len + 1, edges, 0, tuple(orbits))


def star(leaves: int = 5) -> Shape:
    edges = tuple((0, i) for i in range(1, leaves + 1))
    return Shape("star", leaves + 1, edges, 0, ("star_anchor",) + ("star_leaf",) * leaves)


def chain(length: int = 5) -> Shape:
    edges = tuple((i, i + 1) for i in range(length - 1))
    orbits = ("chain_anchor",) + tuple(f"chain_{i}" for i in range(1, length))
    return Shape("chain", length, edges, 0, orbits)


SHAPES = {"house": house, "fan": fan, "star": star, "chain": chain}


@dataclass
class RoleBenchmark:
    graph: Graph
    roles: np.ndarray
    role_names: tuple[str, ...]
    seed: Optional[int]
    recipe: dict
    mirror: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def num_roles(self) -> int:
        return len(np.unique(self.roles))

    def role_of(self, a: int) -> str:
        return self.role_names[self.roles[a]]


class _Builder:
    """Accumulates integer-labelled edges and per-node role tags."""

    def __init__(self):
        self.tags: list[str] = []
        self.edges: list[tuple[int, int]] = []

    def add_nodes(self, tags: Sequence[str]) -> int:
        start = len(self.tags)
        self.tags.extend(tags)
        return start

    def plant(self, shape: Shape, at: int) -> None:
        """Join ``shape.anchor`` to existing node ``at`` by one edge."""
        start = self.add_nodes(shape.orbits)
        self.edges.extend((start + u, start + v) for u, v in shape.edges)
        self.edges.append((start + shape.anchor, at))
        self.tags[at] = "attachment"

    def finish(self, vocabulary: Optional[Sequence[str]] = None):
        if vocabulary is None:
            vocabulary = list(dict.fromkeys(self.tags))
        ids = {name: i for i, name in enumerate(vocabulary)}
        roles = np.array([ids[t] for t in self.tags], dtype=np.int64)
        g = build_graph(self.edges, nodes=range(len(self.tags)))
        return g, roles, tuple(vocabulary)


def make_barbell(clique_size: int = 10, chain_length: int = 11) -> RoleBenchmark:
    """Two ``clique_size`` cliques whose gateway nodes are joined by a path
    of ``chain_length`` nodes. Roles are automorphism orbits."""
    if clique_size < 3 or chain_length < 1:
        raise GenerationError("need clique_size >= 3 and chain_length >= 1")
    c, m = clique_size, chain_length
    b = _Builder()
    b.add_nodes(["clique"] * (c - 1) + ["gateway"])
    for i in range(m):
        b.add_nodes([f"chain_{min(i, m - 1 - i)}"])
    b.add_nodes(["gateway"] + ["clique"] * (c - 1))
    for block in (range(0, c), range(c + m, 2 * c + m)):
        b.edges += [(u, v) for u in block for v in block if u < v]
    path = [c - 1] + list(range(c, c + m)) + [c + m]
    b.edges += list(zip(path[:-1], path[1:]))
    g, roles, names = b.finish()
    recipe = {"generator": "barbell", "clique_size": c, "chain_length": m}
    return RoleBenchmark(g, roles, names, None, recipe)


def _expand_shapes(shapes) -> list[str]:
    if isinstance(shapes, dict):
        shapes = list(shapes.items())
    kinds = []
    for kind, count in shapes:
        if kind not in SHAPES:
            raise GenerationError(f"unknown shape {kind!r}")
        kinds += [kind] * int(count)
    return kinds


def make_cycle_with_shapes(cycle_len: int, shapes, placement: str = "regular",
                           seed: Optional[int] = None) -> RoleBenchmark:
    """Cycle skeleton with planted shapes.

    ``shapes`` maps kind to count (or is a list of ``(kind, count)``). With
    ``regular`` placement the ``k``-th of ``M`` shapes sits at cycle node
    ``floor(cycle_len * k / M)``, kinds interleaved in round-robin order;
    ``random`` draws distinct cycle nodes and a random kind order.
    """
    kinds = _expand_shapes(shapes)
    if cycle_len < 3:
        raise GenerationError("cycle needs at least 3 nodes")
    if len(kinds) > cycle_len:
        raise GenerationError(f"{len(kinds)} shapes do not fit on a cycle of {cycle_len}")
    rng = np.random.default_rng(seed)
    if placement == "regular":
        by_kind: dict[str, list[str]] = {}
        for k in kinds:
            by_kind.setdefault(k, []).append(k)
        order = []
        while any(by_kind.values()):
            for lst in by_kind.values():
                if lst:
                    order.append(lst.pop())
        slots = [cycle_len * k // len(order) for k in range(len(order))]
    elif placement == "random":
        order = [kinds[i] for i in rng.permutation(len(kinds))]
        slots = sorted(int(x) for x in rng.choice(cycle_len, len(kinds), replace=False))
    else:
        raise GenerationError(f"unknown placement {placement!r}")

    b = _Builder()
    b.add_nodes(["cycle"] * cycle_len)
    b.edges += [(i, (i + 1) % cycle_len) for i in range(cycle_len)]
    for kind, slot in zip(order, slots):
        b.plant(SHAPES[kind](), slot)
    g, roles, names = b.finish()
    recipe = {
        "generator": "cycle_with_shapes",
        "cycle_len": cycle_len,
        "shapes": sorted({k: kinds.count(k) for k in kinds}.items()),
        "placement": placement,
    }
    return RoleBenchmark(g, roles, names, seed, recipe)


def _non_edge_sampler(g: Graph, rng: np.random.Generator, existing: set,
                      nodes: Optional[np.ndarray] = None):
    nodes = np.arange(g.n) if nodes is None else nodes

    def draw():
        while True:
            u, v = (int(x) for x in rng.choice(nodes, 2, replace=False))
            key = (min(u, v), max(u, v))
            if key not in existing:
                return key

    return draw


def _edge_set(g: Graph) -> set:
    return {(min(u, v), max(u, v)) for u, v, _ in g.edges}


def _rebuild(g: Graph, pairs) -> Graph:
    return build_graph([(g.node_labels[u], g.node_labels[v]) for u, v in pairs],
                       nodes=g.node_labels)


def add_random_edges(g: Graph, count: int, rng: np.random.Generator,
                     among: Optional[Sequence[int]] = None) -> Graph:
    existing = _edge_set(g)
    pool = np.arange(g.n) if among is None else np.asarray(among)
    members = set(pool.tolist())
    inside = sum(1 for u, v in existing if u in members and v in members)
    room = len(pool) * (len(pool) - 1) // 2 - inside
    if count > room:
        raise GenerationError(f"cannot add {count} edges: only {room} non-edges left")
    draw = _non_edge_sampler(g, rng, existing, pool)
    added = []
    for _ in range(count):
        e = draw()
        existing.add(e)
        added.append(e)
    return _rebuild(g, [(u, v) for u, v, _ in g.edges] + added)


def _side_of(n: int, pairs, skip: int, start: int) -> np.ndarray:
    """Nodes reachable from ``start`` without edge ``pairs[skip]``."""
    adj: dict[int, list[int]] = {}
    for j, (u, v) in enumerate(pairs):
        if j != skip:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        for w in adj.get(stack.pop(), ()):
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return seen


def _rewire(g: Graph, count: int, rng: np.random.Generator) -> Graph:
    """Move one endpoint of ``count`` distinct edges to a random new node.

    When the edge is a bridge, the new endpoint is drawn from the far side
    so the graph stays connected.
    """
    pairs = [(u, v) for u, v, _ in g.edges]
    existing = set((min(u, v), max(u, v)) for u, v in pairs)
    chosen = rng.choice(len(pairs), count, replace=False) if count else []
    for idx in chosen:
        u, v = pairs[idx]
        ends = (u, v) if rng.random() < 0.5 else (v, u)
        candidates = []
        for keep, other in (ends, ends[::-1]):
            side = _side_of(g.n, pairs, idx, keep)
            allowed = ~side if not side[other] else np.ones(g.n, dtype=bool)
            candidates = [w for w in np.flatnonzero(allowed).tolist()
                          if w != keep and (min(keep, w), max(keep, w)) not in existing]
            if candidates:
                break
        if not candidates:
            raise GenerationError(f"edge {g.node_labels[u]!r}-{g.node_labels[v]!r} "
                                  "cannot be rewired")
        w = candidates[int(rng.integers(len(candidates)))]
        existing.discard((min(u, v), max(u, v)))
        existing.add((min(keep, w), max(keep, w)))
        pairs[idx] = (keep, w)
    return _rebuild(g, pairs)


def perturb_edges(b: RoleBenchmark, fraction: float, mode: str = "add",
                  seed: Optional[int] = None, max_retries: int = 20) -> RoleBenchmark:
    """Add ``floor(fraction * |E|)`` random non-edges, or rewire that many
    edges. Roles are carried over unchanged. A perturbation that
    disconnects the graph is redrawn with the next seed, at most
    ``max_retries`` times."""
    if fraction < 0:
        raise GenerationError("fraction must be >= 0")
    if mode not in ("add", "rewire"):
        raise GenerationError(f"unknown perturbation mode {mode!r}")
    g = b.graph
    count = int(np.floor(fraction * g.num_edges + 1e-9))
    if mode == "rewire" and count > g.num_edges:
        raise GenerationError("cannot rewire more edges than the graph has")
    base = 0 if seed is None else int(seed)
    last_error = None
    for attempt in range(max_retries):
        rng = np.random.default_rng(base + attempt)
        try:
            if mode == "add":
                new = add_random_edges(g, count, rng)
            else:
                new = _rewire(g, count, rng)
        except GenerationError as exc:
            if mode == "add":
                raise
            last_error = exc
            continue
        if is_connected(new):
            recipe = dict(b.recipe)
            recipe["perturbation"] = {"mode": mode, "fraction": fraction,
                                      "count": count, "seed": base + attempt}
            return RoleBenchmark(new, b.roles.copy(), b.role_names, b.seed, recipe, b.mirror)
    raise GenerationError(
        f"perturbation failed after {max_retries} attempts"
        + (f": {last_error}" if last_error else " (graph kept disconnecting)")
    )


# every skeleton node is one role: the extra random edges land on the
# skeleton and blur attachment points and path ends into it
CROSSGRAPH_VOCAB = ("skeleton",) + house().orbits + chain().orbits


def make_crossgraph_graph(rng: np.random.Generator, size_range=(15, 40),
                          shape_range=(2, 8), extra_edges: int = 10):
    skeleton = "cycle" if rng.random() < 0.5 else "path"
    size = int(rng.integers(size_range[0], size_range[1] + 1))
    n_shapes = int(rng.integers(shape_range[0], shape_range[1] + 1))
    n_shapes = min(n_shapes, size)
    b = _Builder()
    b.add_nodes(["skeleton"] * size)
    b.edges += [(i, i + 1) for i in range(size - 1)]
    if skeleton == "cycle":
        b.edges.append((size - 1, 0))
    slots = rng.choice(size, n_shapes, replace=False)
    for slot in sorted(int(x) for x in slots):
        kind = "house" if rng.random() < 0.5 else "chain"
        b.plant(SHAPES[kind](), slot)
    b.tags[:size] = ["skeleton"] * size
    g, roles, names = b.finish(CROSSGRAPH_VOCAB)
    g = add_random_edges(g, extra_edges, rng, among=np.arange(size))
    recipe = {"generator": "crossgraph", "skeleton": skeleton, "size": size,
              "shapes": n_shapes, "extra_edges": extra_edges}
    return g, roles, names, recipe


def make_crossgraph_corpus(count: int = 200, seed: Optional[int] = None,
                           size_range=(15, 40), shape_range=(2, 8),
                           extra_edges: int = 10) -> list[RoleBenchmark]:
    """``count`` independent graphs sharing one role vocabulary."""
    if count < 1:
        raise GenerationError("count must be >= 1")
    children = np.random.SeedSequence(seed).spawn(count)
    corpus = []
    for child in children:
        rng = np.random.default_rng(child)
        g, roles, names, recipe = make_crossgraph_graph(rng, size_range, shape_range,
                                                        extra_edges)
        recipe.update(size_range=list(size_range), shape_range=list(shape_range))
        corpus.append(RoleBenchmark(g, roles, names, seed, recipe))
    return corpus


def karate_edges() -> list[tuple[int, int]]:
    text = resources.files("gravelet").joinpath("data/karate.edges").read_text()
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            u, v = line.split()[:2]
            out.append((int(u), int(v)))
    return out


def make_mirrored_karate(num_mirror_edges: int, seed: Optional[int] = None) -> RoleBenchmark:
    """Two copies of the karate club graph plus edges joining mirrored
    members. ``mirror[i]`` is the index of node ``i``'s copy."""
    n = 34
    if not 1 <= num_mirror_edges <= n:
        raise GenerationError("num_mirror_edges must be in [1, 34]")
    edges = karate_edges()
    rng = np.random.default_rng(seed)
    linked = sorted(int(x) for x in rng.choice(n, num_mirror_edges, replace=False))
    pairs = edges + [(u + n, v + n) for u, v in edges] + [(i, i + n) for i in linked]
    g = build_graph(pairs, nodes=range(2 * n))
    roles = np.concatenate([np.arange(n), np.arange(n)])
    mirror = np.concatenate([np.arange(n, 2 * n), np.arange(n)])
    recipe = {"generator": "mirrored_karate", "mirror_edges": num_mirror_edges,
              "linked": linked}
    return RoleBenchmark(g, roles, tuple(f"member_{i}" for i in range(n)), seed,
                         recipe, mirror)


def make_scaling_family(sizes: Sequence[int], seed: Optional[int] = None) -> list[Graph]:
    """Cycle skeletons carrying house and chain motifs, one graph per size.

    Each planted motif adds five nodes; an eighth of the requested size is
    spent on motifs, so node counts match the request exactly.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise GenerationError("sizes must be ascending")
    out = []
    for n, child in zip(sizes, np.random.SeedSequence(seed).spawn(len(sizes))):
        rng = np.random.default_rng(child)
        motifs = max(1, n // 8)
        cycle_len = n - 5 * motifs
        kinds = {"house": 0, "chain": 0}
        for _ in range(motifs):
            kinds["house" if rng.random() < 0.5 else "chain"] += 1
        b = make_cycle_with_shapes(cycle_len, kinds, "random",
                                   int(rng.integers(2**32)))
        out.append(b.graph)
    return out


# named recipes used by the CLI and the benchmark runner
PERTURB_FRACTION = 0.10


def generate(name: str, seed: Optional[int] = None, **kw) -> RoleBenchmark:
    if name == "barbell":
        return make_barbell(kw.get("clique_size", 10), kw.get("chain_length", 11))
    if name in ("house", "house-perturbed"):
        b = make_cycle_with_shapes(30, {"house": 10}, "regular", seed)
    elif name in ("varied", "varied-perturbed"):
        b = make_cycle_with_shapes(40, {"house": 8, "fan": 8, "star": 8}, "random", seed)
    elif name == "karate":
        return make_mirrored_karate(kw.get("mirror_edges", 10), seed)
    elif name == "crossgraph":
        return make_crossgraph_corpus(1, seed)[0]
    else:
        raise GenerationError(f"unknown recipe {name!r}")
    b.recipe["name"] = name
    if name.endswith("-perturbed"):
        fraction = kw.get("fraction", PERTURB_FRACTION)
        sub = None if seed is None else int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])
        b = perturb_edges(b, fraction, "add", sub)
    return b


RECIPES = ("barbell", "house", "house-perturbed", "varied", "varied-perturbed",
           "karate", "crossgraph")


def recipe_json(b: RoleBenchmark) -> str:
    return json.dumps({"seed": b.seed, **b.recipe}, sort_keys=True, indent=2)
