"""End-to-end experiment protocols on the synthetic benchmarks.

Each protocol returns a :class:`Table` (or a :class:`MetricReport` for the
role benchmarks); both render as an aligned text table and as CSV.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .embedding import EmbeddingConfig, embed_all, pairwise_distances
from .evaluation import (
    MetricReport,
    agglomerative_cluster,
    crossgraph_knn,
    homogeneity_completeness,
    mirror_accuracy,
    run_benchmark,
    silhouette,
    trial_seeds,
)
from .graph import laplacian
from .spectral import DEFAULT_ORDER, extremal_eigenvalues
from .synthgen import (
    generate,
    make_barbell,
    make_crossgraph_corpus,
    make_mirrored_karate,
    make_scaling_family,
    perturb_edges,
)
from .wavelet import geometric_scales, select_scales

log = logging.getLogger(__name__)

BENCHMARKS = ("house", "house-perturbed", "varied", "varied-perturbed")
EXPERIMENTS = ("barbell",) + BENCHMARKS + ("crossgraph", "karate", "scaling", "noise-sweep")

DEFAULT_SIZES = (1000, 2000, 4000, 8000, 16000)
DEFAULT_NOISE = tuple(round(0.05 * i, 2) for i in range(7))


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        out = [f"# {n}" for n in self.notes]
        out.append(",".join(self.columns))
        out += [",".join(_fmt(v) for v in r) for r in self.rows]
        out += [f"# {k}: {_fmt(v)}" for k, v in self.summary.items()]
        return "\n".join(out) + "\n"

    def table(self) -> str:
        cells = [self.columns] + [[_fmt(v) for v in r] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = [self.name] + [f"note: {n}" for n in self.notes]
        lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
        lines += [f"{k}: {_fmt(v)}" for k, v in self.summary.items()]
        return "\n".join(lines)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.6f}"
    return str(v)


def barbell(cfg: EmbeddingConfig = EmbeddingConfig(), mode: str = "dense",
            K: int = DEFAULT_ORDER, clique_size: int = 10, chain_length: int = 11) -> Table:
    """Distances within and between automorphism orbits of the barbell."""
    b = make_barbell(clique_size, chain_length)
    emb = embed_all(b.graph, cfg, mode=mode, K=K)
    D = pairwise_distances(emb.matrix)
    t = Table("barbell", ["role", "members", "max_within", "min_to_other"])
    for r, name in enumerate(b.role_names):
        idx = np.flatnonzero(b.roles == r)
        rest = np.flatnonzero(b.roles != r)
        within = float(D[np.ix_(idx, idx)].max())
        t.rows.append([name, len(idx), within, float(D[np.ix_(idx, rest)].min())])
    pred = agglomerative_cluster(emb, b.num_roles).assignments
    h, c = homogeneity_completeness(b.roles, pred)
    t.summary = {"roles": b.num_roles, "homogeneity": h, "completeness": c,
                 "silhouette": silhouette(emb, pred),
                 "max_within": max(t.column("max_within")),
                 "min_between": min(t.column("min_to_other"))}
    return t


def benchmark(name: str, cfg: EmbeddingConfig = EmbeddingConfig(), trials: int = 25,
              seed: int = 0, mode: str = "auto", K: int = DEFAULT_ORDER,
              threads: Optional[int] = None) -> MetricReport:
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}")
    return run_benchmark(name, trials, seed, cfg, mode, K, threads=threads)


def corpus_scales(graphs, eta: float, gamma: float, J: int) -> tuple[float, ...]:
    """One scale set for a whole corpus: the median of the per-graph
    automatic ranges, spaced geometrically.

    Embeddings are only comparable across graphs when taken at the same
    scales.
    """
    ranges = [select_scales(extremal_eigenvalues(laplacian(g)), eta, gamma) for g in graphs]
    s_min = float(np.median([r.s_min for r in ranges]))
    s_max = float(np.median([r.s_max for r in ranges]))
    return geometric_scales(s_min, s_max, J)


def crossgraph(cfg: EmbeddingConfig = EmbeddingConfig(), count: int = 200, seed: int = 0,
               mode: str = "auto", K: int = DEFAULT_ORDER, k: int = 4,
               folds: int = 10) -> Table:
    corpus = make_crossgraph_corpus(count, seed)
    scales = cfg.scales or corpus_scales([b.graph for b in corpus], cfg.eta, cfg.gamma, cfg.J)
    shared = EmbeddingConfig(cfg.d, cfg.t_max, cfg.eta, cfg.gamma, len(scales), scales)
    mats = [embed_all(b.graph, shared, mode=mode, K=K).matrix for b in corpus]
    acc, f = crossgraph_knn(mats, [b.roles for b in corpus], k=k, folds=folds, seed=seed)
    t = Table("crossgraph", ["graphs", "nodes", "roles", "accuracy", "f1"])
    roles = np.concatenate([b.roles for b in corpus])
    t.rows.append([count, len(roles), len(np.unique(roles)), acc, f])
    t.notes.append("shared scales " + " ".join(repr(float(s)) for s in scales))
    t.summary = {"accuracy": acc, "f1": f}
    return t


def karate(cfg: EmbeddingConfig = EmbeddingConfig(), mirror_edges: Sequence[int] = range(1, 26),
           seed: int = 0, mode: str = "auto", K: int = DEFAULT_ORDER) -> Table:
    """Mirror recovery on two joined karate copies, one seed per edge count."""
    counts = list(mirror_edges)
    seeds = trial_seeds(seed, len(counts))
    t = Table("karate", ["mirror_edges", "seed", "accuracy"])
    for m, s in zip(counts, seeds):
        b = make_mirrored_karate(m, s)
        emb = embed_all(b.graph, cfg, mode=mode, K=K)
        t.rows.append([m, s, mirror_accuracy(emb, b.mirror)])
    accs = t.column("accuracy")
    t.summary = {"mean": float(np.mean(accs)), "min": float(np.min(accs)),
                 "max": float(np.max(accs))}
    return t


def scaling(cfg: EmbeddingConfig = EmbeddingConfig(), sizes: Sequence[int] = DEFAULT_SIZES,
            seed: int = 0, K: int = DEFAULT_ORDER, threads: Optional[int] = None,
            repeats: int = 1) -> Table:
    """Wall time of the polynomial route against graph size.

    The best of ``repeats`` runs is kept; ``slope`` is the least-squares
    slope of log time against log edge count.
    """
    graphs = make_scaling_family(sorted(sizes), seed)
    t = Table("scaling", ["n", "edges", "wall_time"])
    t.notes.append("wall_time is in seconds and varies run to run")
    for g in graphs:
        best = math.inf
        for _ in range(repeats):
            start = time.perf_counter()
            embed_all(g, cfg, mode="chebyshev", K=K, threads=threads)
            best = min(best, time.perf_counter() - start)
        t.rows.append([g.n, g.num_edges, best])
    if len(t.rows) >= 2:
        x = np.log(t.column("edges"))
        y = np.log(t.column("wall_time"))
        t.summary = {"slope": float(np.polyfit(x, y, 1)[0])}
    return t


def noise_sweep(cfg: EmbeddingConfig = EmbeddingConfig(),
                fractions: Sequence[float] = DEFAULT_NOISE, runs: int = 10, seed: int = 0,
                mode: str = "auto", K: int = DEFAULT_ORDER, recipe: str = "varied") -> Table:
    """Clustering quality as a growing share of edges is rewired."""
    t = Table("noise-sweep", ["fraction", "runs", "homogeneity", "completeness",
                              "clusters_per_node", "failures"])
    t.notes.append("clusters come from single-linkage agglomerative clustering "
                   "with the true role count, not from affinity propagation")
    seeds = trial_seeds(seed, runs)
    for frac in fractions:
        hs, cs, ratios, failed = [], [], [], 0
        for s in seeds:
            try:
                base = generate(recipe, s)
                sub = int(np.random.SeedSequence([s, 2]).generate_state(1)[0])
                b = perturb_edges(base, frac, "rewire", sub) if frac > 0 else base
                emb = embed_all(b.graph, cfg, mode=mode, K=K)
                pred = agglomerative_cluster(emb, b.num_roles).assignments
            except Exception as exc:  # counted, not hidden
                log.warning("noise %.2f seed %d failed: %s", frac, s, exc)
                failed += 1
                continue
            h, c = homogeneity_completeness(b.roles, pred)
            hs.append(h)
            cs.append(c)
            ratios.append(b.num_roles / b.graph.n)
        mean = (lambda v: float(np.mean(v)) if v else math.nan)
        t.rows.append([frac, len(hs), mean(hs), mean(cs), mean(ratios), failed])
    return t
