"""Scoring embeddings against ground-truth structural roles.

Unsupervised: single-linkage agglomerative clustering with the true number
of roles, scored by homogeneity, completeness and silhouette. Supervised:
stratified k-fold cross validation of a 4-nearest-neighbour vote, scored by
accuracy and F1.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .embedding import EmbeddingConfig, EmbeddingSet, embed_all, pairwise_distances

log = logging.getLogger(__name__)


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, EmbeddingSet) else np.asarray(x, dtype=float)


@dataclass(frozen=True)
class ClusteringResult:
    assignments: np.ndarray
    num_clusters: int
    linkage: str = "single"


def agglomerative_cluster(emb, k: int) -> ClusteringResult:
    """Single-linkage clustering down to ``k`` clusters.

    Merges follow Kruskal order on the complete distance graph: smaller
    distance first, then the pair with the smaller node indices. Cluster ids
    are numbered by each cluster's smallest node.
    """
    X = _matrix(emb)
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    components = n
    if components > k:
        D = pairwise_distances(X)
        iu, ju = np.triu_indices(n, 1)
        order = np.lexsort((ju, iu, D[iu, ju]))
        for e in order:
            ri, rj = find(iu[e]), find(ju[e])
            if ri == rj:
                continue
            parent[max(ri, rj)] = min(ri, rj)
            components -= 1
            if components == k:
                break
    roots = [find(i) for i in range(n)]
    ids = {r: c for c, r in enumerate(sorted(set(roots)))}
    return ClusteringResult(np.array([ids[r] for r in roots]), k)


def _entropy(labels: np.ndarray) -> float:
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def _conditional_entropy(a: np.ndarray, b: np.ndarray) -> float:
    """H(a | b) in nats."""
    n = len(a)
    _, b_idx = np.unique(b, return_inverse=True)
    _, a_idx = np.unique(a, return_inverse=True)
    joint = np.zeros((a_idx.max() + 1, b_idx.max() + 1))
    np.add.at(joint, (a_idx, b_idx), 1.0)
    nb = joint.sum(axis=0)
    nz = joint > 0
    cond = joint[nz] * np.log(joint[nz] / np.broadcast_to(nb, joint.shape)[nz])
    return float(-cond.sum() / n)


def homogeneity_completeness(truth, pred) -> tuple[float, float]:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape:
        raise ValueError("truth and prediction lengths differ")
    if truth.size == 0:
        return 1.0, 1.0
    h_truth, h_pred = _entropy(truth), _entropy(pred)
    h = 1.0 if h_truth == 0 else 1.0 - _conditional_entropy(truth, pred) / h_truth
    c = 1.0 if h_pred == 0 else 1.0 - _conditional_entropy(pred, truth) / h_pred
    return h, c


def silhouette(emb, pred) -> float:
    """Mean silhouette under Euclidean distance.

    Singleton clusters score 0, and so does a point with ``a == b == 0``.
    """
    X = _matrix(emb)
    pred = np.asarray(pred)
    clusters = np.unique(pred)
    if len(clusters) < 2:
        raise ValueError("silhouette needs at least two clusters")
    D = pairwise_distances(X)
    n = len(X)
    sums = np.stack([D[:, pred == c].sum(axis=1) for c in clusters], axis=1)
    sizes = np.array([(pred == c).sum() for c in clusters])
    own = np.searchsorted(clusters, pred)
    scores = np.zeros(n)
    for i in range(n):
        m = sizes[own[i]]
        if m == 1:
            continue
        a = sums[i, own[i]] / (m - 1)
        others = [sums[i, j] / sizes[j] for j in range(len(clusters)) if j != own[i]]
        b = min(others)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def f1(truth, pred, average: str = "weighted") -> float:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    classes = np.unique(truth)
    scores, support = [], []
    for c in classes:
        tp = np.sum((pred == c) & (truth == c))
        fp = np.sum((pred == c) & (truth != c))
        fn = np.sum((pred != c) & (truth == c))
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
        support.append(tp + fn)
    scores = np.array(scores)
    if average == "weighted":
        return float((scores * support).sum() / np.sum(support))
    if average == "macro":
        return float(scores.mean())
    raise ValueError(f"unknown average {average!r}")


def _label_key(seed: int, label: str) -> bytes:
    return hashlib.sha256(f"{seed}\0{label}".encode()).digest()


def stratified_folds(labels: Sequence[str], truth, folds: int, seed: int) -> np.ndarray:
    """Fold id per node. Within each role, nodes are ordered by a hash of
    ``(seed, node label)`` and dealt round-robin, continuing where the
    previous role stopped; the assignment follows node labels, not
    positions."""
    truth = np.asarray(truth)
    out = np.empty(len(truth), dtype=np.int64)
    offset = 0
    for role in np.unique(truth):
        members = np.flatnonzero(truth == role)
        members = sorted(members, key=lambda i: _label_key(seed, labels[i]))
        for j, i in enumerate(members):
            out[i] = (offset + j) % folds
        offset += len(members)
    return out


def knn_vote(dist: np.ndarray, train_roles: np.ndarray, tiebreak_keys: Sequence,
             k: int = 4) -> int:
    """Majority role among the ``k`` nearest training points.

    Neighbour ties are ordered by ``tiebreak_keys``. Vote ties go to the
    role with the smaller distance sum, then the smaller role id.
    """
    k = min(k, len(dist))
    kth = np.partition(dist, k - 1)[k - 1]
    cand = np.flatnonzero(dist <= kth)
    if len(cand) > k:
        keys = np.array([str(tiebreak_keys[i]) for i in cand])
        cand = cand[np.lexsort((keys, dist[cand]))]
    else:
        cand = cand[np.argsort(dist[cand], kind="stable")]
    order = cand[:k]
    roles = train_roles[order]
    tally: dict[int, list] = {}
    for r, d in zip(roles, dist[order]):
        entry = tally.setdefault(int(r), [0, 0.0])
        entry[0] += 1
        entry[1] += float(d)
    return min(tally, key=lambda r: (-tally[r][0], tally[r][1], r))


def knn_cv_classify(emb, truth, k: int = 4, folds: int = 10, seed: int = 0,
                    labels: Optional[Sequence[str]] = None,
                    average: str = "weighted") -> tuple[float, float]:
    """Cross-validated k-NN accuracy and F1."""
    X = _matrix(emb)
    truth = np.asarray(truth)
    if labels is None:
        labels = emb.labels if isinstance(emb, EmbeddingSet) else [str(i) for i in range(len(X))]
    if len(X) < folds:
        raise ValueError(f"need at least {folds} nodes for {folds}-fold validation")
    _, counts = np.unique(truth, return_counts=True)
    if counts.min() < 2:
        raise ValueError("every role needs at least two members")
    fold = stratified_folds(labels, truth, folds, seed)
    D = pairwise_distances(X)
    pred = np.empty_like(truth)
    label_arr = np.asarray(labels)
    for f in range(folds):
        test = np.flatnonzero(fold == f)
        train = np.flatnonzero(fold != f)
        for i in test:
            pred[i] = knn_vote(D[i, train], truth[train], label_arr[train], k)
    return float(np.mean(pred == truth)), f1(truth, pred, average)


def crossgraph_knn(embeddings: Sequence[np.ndarray], roles: Sequence[np.ndarray],
                   k: int = 4, folds: int = 10, seed: int = 0,
                   average: str = "weighted") -> tuple[float, float]:
    """k-NN transfer across graphs: graphs are split into folds and each
    held-out node is labelled from nodes of graphs in the other folds."""
    m = len(embeddings)
    if m < folds:
        raise ValueError(f"need at least {folds} graphs")
    fold_of_graph = np.random.default_rng(seed).permutation(m) % folds
    X = np.vstack(embeddings)
    y = np.concatenate(roles)
    gid = np.concatenate([np.full(len(e), i) for i, e in enumerate(embeddings)])
    keys = np.array([f"{g}:{j}" for g, e in enumerate(embeddings) for j in range(len(e))])
    node_fold = fold_of_graph[gid]
    sq = (X ** 2).sum(axis=1)
    pred = np.empty_like(y)
    for f in range(folds):
        test = np.flatnonzero(node_fold == f)
        train = np.flatnonzero(node_fold != f)
        d2 = sq[test, None] + sq[None, train] - 2.0 * X[test] @ X[train].T
        dist = np.sqrt(np.maximum(d2, 0.0))
        for row, i in enumerate(test):
            pred[i] = knn_vote(dist[row], y[train], keys[train], k)
    return float(np.mean(pred == y)), f1(y, pred, average)


def mirror_accuracy(emb, mirror) -> float:
    """Share of nodes whose nearest other node is their mirror image.

    An exact distance tie counts in favour of the mirror.
    """
    X = _matrix(emb)
    mirror = np.asarray(mirror)
    D = pairwise_distances(X)
    np.fill_diagonal(D, np.inf)
    hits = D[np.arange(len(X)), mirror] <= D.min(axis=1)
    return float(hits.mean())


METRICS = ("homogeneity", "completeness", "silhouette", "accuracy", "f1")


@dataclass
class MetricReport:
    name: str
    trials: int
    rows: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def mean(self, metric: str) -> float:
        vals = [r[metric] for r in self.rows if r.get(metric) is not None]
        return float(np.mean(vals)) if vals else math.nan

    def std(self, metric: str) -> float:
        vals = [r[metric] for r in self.rows if r.get(metric) is not None]
        return float(np.std(vals)) if vals else math.nan

    def summary(self) -> dict:
        return {m: self.mean(m) for m in METRICS}

    def table(self) -> str:
        lines = [f"{self.name}: {len(self.rows)}/{self.trials} trials"
                 + (f", {len(self.failures)} failed" if self.failures else "")]
        lines.append(f"{'metric':<14}{'mean':>10}{'std':>10}")
        for m in METRICS:
            lines.append(f"{m:<14}{self.mean(m):>10.4f}{self.std(m):>10.4f}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        cols = ["trial", "seed"] + list(METRICS)
        out = [",".join(cols)]
        for r in self.rows:
            out.append(",".join(_fmt(r.get(c)) for c in cols))
        out.append(",".join(["mean", ""] + [_fmt(self.mean(m)) for m in METRICS]))
        out.append(",".join(["std", ""] + [_fmt(self.std(m)) for m in METRICS]))
        for f in self.failures:
            out.append(f"# trial {f['trial']} (seed {f['seed']}) failed: {f['error']}")
        return "\n".join(out) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Per-trial seeds: the first word of each spawned ``SeedSequence`` child."""
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(trials)]


def evaluate_roles(emb: EmbeddingSet, roles, seed: int = 0, k: int = 4,
                   folds: int = 10) -> dict:
    roles = np.asarray(roles)
    n_roles = len(np.unique(roles))
    clusters = agglomerative_cluster(emb, n_roles).assignments
    h, c = homogeneity_completeness(roles, clusters)
    sil = silhouette(emb, clusters) if n_roles >= 2 else math.nan
    acc, f = knn_cv_classify(emb, roles, k=k, folds=folds, seed=seed)
    return {"homogeneity": h, "completeness": c, "silhouette": sil,
            "accuracy": acc, "f1": f}


def run_benchmark(recipe: str | Callable, trials: int = 25, seed: int = 0,
                  cfg: EmbeddingConfig = EmbeddingConfig(), mode: str = "auto",
                  K: int = 30, threads: Optional[int] = None) -> MetricReport:
    """Regenerate the benchmark for every trial, embed, and score it.

    Trials may run on ``threads`` workers; rows come back in trial order.
    """
    from .synthgen import generate

    make = (lambda s: generate(recipe, s)) if isinstance(recipe, str) else recipe
    name = recipe if isinstance(recipe, str) else getattr(recipe, "__name__", "custom")

    def one(t, s):
        try:
            bench = make(s)
            emb = embed_all(bench.graph, cfg, mode=mode, K=K)
            return {"trial": t, "seed": s, **evaluate_roles(emb, bench.roles, seed=s)}, None
        except Exception as exc:  # recorded, not hidden
            log.warning("trial %d failed: %s", t, exc)
            return None, {"trial": t, "seed": s, "error": f"{type(exc).__name__}: {exc}"}

    seeds = trial_seeds(seed, trials)
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(trials), seeds))
    else:
        results = [one(t, s) for t, s in enumerate(seeds)]
    report = MetricReport(name, trials)
    for row, failure in results:
        if row is not None:
            report.rows.append(row)
        else:
            report.failures.append(failure)
    return report
