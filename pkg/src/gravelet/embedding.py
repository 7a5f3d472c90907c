"""Structural embeddings from characteristic functions of heat wavelets.

Each wavelet column is read as an empirical distribution of ``N``
coefficients. Its characteristic function is sampled at ``d`` points and
the real and imaginary parts, over ``J`` scales, form the embedding.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph, laplacian, require_connected
from .spectral import (
    DEFAULT_ORDER,
    DENSE_THRESHOLD,
    SpectrumInfo,
    WaveletColumn,
    chebyshev_coefficients,
    chebyshev_heat_operator,
    dense_heat_operator,
    extremal_eigenvalues,
)
from .wavelet import ETA, GAMMA, admissible_scale, select_scales

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingConfig:
    d: int = 50
    t_max: float = 100.0
    eta: float = ETA
    gamma: float = GAMMA
    J: int = 2
    scales: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.scales is not None:
            scales = tuple(float(s) for s in self.scales)
            if not scales or any(s < 0 for s in scales):
                raise ValueError("explicit scales must be a nonempty list of s >= 0")
            object.__setattr__(self, "scales", scales)

    @property
    def sample_points(self) -> np.ndarray:
        # t = 0 is skipped: phi(0) == 1 for every node
        return self.t_max * np.arange(1, self.d + 1) / self.d

    @property
    def num_scales(self) -> int:
        return len(self.scales) if self.scales is not None else self.J

    @property
    def dim(self) -> int:
        return 2 * self.d * self.num_scales


@dataclass(frozen=True)
class Embedding:
    node: int
    vector: np.ndarray


@dataclass
class EmbeddingSet:
    config: EmbeddingConfig
    scales: tuple[float, ...]
    labels: tuple[str, ...]
    matrix: np.ndarray
    mode: str = "dense"
    order: int = DEFAULT_ORDER
    spectrum: Optional[SpectrumInfo] = field(default=None, repr=False)
    graph_hash: str = ""

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def __getitem__(self, a: int) -> Embedding:
        return Embedding(a, self.matrix[a])

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown node label {label!r}") from None


def char_function(col, t: float) -> tuple[float, float]:
    """Empirical characteristic function of a wavelet column at ``t``."""
    coeffs = col.coeffs if isinstance(col, WaveletColumn) else np.asarray(col)
    phase = t * coeffs
    return float(np.mean(np.cos(phase))), float(np.mean(np.sin(phase)))


def _charfun_dense(psi: np.ndarray, ts: np.ndarray) -> np.ndarray:
    n = psi.shape[1]
    out = np.empty((n, 2 * len(ts)))
    for i, t in enumerate(ts):
        phase = t * psi
        out[:, 2 * i] = np.cos(phase).mean(axis=0)
        out[:, 2 * i + 1] = np.sin(phase).mean(axis=0)
    return out


def _charfun_sparse(psi: sp.csc_matrix, ts: np.ndarray) -> np.ndarray:
    # zero atoms contribute cos(0) = 1 and sin(0) = 0: only the stored
    # entries are summed, the zeros are added back as a count
    n_rows, n_cols = psi.shape
    nnz = np.diff(psi.indptr)
    cols = np.repeat(np.arange(n_cols), nnz)
    zeros = n_rows - nnz
    out = np.empty((n_cols, 2 * len(ts)))
    for i, t in enumerate(ts):
        phase = t * psi.data
        re = np.bincount(cols, weights=np.cos(phase), minlength=n_cols)
        im = np.bincount(cols, weights=np.sin(phase), minlength=n_cols)
        out[:, 2 * i] = (re + zeros) / n_rows
        out[:, 2 * i + 1] = im / n_rows
    return out


def resolve_scales(cfg: EmbeddingConfig, spec: SpectrumInfo) -> tuple[float, ...]:
    if cfg.scales is not None:
        return cfg.scales
    return select_scales(spec, cfg.eta, cfg.gamma, cfg.J).scales


def embed_all(
    g: Graph,
    cfg: EmbeddingConfig = EmbeddingConfig(),
    mode: str = "auto",
    K: int = DEFAULT_ORDER,
    threads: Optional[int] = None,
    dense_threshold: int = DENSE_THRESHOLD,
    block: int = 1024,
) -> EmbeddingSet:
    """Embed every node of ``g``.

    ``mode`` selects the wavelet route: ``dense``, ``chebyshev`` or
    ``auto``. On the Chebyshev route, node blocks are processed
    independently and may run on ``threads`` workers; results do not depend
    on the worker count.
    """
    if mode not in ("auto", "dense", "chebyshev"):
        raise ValueError(f"unknown mode {mode!r}")
    require_connected(g)
    if mode == "auto":
        mode = "dense" if g.n <= dense_threshold else "chebyshev"
    L = laplacian(g)
    spec = extremal_eigenvalues(L, "dense" if mode == "dense" else "auto",
                                dense_threshold)
    scales = resolve_scales(cfg, spec)
    if mode == "chebyshev" and max(scales) > admissible_scale(spec.lambda2, K):
        log.info("scale %.4g exceeds the order-%d locality bound %.4g; wavelets "
                 "may reach beyond %d hops", max(scales), K,
                 admissible_scale(spec.lambda2, K), K)
    ts = cfg.sample_points
    parts = []
    for s in scales:
        if mode == "dense":
            parts.append(_charfun_dense(dense_heat_operator(spec, s).data, ts))
            continue
        filt = chebyshev_coefficients(s, spec.chebyshev_bound, K)
        starts = range(0, g.n, block)

        def run(start, filt=filt):
            nodes = np.arange(start, min(start + block, g.n))
            wm = chebyshev_heat_operator(L, filt, nodes=nodes)
            return _charfun_sparse(wm.data, ts)

        if threads is not None and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                blocks = list(pool.map(run, starts))
        else:
            blocks = [run(st) for st in starts]
        parts.append(np.vstack(blocks))
    matrix = np.hstack(parts)
    return EmbeddingSet(cfg, tuple(scales), g.node_labels, matrix, mode, K,
                        spec, g.content_hash())


def structural_distance(e1, e2) -> float:
    v1 = e1.vector if isinstance(e1, Embedding) else np.asarray(e1, dtype=float)
    v2 = e2.vector if isinstance(e2, Embedding) else np.asarray(e2, dtype=float)
    if v1.shape != v2.shape:
        raise ValueError(f"embedding dimensions differ: {v1.shape} vs {v2.shape}")
    return float(np.linalg.norm(v1 - v2))


def pairwise_distances(X: np.ndarray, Y: Optional[np.ndarray] = None) -> np.ndarray:
    """Euclidean distance matrix, computed from differences (no cancellation)."""
    Y = X if Y is None else Y
    out = np.empty((len(X), len(Y)))
    for i in range(len(X)):
        out[i] = np.sqrt(((Y - X[i]) ** 2).sum(axis=1))
    return out


def nearest_neighbors(emb: EmbeddingSet, a: int, k: int,
                      exclude: Iterable[int] = ()) -> list[tuple[int, float]]:
    """The ``k`` nodes closest to ``a``; ties go to the smaller index.

    ``a`` itself is never returned.
    """
    n = len(emb)
    blocked = set(int(x) for x in exclude) | {a}
    candidates = np.array([i for i in range(n) if i not in blocked], dtype=np.int64)
    if not 1 <= k <= len(candidates):
        raise ValueError(f"k={k} out of range for {len(candidates)} candidates")
    diffs = emb.matrix[candidates] - emb.matrix[a]
    dist = np.sqrt((diffs ** 2).sum(axis=1))
    order = np.lexsort((candidates, dist))[:k]
    return [(int(candidates[i]), float(dist[i])) for i in order]


def check_bounds(emb: EmbeddingSet, slack: float = 1e-12) -> float:
    """Largest ``|phi|`` over all nodes, scales and samples; asserts ``<= 1``."""
    re = emb.matrix[:, 0::2]
    im = emb.matrix[:, 1::2]
    mod = float(np.sqrt(re ** 2 + im ** 2).max()) if emb.matrix.size else 0.0
    if mod > 1 + slack:
        raise AssertionError(f"|phi| = {mod} exceeds 1")
    return mod


def column_names(num_scales: int, d: int) -> list[str]:
    names = []
    for j in range(1, num_scales + 1):
        for i in range(1, d + 1):
            names += [f"s{j}_t{i}_re", f"s{j}_t{i}_im"]
    return names
