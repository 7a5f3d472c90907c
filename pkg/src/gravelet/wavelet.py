"""Heat wavelets at one or many scales, automatic scale range, diagnostics."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import Graph, laplacian, require_connected
from .spectral import (
    DEFAULT_ORDER,
    SpectrumInfo,
    WaveletColumn,
    WaveletMatrix,
    chebyshev_coefficients,
    chebyshev_heat_operator,
    dense_heat_operator,
    extremal_eigenvalues,
)

__all__ = [
    "ScaleRange",
    "WaveletColumn",
    "WaveletMatrix",
    "select_scales",
    "heat_wavelets",
    "delta_a",
    "offdiag_variance",
    "convergence_bounds_check",
    "admissible_scale",
    "dump_wavelets_csv",
]

log = logging.getLogger(__name__)

ETA = 0.85
GAMMA = 0.95


@dataclass(frozen=True)
class ScaleRange:
    s_min: float
    s_max: float
    eta: float
    gamma: float
    J: int
    scales: tuple[float, ...]


def geometric_scales(s_min: float, s_max: float, J: int) -> tuple[float, ...]:
    if J < 1:
        raise ValueError("J must be >= 1")
    if J == 1:
        return (math.sqrt(s_min * s_max),)
    scales = np.geomspace(s_min, s_max, J)
    scales[0], scales[-1] = s_min, s_max
    return tuple(float(s) for s in scales)


def select_scales(spec: SpectrumInfo, eta: float = ETA, gamma: float = GAMMA,
                  J: int = 2) -> ScaleRange:
    """Scale range from the extremal Laplacian eigenvalues.

    The diffusion is considered localized while the diagonal coefficient's
    distance to its limit ``1/N`` keeps at least a fraction ``eta`` of its
    starting value, and spread once it has lost ``1 - gamma`` of it. Both
    conditions are solved against the geometric mean of ``lambda2`` and
    ``lambdaN``.
    """
    if not (0 < eta < 1 and 0 < gamma < 1):
        raise ValueError("eta and gamma must lie in (0, 1)")
    if eta > gamma:
        raise ValueError("eta must not exceed gamma")
    if spec.lambda2 <= 0:
        raise ValueError("lambda2 must be positive (graph disconnected)")
    rate = math.sqrt(spec.lambda2 * spec.lambdaN)
    s_min = -math.log(gamma) / rate
    s_max = -math.log(eta) / rate
    return ScaleRange(s_min, s_max, eta, gamma, J, geometric_scales(s_min, s_max, J))


def admissible_scale(lambda2: float, K: int = DEFAULT_ORDER, eps: float = 1e-6) -> float:
    """Largest scale whose order-``K`` Taylor residual stays below ``eps``."""
    log_fact = math.lgamma(K + 2)
    return math.exp((log_fact + math.log(eps)) / (K + 1)) / lambda2


def heat_wavelets(
    g: Graph,
    s: float,
    mode: str = "auto",
    K: int = DEFAULT_ORDER,
    spec: Optional[SpectrumInfo] = None,
    dense_threshold: int = 1024,
) -> WaveletMatrix:
    """All ``N`` heat wavelets of ``g`` at scale ``s``.

    ``mode`` is ``dense`` (exact eigendecomposition), ``chebyshev``
    (sparse polynomial filtering) or ``auto`` (dense up to
    ``dense_threshold`` nodes).
    """
    if mode not in ("auto", "dense", "chebyshev"):
        raise ValueError(f"unknown wavelet mode {mode!r}")
    require_connected(g)
    if s < 0:
        raise ValueError("scale must be non-negative")
    L = laplacian(g)
    if mode == "auto":
        mode = "dense" if g.n <= dense_threshold else "chebyshev"
    if spec is None or (mode == "dense" and not spec.has_decomposition):
        spec = extremal_eigenvalues(L, "dense" if mode == "dense" else "auto",
                                    dense_threshold)
    if mode == "dense":
        return dense_heat_operator(spec, s)
    filt = chebyshev_coefficients(s, spec.chebyshev_bound, K)
    return chebyshev_heat_operator(L, filt)


def _diag(w) -> np.ndarray:
    if isinstance(w, WaveletMatrix):
        return w.diagonal()
    return np.asarray(w, dtype=float)


def delta_a(wm, a: int) -> float:
    """``|Psi_aa - 1/N|``; accepts a WaveletMatrix or a per-scale diagonal."""
    d = _diag(wm)
    return abs(float(d[a]) - 1.0 / len(d))


def offdiag_variance(wm: WaveletMatrix, a: int) -> float:
    """Variance of the wavelet at ``a`` with its own coefficient left out."""
    col = wm.column(a).coeffs
    n = len(col)
    if n < 2:
        raise ValueError("need N >= 2")
    off = np.delete(col, a)
    return float(np.mean((off - off.mean()) ** 2))


def convergence_bounds_check(g: Graph, a: int, s: int,
                             spec: Optional[SpectrumInfo] = None) -> tuple[float, float, float]:
    """``(exp(-lambdaN s) D0, Ds, exp(-lambda2 s) D0)`` for integer ``s``.

    ``D`` is the distance of the diagonal coefficient to ``1/N``. Raises
    ``AssertionError`` if the value falls outside the bracket.
    """
    if s < 0 or int(s) != s:
        raise ValueError("s must be a non-negative integer")
    if spec is None or not spec.has_decomposition:
        spec = extremal_eigenvalues(laplacian(g), "dense")
    d0 = delta_a(dense_heat_operator(spec, 0.0), a)
    ds = delta_a(dense_heat_operator(spec, float(s)), a)
    lower = math.exp(-spec.lambdaN * s) * d0
    upper = math.exp(-spec.lambda2 * s) * d0
    slack = 1e-12
    assert lower - slack <= ds <= upper + slack, (lower, ds, upper)
    return lower, ds, upper


def dump_wavelets_csv(wm: WaveletMatrix, path, labels: Optional[Sequence[str]] = None,
                      nonzero_only: bool = True) -> None:
    """Write ``node,m,coefficient`` rows for inspection."""
    labels = labels or [str(i) for i in range(wm.n)]
    data = sp.csc_matrix(wm.data) if not sp.issparse(wm.data) else wm.data.tocsc()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "m", "coefficient"])
        for a in range(wm.n):
            lo, hi = data.indptr[a], data.indptr[a + 1]
            for m, v in zip(data.indices[lo:hi], data.data[lo:hi]):
                if nonzero_only and v == 0:
                    continue
                w.writerow([labels[a], labels[m], repr(float(v))])
