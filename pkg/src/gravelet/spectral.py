"""Laplacian spectra and Chebyshev filtering of impulse signals.

Two routes compute the heat operator ``exp(-s L)``: an exact one through a
dense eigendecomposition, and a Chebyshev polynomial expansion that only
needs sparse products with ``L``. The dense route is the reference the
polynomial route is checked against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import Laplacian

log = logging.getLogger(__name__)

DENSE_THRESHOLD = 1024
DEFAULT_ORDER = 30
BOUND_INFLATION = 1.01
EIG_RTOL = 1e-6
EIG_MAXITER = 10_000
EPS_CONNECTIVITY = 1e-9
TRUNCATE_BELOW = 1e-10

Kernel = Callable[[np.ndarray, float], np.ndarray]


def heat_kernel(lam: np.ndarray, s: float) -> np.ndarray:
    return np.exp(-s * lam)


class SpectralError(RuntimeError):
    pass


class EigenConvergenceError(SpectralError):
    def __init__(self, message: str, iterations: int, converged: int):
        super().__init__(message)
        self.iterations = iterations
        self.converged = converged


class NearlyDisconnectedError(SpectralError):
    def __init__(self, lambda2: float, lambdaN: float):
        super().__init__(
            f"graph is disconnected or nearly so: lambda2={lambda2:.3e} "
            f"< {EPS_CONNECTIVITY:g} * lambdaN={lambdaN:.3e}"
        )
        self.lambda2 = lambda2
        self.lambdaN = lambdaN


class SpectralBoundError(SpectralError):
    """The Chebyshev domain does not cover the spectrum of ``L``."""


@dataclass(frozen=True)
class SpectrumInfo:
    lambda2: float
    lambdaN: float
    method: str
    eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def has_decomposition(self) -> bool:
        return self.eigenvectors is not None

    @property
    def n(self) -> int:
        return 0 if self.eigenvalues is None else len(self.eigenvalues)

    @property
    def chebyshev_bound(self) -> float:
        return BOUND_INFLATION * self.lambdaN


@dataclass(frozen=True)
class WaveletColumn:
    node: int
    scale: float
    coeffs: np.ndarray
    method: str


@dataclass(frozen=True)
class WaveletMatrix:
    """Heat wavelets at one scale; column ``a`` is the wavelet centred at ``a``.

    ``data`` is a dense array on the exact route and a CSC matrix on the
    polynomial route.
    """

    scale: float
    data: object
    method: str

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def column(self, a: int) -> WaveletColumn:
        if sp.issparse(self.data):
            col = self.data[:, [a]].toarray().ravel()
        else:
            col = np.array(self.data[:, a])
        return WaveletColumn(a, self.scale, col, self.method)

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.data.diagonal()).ravel()

    def toarray(self) -> np.ndarray:
        if sp.issparse(self.data):
            return self.data.toarray()
        return np.asarray(self.data)


def extremal_eigenvalues(
    L: Laplacian,
    mode: str = "auto",
    dense_threshold: int = DENSE_THRESHOLD,
) -> SpectrumInfo:
    """Estimate ``lambda2`` and ``lambdaN`` of ``L``.

    ``dense`` also returns the full eigendecomposition. ``iterative`` uses
    Lanczos: largest-algebraic for ``lambdaN`` and shift-invert just below
    zero for ``lambda2``.
    """
    if mode not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown eigen mode {mode!r}")
    n = L.n
    if n < 2:
        raise SpectralError("need at least two nodes for lambda2")
    if mode == "auto":
        mode = "dense" if n <= dense_threshold else "iterative"
    # ARPACK needs k < n - 1; tiny graphs go dense regardless
    if mode == "iterative" and n < 4:
        mode = "dense"

    if mode == "dense":
        w, U = np.linalg.eigh(L.matrix.toarray())
        lam2, lamN = float(w[1]), float(w[-1])
        info = SpectrumInfo(lam2, lamN, "dense", w, U)
    else:
        lam2, lamN = _lanczos_extremes(L.matrix)
        info = SpectrumInfo(lam2, lamN, "iterative")

    if lamN <= 0 or info.lambda2 < EPS_CONNECTIVITY * lamN:
        raise NearlyDisconnectedError(info.lambda2, lamN)
    return info


def _lanczos_extremes(M: sp.spmatrix) -> tuple[float, float]:
    n = M.shape[0]
    v0 = np.random.default_rng(0).standard_normal(n)
    try:
        top = spla.eigsh(M, k=1, which="LA", tol=EIG_RTOL * 1e-3,
                         maxiter=EIG_MAXITER, v0=v0, return_eigenvectors=False)
        lamN = float(top[0])
        sigma = -1e-7 * lamN
        low = spla.eigsh(M.tocsc(), k=2, sigma=sigma, which="LM",
                         tol=EIG_RTOL * 1e-3, maxiter=EIG_MAXITER, v0=v0,
                         return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise EigenConvergenceError(
            f"Lanczos did not converge within {EIG_MAXITER} iterations "
            f"({len(exc.eigenvalues)} eigenvalues converged)",
            EIG_MAXITER, len(exc.eigenvalues),
        ) from exc
    lam2 = float(np.sort(low)[1])
    return max(lam2, 0.0), lamN


def dense_heat_operator(spec: SpectrumInfo, s: float,
                        kernel: Kernel = heat_kernel) -> WaveletMatrix:
    if not spec.has_decomposition:
        raise SpectralError("dense heat operator needs the full eigendecomposition")
    if s < 0:
        raise ValueError("scale must be non-negative")
    U = spec.eigenvectors
    g = kernel(spec.eigenvalues, s)
    psi = (U * g) @ U.T
    psi = 0.5 * (psi + psi.T)
    return WaveletMatrix(s, psi, "dense")


@dataclass(frozen=True)
class ChebyshevFilter:
    order: int
    coeffs: np.ndarray
    lambdaN_bound: float
    scale: float
    tol_cheb: float
    at_zero: float = 1.0

    def __call__(self, lam) -> np.ndarray:
        x = 2.0 * np.asarray(lam, dtype=float) / self.lambdaN_bound - 1.0
        return np.polynomial.chebyshev.chebval(x, self.coeffs)


def chebyshev_coefficients(s: float, lambdaN_bound: float, K: int = DEFAULT_ORDER,
                           kernel: Kernel = heat_kernel) -> ChebyshevFilter:
    """Degree-``K`` Chebyshev expansion of ``kernel(., s)`` on ``[0, bound]``.

    Coefficients come from Gauss-Chebyshev quadrature; ``coeffs[0]`` already
    carries the usual factor 1/2, so the expansion is ``sum c_k T_k``.
    """
    if s < 0 or lambdaN_bound <= 0 or K < 1:
        raise ValueError("need s >= 0, lambdaN_bound > 0, K >= 1")
    M = max(K + 1, 64)
    theta = np.pi * (np.arange(M) + 0.5) / M
    lam = 0.5 * lambdaN_bound * (np.cos(theta) + 1.0)
    fvals = kernel(lam, s)
    k = np.arange(K + 1)
    c = (2.0 / M) * np.cos(np.outer(k, theta)) @ fvals
    c[0] *= 0.5

    grid = np.linspace(0.0, lambdaN_bound, max(4 * K, 2048))
    x = 2.0 * grid / lambdaN_bound - 1.0
    err = np.max(np.abs(np.polynomial.chebyshev.chebval(x, c) - kernel(grid, s)))
    at_zero = float(kernel(np.zeros(1), s)[0])
    if err > 1e-6:
        log.warning("Chebyshev order %d approximates the kernel at scale %.4g only to "
                    "%.2e; raise the order for accurate wavelets", K, s, err)
    return ChebyshevFilter(K, c, float(lambdaN_bound), float(s), float(err), at_zero)


def _chebyshev_series(M: sp.spmatrix, filt: ChebyshevFilter, V):
    """Evaluate ``p(L) V`` by the three-term recurrence.

    ``V`` is a dense array or a sparse matrix with unit-norm columns; column
    norms of ``T_k(L~) V`` are monitored to catch a domain that is too small.
    """
    n = M.shape[0]
    scaled = ((2.0 / filt.lambdaN_bound) * M - sp.identity(n, format="csr")).tocsr()
    sparse_mode = sp.issparse(V)

    def norms(T):
        if sparse_mode:
            return np.sqrt(np.asarray(T.multiply(T).sum(axis=0)).ravel())
        return np.linalg.norm(T, axis=0)

    ref = norms(V)
    t_prev = V
    out = filt.coeffs[0] * V
    if filt.order == 0:
        return out
    t_cur = scaled @ V
    out = out + filt.coeffs[1] * t_cur
    for k in range(2, filt.order + 1):
        t_next = 2.0 * (scaled @ t_cur) - t_prev
        out = out + filt.coeffs[k] * t_next
        t_prev, t_cur = t_cur, t_next
        if k % 5 == 0 or k == filt.order:
            if np.any(norms(t_cur) > ref * (1.0 + 1e-6) + 1e-12):
                raise SpectralBoundError(
                    "Chebyshev recurrence is growing: the spectral bound "
                    f"{filt.lambdaN_bound:.6g} is below lambdaN; inflate the bound"
                )
    return out


def apply_filter(L: Laplacian, filt: ChebyshevFilter, a: int) -> WaveletColumn:
    """Wavelet centred at node ``a`` via sparse matrix-vector products only."""
    if not 0 <= a < L.n:
        raise IndexError(f"node index {a} out of range")
    delta = np.zeros(L.n)
    delta[a] = 1.0
    col = _chebyshev_series(L.matrix, filt, delta)
    return WaveletColumn(a, filt.scale, col, "chebyshev")


def chebyshev_heat_operator(L: Laplacian, filt: ChebyshevFilter,
                            nodes=None, truncate: float = TRUNCATE_BELOW,
                            block: int = 2048) -> WaveletMatrix:
    """All wavelet columns (or those in ``nodes``) on the polynomial route.

    Columns are built in blocks of sparse impulses, so each column only ever
    touches the ``K``-hop ball around its node. Entries below ``truncate`` in
    magnitude are dropped and each column is rescaled to unit mass.
    """
    n = L.n
    nodes = np.arange(n) if nodes is None else np.asarray(nodes, dtype=np.int64)
    blocks = []
    for start in range(0, len(nodes), block):
        idx = nodes[start:start + block]
        V = sp.csc_matrix((np.ones(len(idx)), (idx, np.arange(len(idx)))),
                          shape=(n, len(idx)))
        P = sp.csc_matrix(_chebyshev_series(L.matrix, filt, V))
        if truncate > 0:
            P.data[np.abs(P.data) < truncate] = 0.0
            P.eliminate_zeros()
        mass = np.asarray(P.sum(axis=0)).ravel()
        mass[np.abs(mass) < 1e-300] = filt.at_zero
        P = P @ sp.diags(filt.at_zero / mass)
        blocks.append(sp.csc_matrix(P))
    data = sp.hstack(blocks, format="csc") if blocks else sp.csc_matrix((n, 0))
    return WaveletMatrix(filt.scale, data, "chebyshev")
