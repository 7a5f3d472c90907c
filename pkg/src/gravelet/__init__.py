"""Structural node embeddings from heat-kernel graph wavelets."""

from .embedding import (
    Embedding,
    EmbeddingConfig,
    EmbeddingSet,
    embed_all,
    nearest_neighbors,
    structural_distance,
)
from .graph import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    build_graph,
    laplacian,
    largest_component,
)
from .spectral import SpectralError, extremal_eigenvalues
from .wavelet import heat_wavelets, select_scales

__version__ = "0.1.0"

__all__ = [
    "DisconnectedGraphError",
    "Embedding",
    "EmbeddingConfig",
    "EmbeddingSet",
    "Graph",
    "GraphError",
    "SpectralError",
    "build_graph",
    "embed_all",
    "extremal_eigenvalues",
    "heat_wavelets",
    "laplacian",
    "largest_component",
    "nearest_neighbors",
    "select_scales",
    "structural_distance",
]
