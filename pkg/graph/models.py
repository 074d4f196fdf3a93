"""
Immutable graph data model.

Provides:
- Graph: undirected attributed graph with optional node labels
- UnlabeledGraph: label-free view handed to adaptation
- PredictionMatrix: row-stochastic per-node class probabilities
- GraphDataError: raised for any invalid graph input

Adjacency is stored as a canonical CSR matrix: symmetric, no self-loops,
strictly increasing column indices within each row.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class GraphDataError(ValueError):
    """Exception raised for invalid graph files or graph contents."""
    pass


# ────────────────────────────────────────────────────────────────────────────────
# Shared structure
# ────────────────────────────────────────────────────────────────────────────────

class _GraphStructure:
    """Structure queries shared by labeled and unlabeled graphs."""

    adjacency: sp.csr_matrix
    features: np.ndarray
    node_ids: tuple[str, ...] | None

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        """Undirected edge count (each edge is stored in both directions)."""
        return self.adjacency.nnz // 2

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def indptr(self) -> np.ndarray:
        return self.adjacency.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.adjacency.indices

    def degrees(self) -> np.ndarray:
        """degree[i] = |N(i)|."""
        return np.diff(self.adjacency.indptr).astype(np.int64)

    def neighbors(self, node: int) -> np.ndarray:
        return self.adjacency.indices[self.adjacency.indptr[node]:self.adjacency.indptr[node + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        pos = np.searchsorted(row, v)
        return bool(pos < len(row) and row[pos] == v)

    def edge_array(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v, sorted lexicographically."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.stack([coo.row[order], coo.col[order]], axis=1).astype(np.int64)

    @cached_property
    def gcn_adjacency(self) -> sp.csr_matrix:
        """Symmetrically normalized D^-1/2 (A + I) D^-1/2."""
        a_hat = self.adjacency + sp.identity(self.n_nodes, format="csr")
        inv_sqrt = 1.0 / np.sqrt(np.asarray(a_hat.sum(axis=1)).ravel())
        scale = sp.diags(inv_sqrt)
        return (scale @ a_hat @ scale).tocsr()

    @cached_property
    def mean_adjacency(self) -> sp.csr_matrix:
        """Row-normalized D^-1 A; isolated nodes get an all-zero row."""
        deg = self.degrees().astype(np.float64)
        inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        return (sp.diags(inv) @ self.adjacency).tocsr()

    @cached_property
    def attention_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        CSR layout of A + I used by attention layers.

        Returns:
            (indptr, indices, rows) where rows[e] is the target node of edge e.
        """
        a_hat = (self.adjacency + sp.identity(self.n_nodes, format="csr")).tocsr()
        a_hat.sort_indices()
        rows = np.repeat(np.arange(self.n_nodes), np.diff(a_hat.indptr))
        return a_hat.indptr.astype(np.int64), a_hat.indices.astype(np.int64), rows


def _validate_structure(adjacency: sp.csr_matrix, features: np.ndarray, node_ids) -> None:
    n = adjacency.shape[0]
    if adjacency.shape != (n, n):
        raise GraphDataError(f"adjacency must be square, got {adjacency.shape}")
    if features.ndim != 2:
        raise GraphDataError(f"features must be a 2-D matrix, got {features.ndim}-D")
    if features.shape[0] != n:
        raise GraphDataError(f"feature-row count {features.shape[0]} != node count {n}")
    if not np.all(np.isfinite(features)):
        raise GraphDataError("features contain NaN or Inf")
    if adjacency.diagonal().any():
        raise GraphDataError("adjacency contains self-loops")
    if (adjacency != adjacency.T).nnz:
        raise GraphDataError("adjacency is not symmetric")
    for node in range(n):
        row = adjacency.indices[adjacency.indptr[node]:adjacency.indptr[node + 1]]
        if len(row) > 1 and np.any(np.diff(row) <= 0):
            raise GraphDataError(f"neighbor list of node {node} is not strictly increasing")
    if node_ids is not None and len(node_ids) != n:
        raise GraphDataError(f"{len(node_ids)} node ids for {n} nodes")


# ────────────────────────────────────────────────────────────────────────────────
# Graph types
# ────────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class UnlabeledGraph(_GraphStructure):
    """
    Target graph as seen by adaptation: structure and features only.

    There is no label attribute, so code holding this value cannot read
    target labels.
    """
    adjacency: sp.csr_matrix
    features: np.ndarray
    node_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        _validate_structure(self.adjacency, self.features, self.node_ids)


@dataclass(frozen=True, eq=False)
class Graph(_GraphStructure):
    """
    Undirected attributed graph with optional labels.

    Attributes:
        adjacency: Canonical symmetric CSR adjacency (both directions stored).
        features: (n, d) float64 feature matrix.
        n_classes: Number of classes k.
        labels: Optional length-n integer labels in [0, k).
        node_ids: Optional external string ids.
    """
    adjacency: sp.csr_matrix
    features: np.ndarray
    n_classes: int
    labels: np.ndarray | None = None
    node_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        _validate_structure(self.adjacency, self.features, self.node_ids)
        if self.n_classes < 1:
            raise GraphDataError(f"n_classes must be >= 1, got {self.n_classes}")
        if self.labels is not None:
            if self.labels.shape != (self.n_nodes,):
                raise GraphDataError(f"{self.labels.shape[0]} labels for {self.n_nodes} nodes")
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
                raise GraphDataError(f"labels must lie in [0, {self.n_classes})")

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    def unlabeled(self) -> UnlabeledGraph:
        """Drop labels, sharing the immutable structure arrays."""
        return UnlabeledGraph(adjacency=self.adjacency, features=self.features, node_ids=self.node_ids)

    @classmethod
    def from_edges(
        cls,
        n_nodes: int,
        edges: np.ndarray | Sequence[tuple[int, int]],
        features: np.ndarray,
        n_classes: int,
        labels: np.ndarray | None = None,
        node_ids: Sequence[str] | None = None
    ) -> "Graph":
        """
        Build a graph from an edge list.

        Directed input is symmetrized, duplicates are removed and self-loops
        are dropped with a warning.

        Raises:
            GraphDataError: If an endpoint is outside [0, n_nodes) or any
                            other validation fails.
        """
        pairs = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n_nodes):
            bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n_nodes).any(axis=1)][0]
            raise GraphDataError(
                f"node index out of range: edge ({bad[0]}, {bad[1]}) for {n_nodes} nodes"
            )

        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            logger.warning(f"Dropped {int(loops.sum())} self-loop(s)")
            pairs = pairs[~loops]

        both = np.concatenate([pairs, pairs[:, ::-1]])
        keys = np.unique(both[:, 0] * n_nodes + both[:, 1])
        rows, cols = keys // n_nodes, keys % n_nodes
        adjacency = sp.csr_matrix(
            (np.ones(len(keys)), (rows, cols)), shape=(n_nodes, n_nodes)
        )
        adjacency.sort_indices()

        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
        ids = tuple(str(x) for x in node_ids) if node_ids is not None else None

        return cls(
            adjacency=adjacency,
            features=features,
            n_classes=int(n_classes),
            labels=labels,
            node_ids=ids,
        )


# ────────────────────────────────────────────────────────────────────────────────
# Predictions
# ────────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class PredictionMatrix:
    """n x k row-stochastic class probabilities."""
    probs: np.ndarray

    def __post_init__(self):
        if self.probs.ndim != 2:
            raise GraphDataError(f"predictions must be 2-D, got shape {self.probs.shape}")
        if not np.all(np.isfinite(self.probs)) or self.probs.min(initial=0.0) < 0:
            raise GraphDataError("predictions must be finite and non-negative")
        if self.probs.size and not np.allclose(self.probs.sum(axis=1), 1.0, atol=1e-8):
            raise GraphDataError("prediction rows must sum to 1")

    @property
    def n_nodes(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    def argmax(self) -> np.ndarray:
        return self.probs.argmax(axis=1)
