"""
Ring degree sequences: for each node and hop h, the sorted degrees of the
nodes exactly h hops away.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from graph.models import _GraphStructure

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RingSequences:
    """
    rings[node][h] is an ascending int64 array; every node has max_hop + 1 entries.
    """
    max_hop: int
    rings: tuple[tuple[np.ndarray, ...], ...]

    def __len__(self) -> int:
        return len(self.rings)

    def row(self, node: int) -> tuple[np.ndarray, ...]:
        return self.rings[node]

    def lengths(self, hop: int) -> np.ndarray:
        return np.array([len(r[hop]) for r in self.rings], dtype=np.int64)


def ring_sequences(g: _GraphStructure, max_hop: int) -> RingSequences:
    """
    Breadth-first rings for all nodes at once via sparse frontier products.

    The hop-h frontier matrix F_h has F_h[i, j] = 1 iff dist(i, j) = h;
    F_{h+1} = (F_h A) minus everything already visited.
    """
    if max_hop < 0:
        raise ValueError(f"max_hop must be >= 0, got {max_hop}")

    n = g.n_nodes
    deg = g.degrees()
    adjacency = g.adjacency.astype(np.int64)
    identity = sp.identity(n, dtype=np.int64, format="csr")

    per_node: list[list[np.ndarray]] = [[np.array([deg[i]], dtype=np.int64)] for i in range(n)]
    visited = identity
    frontier = identity

    for hop in range(1, max_hop + 1):
        reach = (frontier @ adjacency).tocsr()
        reach.data[:] = 1
        fresh = (reach - reach.multiply(visited)).tocsr()
        fresh.eliminate_zeros()
        fresh.sort_indices()
        visited = (visited + fresh).tocsr()

        for i in range(n):
            cols = fresh.indices[fresh.indptr[i]:fresh.indptr[i + 1]]
            per_node[i].append(np.sort(deg[cols]))
        frontier = fresh
        logger.debug(f"Hop {hop}: {fresh.nnz} (node, ring member) entries")

    return RingSequences(max_hop=max_hop, rings=tuple(tuple(r) for r in per_node))
