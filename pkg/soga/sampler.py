"""
Uniform negative sampling for structure consistency.
"""

import logging

import numpy as np

from graph.models import GraphDataError

logger = logging.getLogger(__name__)


class NegativeSampler:
    """
    Draws negatives uniformly from [0, n) excluding both members of each positive pair.

    Args:
        n_nodes: Number of nodes; at least 3 so two exclusions leave a choice.
        rng: Generator or integer seed.

    Raises:
        GraphDataError: If the graph has fewer than 3 nodes.
    """

    def __init__(self, n_nodes: int, rng: np.random.Generator | int | None = None):
        if n_nodes < 3:
            raise GraphDataError(f"negative sampling needs at least 3 nodes, got {n_nodes}")
        self.n_nodes = n_nodes
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    def sample(self, pairs: np.ndarray, count: int) -> np.ndarray:
        """
        Args:
            pairs: (m, 2) positive pairs (i, j) with i != j.
            count: Negatives per pair.

        Returns:
            (m, count) node indices, none equal to that row's i or j.
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        lo = np.minimum(pairs[:, 0], pairs[:, 1])[:, None]
        hi = np.maximum(pairs[:, 0], pairs[:, 1])[:, None]
        draws = self.rng.integers(0, self.n_nodes - 2, size=(len(pairs), count))
        draws += draws >= lo
        draws += draws >= hi
        return draws
