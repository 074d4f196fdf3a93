"""
Random 4:1 train/validation split of labeled nodes.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from graph.models import Graph, GraphDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SplitAssignment:
    """Disjoint train/validation node indices drawn with a fixed seed."""
    train_idx: np.ndarray
    val_idx: np.ndarray
    seed: int


def split_train_val(g: Graph, ratio: float = 0.8, seed: int = 0) -> SplitAssignment:
    """
    Randomly split the labeled nodes (no stratification).

    The train size is ceil(ratio * n), capped at n - 1 so validation is
    never empty when n >= 2.

    Raises:
        GraphDataError: If the graph has no labels.
        ValueError: If ratio is not in (0, 1].
    """
    if g.labels is None:
        raise GraphDataError("split_train_val needs a labeled graph")
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")

    n = g.n_nodes
    n_train = math.ceil(round(ratio * n, 9))
    if n >= 2:
        n_train = min(n_train, n - 1)

    order = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(order[:n_train])
    val_idx = np.sort(order[n_train:])
    logger.debug(f"Split {n} nodes into {len(train_idx)} train / {len(val_idx)} val (seed {seed})")
    return SplitAssignment(train_idx=train_idx, val_idx=val_idx, seed=seed)
