"""
Dynamic time warping over sorted degree sequences.

Element cost: c(x, y) = (max(x, y) + 1) / (min(x, y) + 1) - 1.

The DP D[i, j] = c(a_i, b_j) + min(D[i-1, j], D[i, j-1], D[i-1, j-1]) is
evaluated one row at a time. Within a row the left-neighbour recurrence
D_j = min(t_j, D_{j-1} + c_j) is solved in closed form with a cumulative
sum and a running minimum, so each row is a handful of numpy operations.
Rows are computed for many b sequences at once; a single-pair call goes
through the same code path so batched and single results agree bitwise.
"""

import logging
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


def degree_cost(x, y) -> np.ndarray:
    """Ratio cost of degrees shifted by one; 0 iff x == y."""
    x = np.asarray(x, dtype=np.float64) + 1.0
    y = np.asarray(y, dtype=np.float64) + 1.0
    return np.maximum(x, y) / np.minimum(x, y) - 1.0


def dtw_many(a: np.ndarray, bs: Sequence[np.ndarray]) -> np.ndarray:
    """
    DTW distance of one non-empty sequence against several non-empty sequences.

    Shorter b sequences are right-padded; D[:, :len(b)] never depends on
    padded columns.
    """
    a = np.asarray(a)
    if len(a) == 0 or any(len(b) == 0 for b in bs):
        raise ValueError("dtw needs non-empty sequences")
    if not bs:
        return np.zeros(0)

    lengths = np.array([len(b) for b in bs], dtype=np.int64)
    width = int(lengths.max())
    padded = np.zeros((len(bs), width), dtype=np.float64)
    for row, b in enumerate(bs):
        padded[row, :len(b)] = b
        padded[row, len(b):] = b[-1]

    prev = np.cumsum(degree_cost(a[0], padded), axis=1)
    for value in a[1:]:
        cost = degree_cost(value, padded)
        through = np.empty_like(prev)
        through[:, 0] = prev[:, 0] + cost[:, 0]
        through[:, 1:] = cost[:, 1:] + np.minimum(prev[:, 1:], prev[:, :-1])
        running = np.cumsum(cost, axis=1)
        prev = running + np.minimum.accumulate(through - running, axis=1)

    return prev[np.arange(len(bs)), lengths - 1]


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Exact DTW distance between two non-empty sequences."""
    return float(dtw_many(a, [b])[0])


def dtw_lower_bound(a: np.ndarray, b: np.ndarray) -> float:
    """
    Lower bound on dtw_distance for sorted sequences.

    Every element must be aligned at least once, so the DTW cost is at
    least the sum of each element's cheapest match in the other sequence.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return max(_nearest_cost(a, b), _nearest_cost(b, a))


def _nearest_cost(a: np.ndarray, b: np.ndarray) -> float:
    pos = np.searchsorted(b, a)
    lower = b[np.clip(pos - 1, 0, len(b) - 1)]
    upper = b[np.clip(pos, 0, len(b) - 1)]
    return float(np.minimum(degree_cost(a, lower), degree_cost(a, upper)).sum())


# ────────────────────────────────────────────────────────────────────────────────
# Multi-hop structural distance
# ────────────────────────────────────────────────────────────────────────────────

def struct_distance(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    """
    Sum over hops of the ring-sequence DTW distance.

    Hops where both rings are empty contribute 0; if exactly one ring is
    empty, the sum stops at the previous hop.

    Raises:
        ValueError: If the two rows have different hop depths.
    """
    return float(struct_distance_many(a, [b])[0])


def struct_distance_many(a: Sequence[np.ndarray], bs: Sequence[Sequence[np.ndarray]]) -> np.ndarray:
    """struct_distance of one ring row against several rows."""
    depth = len(a)
    if any(len(b) != depth for b in bs):
        raise ValueError("struct_distance needs rows with the same max_hop")

    total = np.zeros(len(bs))
    active = np.ones(len(bs), dtype=bool)
    for hop in range(depth):
        if len(a[hop]) == 0:
            break
        active &= np.array([len(b[hop]) > 0 for b in bs], dtype=bool)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        total[idx] += dtw_many(a[hop], [bs[j][hop] for j in idx])
    return total


def struct_lower_bound(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    """Hop-wise dtw_lower_bound under the same truncation rule as struct_distance."""
    if len(a) != len(b):
        raise ValueError("struct_lower_bound needs rows with the same max_hop")
    total = 0.0
    for sa, sb in zip(a, b):
        if len(sa) == 0 or len(sb) == 0:
            break
        total += dtw_lower_bound(sa, sb)
    return total
