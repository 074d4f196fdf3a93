"""
Stability statistics of per-epoch Macro-F1 traces.

Without a target validation set the adapted model cannot be selected by
epoch, so runs are judged by the mean and population standard deviation of
Macro-F1 over the epochs after the first skip_n.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SKIP = 20


@dataclass
class StabilityStats:
    skip_n: int
    mean: float
    std: float
    n_epochs: int
    trace: list[float] = field(default_factory=list)

    def to_dict(self, include_trace: bool = False) -> dict:
        data = {"skip_n": self.skip_n, "mean": self.mean, "std": self.std, "n_epochs": self.n_epochs}
        if include_trace:
            data["trace"] = list(self.trace)
        return data


def stability_stats(trace, skip_n: int = DEFAULT_SKIP) -> StabilityStats:
    """
    Mean and population std of trace[skip_n:] (epochs skip_n+1..end, 1-based).

    Raises:
        ValueError: If fewer than two epochs remain after skipping.
    """
    values = np.asarray(trace, dtype=np.float64).ravel()
    if skip_n < 0:
        raise ValueError(f"skip_n must be >= 0, got {skip_n}")
    if values.size <= skip_n + 1:
        raise ValueError(f"trace of {values.size} epochs too short for skip_n={skip_n}")

    kept = values[skip_n:]
    # Spread is taken around the first kept value so a constant tail is exactly 0
    offsets = kept - kept[0]
    return StabilityStats(
        skip_n=skip_n,
        mean=float(kept[0] + offsets.mean()),
        std=float(offsets.std()),
        n_epochs=int(kept.size),
        trace=values.tolist(),
    )
