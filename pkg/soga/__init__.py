"""
Source-free graph domain adaptation.

Provides:
- SogaConfig / SogaVariant / MarginalMode: adaptation settings and ablations
- read_label_prior: validated target label prior from a file
- NegativeSampler: uniform negatives excluding the positive pair
- conditional_entropy / marginal_entropy / kl_marginal / im_objective / sc_objective
- adapt: the adaptation loop returning the final-epoch checkpoint and its RunRecord
- EpochPredictions / read_epoch_predictions: label-free per-epoch prediction trace
"""

from soga.adapter import (
    EpochPredictions,
    EpochRecord,
    NumericFailure,
    RunRecord,
    adapt,
    read_epoch_predictions,
)
from soga.config import MarginalMode, SogaConfig, SogaVariant, read_label_prior
from soga.objectives import (
    conditional_entropy,
    draw_negatives,
    im_objective,
    kl_marginal,
    marginal_entropy,
    pair_term,
    sc_objective,
)
from soga.sampler import NegativeSampler

__all__ = [
    "SogaConfig",
    "SogaVariant",
    "MarginalMode",
    "read_label_prior",
    "NegativeSampler",
    "conditional_entropy",
    "marginal_entropy",
    "kl_marginal",
    "im_objective",
    "pair_term",
    "sc_objective",
    "draw_negatives",
    "adapt",
    "EpochRecord",
    "RunRecord",
    "EpochPredictions",
    "read_epoch_predictions",
    "NumericFailure",
]
