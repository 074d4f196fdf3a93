"""
Adaptation objectives, all expressed as differentiable diffmath graphs.

Information maximization:
    L_IM = marginal_weight * H(q(y)) - cond_weight * H(Y | V)
    (KL mode replaces H(q(y)) with -KL(prior || q(y)))

Structure consistency, with J_ij = sigmoid(<y_i, y_j>):
    L_SC = lambda1 * sum_{E_t} [log J_ij - sum_{n ~ p_n} log J_in]
         + lambda2 * sum_{S_t} [log J_ij - sum_{n ~ p_n'} log J_in]
    Each sum is averaged over its pair set when normalize_pairs is on.

Both objectives are maximized.
"""

import logging

import numpy as np

from diffmath import Tensor, ops
from graph.models import PredictionMatrix
from soga.config import MarginalMode, SogaConfig
from soga.sampler import NegativeSampler
from structure.pairs import PairSet

logger = logging.getLogger(__name__)


def _as_pred(pred) -> Tensor:
    if isinstance(pred, PredictionMatrix):
        return Tensor(pred.probs)
    return ops.as_tensor(pred)


def _entropy(probs: Tensor) -> Tensor:
    return ops.neg(ops.sum(ops.mul(probs, ops.log_guarded(probs))))


# ────────────────────────────────────────────────────────────────────────────────
# Information maximization
# ────────────────────────────────────────────────────────────────────────────────

def conditional_entropy(pred) -> Tensor:
    """Mean over nodes of the prediction entropy; 0 log 0 = 0."""
    pred = _as_pred(pred)
    return ops.mul(_entropy(pred), 1.0 / pred.shape[0])


def marginal_entropy(pred) -> Tensor:
    """Entropy of the column means q(y)."""
    return _entropy(ops.mean(_as_pred(pred), axis=0))


def kl_marginal(pred, prior) -> Tensor:
    """
    KL(prior || q(y)) with q(y) the column means.

    Raises:
        ValueError: If the prior has a non-positive entry or the wrong length.
    """
    pred = _as_pred(pred)
    prior = np.asarray(prior, dtype=np.float64).reshape(1, -1)
    if prior.shape[1] != pred.shape[1]:
        raise ValueError(f"prior has {prior.shape[1]} classes, predictions have {pred.shape[1]}")
    if np.any(prior <= 0):
        raise ValueError("prior must be strictly positive")
    marginal = ops.mean(pred, axis=0)
    cross = ops.sum(ops.mul(prior, ops.log_guarded(marginal)))
    return ops.sub(float(np.sum(prior * np.log(prior))), cross)


def im_objective(pred, cfg: SogaConfig) -> Tensor:
    pred = _as_pred(pred)
    if cfg.marginal_mode is MarginalMode.KL:
        marginal = ops.neg(kl_marginal(pred, cfg.label_prior))
    else:
        marginal = marginal_entropy(pred)
    return ops.sub(ops.mul(marginal, cfg.marginal_weight), ops.mul(conditional_entropy(pred), cfg.cond_weight))


# ────────────────────────────────────────────────────────────────────────────────
# Structure consistency
# ────────────────────────────────────────────────────────────────────────────────

def log_similarity(pred: Tensor, left: np.ndarray, right: np.ndarray) -> Tensor:
    """log J for row pairs (left[e], right[e]), shape (m, 1)."""
    inner = ops.row_inner_product(ops.gather_rows(pred, left), ops.gather_rows(pred, right))
    return ops.log_guarded(ops.sigmoid(inner))


def pair_term(pred: Tensor, pairs: np.ndarray, negatives: np.ndarray, normalize: bool = True) -> Tensor:
    """
    sum_pairs [log J_ij - sum_s log J_{i, n_s}], averaged over pairs when normalize.

    Negatives are anchored on the first member i of each pair.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    negatives = np.asarray(negatives, dtype=np.int64).reshape(len(pairs), -1)
    positive = ops.sum(log_similarity(pred, pairs[:, 0], pairs[:, 1]))
    anchors = np.repeat(pairs[:, 0], negatives.shape[1])
    negative = ops.sum(log_similarity(pred, anchors, negatives.ravel()))
    term = ops.sub(positive, negative)
    if normalize:
        term = ops.mul(term, 1.0 / len(pairs))
    return term


def draw_negatives(sampler: NegativeSampler, pairs: PairSet, count: int) -> dict[str, np.ndarray]:
    """Negatives for both pair sets, keyed 'local' and 'structural'."""
    return {
        "local": sampler.sample(pairs.local, count),
        "structural": sampler.sample(pairs.structural, count),
    }


def sc_objective(
    pred,
    pairs: PairSet,
    sampler: NegativeSampler | None,
    cfg: SogaConfig,
    negatives: dict[str, np.ndarray] | None = None,
    warn_empty: bool = True
) -> Tensor:
    """
    Structure-consistency objective.

    Args:
        pred: n x k probabilities.
        pairs: Local and structural positive pairs.
        sampler: Source of fresh negatives; unused when negatives is given.
        cfg: Supplies lambda1, lambda2, negatives count and normalization.
        negatives: Pre-drawn negatives (see draw_negatives).
        warn_empty: Log a warning for an empty pair set with a positive weight.
    """
    pred = _as_pred(pred)
    total = Tensor(0.0)
    terms = (("local", cfg.lambda1, pairs.local), ("structural", cfg.lambda2, pairs.structural))
    for name, weight, pair_array in terms:
        if weight == 0:
            continue
        if len(pair_array) == 0:
            if warn_empty:
                logger.warning(f"Empty {name} pair set; its consistency term contributes 0")
            continue
        if negatives is not None:
            drawn = negatives[name]
        else:
            drawn = sampler.sample(pair_array, cfg.negatives)
        term = pair_term(pred, pair_array, drawn, normalize=cfg.normalize_pairs)
        total = ops.add(total, ops.mul(term, weight))
    return total
