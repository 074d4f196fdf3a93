"""
Classification metrics for node predictions.

F1 scores use the zero-division convention: a class with no true and no
predicted members has F1 = 0 and still counts in the Macro average.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Pair-count AUC compares positives against negatives in blocks of this many positives
_AUC_BLOCK = 1024


@dataclass
class MetricReport:
    """Macro/Micro-F1 with per-class breakdown and the k x k confusion matrix (rows = truth)."""
    macro_f1: float
    micro_f1: float
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    confusion: list[list[int]]

    def to_dict(self) -> dict:
        return asdict(self)


def _check_inputs(pred_labels, true_labels, k: int) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred_labels, dtype=np.int64).ravel()
    true = np.asarray(true_labels, dtype=np.int64).ravel()
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise ValueError("metrics need at least one prediction")
    for name, arr in (("predicted", pred), ("true", true)):
        if arr.min() < 0 or arr.max() >= k:
            raise ValueError(f"{name} labels must lie in [0, {k})")
    return pred, true


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    return np.divide(
        numerator, denominator,
        out=np.zeros_like(numerator, dtype=np.float64),
        where=denominator > 0,
    )


def confusion_matrix(pred_labels, true_labels, k: int) -> np.ndarray:
    """k x k counts; entry [t, p] counts nodes of true class t predicted as p."""
    pred, true = _check_inputs(pred_labels, true_labels, k)
    return np.bincount(true * k + pred, minlength=k * k).reshape(k, k)


def per_class_scores(cm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Precision, recall and F1 per class from a confusion matrix."""
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    precision = _safe_divide(tp, tp + fp)
    recall = _safe_divide(tp, tp + fn)
    f1 = _safe_divide(2.0 * tp, 2.0 * tp + fp + fn)
    return precision, recall, f1


def macro_f1(pred_labels, true_labels, k: int) -> float:
    """Unweighted mean of per-class F1 over all k classes."""
    _, _, f1 = per_class_scores(confusion_matrix(pred_labels, true_labels, k))
    return float(f1.mean())


def micro_f1(pred_labels, true_labels, k: int) -> float:
    """Micro-F1; equals accuracy for single-label multiclass prediction."""
    pred, true = _check_inputs(pred_labels, true_labels, k)
    return float(np.mean(pred == true))


def classification_report(pred_labels, true_labels, k: int) -> MetricReport:
    cm = confusion_matrix(pred_labels, true_labels, k)
    precision, recall, f1 = per_class_scores(cm)
    return MetricReport(
        macro_f1=float(f1.mean()),
        micro_f1=float(np.trace(cm) / cm.sum()),
        precision=precision.tolist(),
        recall=recall.tolist(),
        f1=f1.tolist(),
        support=cm.sum(axis=1).astype(int).tolist(),
        confusion=cm.astype(int).tolist(),
    )


def auc_binary(scores, labels) -> float:
    """
    Area under the ROC curve by direct pair counting.

    Counts (#{s_pos > s_neg} + 0.5 * #{s_pos == s_neg}) / (P * N).

    Raises:
        ValueError: If lengths differ or only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ValueError(f"length mismatch: {scores.size} scores vs {labels.size} labels")
    pos, neg = scores[labels], scores[~labels]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("auc_binary needs both positive and negative samples")

    wins = 0.0
    ties = 0.0
    for start in range(0, pos.size, _AUC_BLOCK):
        block = pos[start:start + _AUC_BLOCK, None]
        wins += np.count_nonzero(block > neg[None, :])
        ties += np.count_nonzero(block == neg[None, :])
    return float((wins + 0.5 * ties) / (pos.size * neg.size))
