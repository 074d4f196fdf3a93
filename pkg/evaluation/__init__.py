"""
Evaluation: metrics, stability statistics and lemma verification.

Provides:
- macro_f1 / micro_f1 / auc_binary / classification_report
- stability_stats: mean/std of Macro-F1 after the first skip_n epochs
- verify_lemma1 / verify_lemma2: empirical entropy-minimization checks
"""

from evaluation.lemmas import (
    LemmaOneReport,
    LemmaTwoReport,
    LemmaTwoSetup,
    entropy_descent,
    verify_lemma1,
    verify_lemma2,
)
from evaluation.metrics import (
    MetricReport,
    auc_binary,
    classification_report,
    confusion_matrix,
    macro_f1,
    micro_f1,
)
from evaluation.stability import DEFAULT_SKIP, StabilityStats, stability_stats

__all__ = [
    "MetricReport",
    "macro_f1",
    "micro_f1",
    "auc_binary",
    "confusion_matrix",
    "classification_report",
    "StabilityStats",
    "stability_stats",
    "DEFAULT_SKIP",
    "LemmaOneReport",
    "LemmaTwoReport",
    "LemmaTwoSetup",
    "entropy_descent",
    "verify_lemma1",
    "verify_lemma2",
]
