"""
Empirical checks of the two entropy-minimization lemmas.

verify_lemma1: gradient descent on the conditional entropy of free per-node
logits drives every row to mass 1/eta on its eta initially tied maximal
classes.

verify_lemma2: hardening soft binary scores with accuracies (r_p, r_n) lifts
the worst-case AUC from r_p * r_n to (r_p + r_n) / 2.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from diffmath import Tape, Tensor, ops
from evaluation.metrics import auc_binary

logger = logging.getLogger(__name__)

# Score bands of the constructed worst case, ordered low to high:
# misclassified positives < correct negatives < 0.5 < correct positives < misclassified negatives
_WRONG_POS_BAND = (0.02, 0.10)
_RIGHT_NEG_BAND = (0.12, 0.45)
_RIGHT_POS_BAND = (0.55, 0.88)
_WRONG_NEG_BAND = (0.90, 0.98)


def entropy_descent(logits: np.ndarray, steps: int, lr: float) -> np.ndarray:
    """
    Plain gradient descent on the summed row entropies of softmax(logits).

    Returns:
        Final row-stochastic probabilities.
    """
    z = Tensor(logits, requires_grad=True)
    for _ in range(steps):
        z.zero_grad()
        with Tape() as tape:
            p = ops.row_softmax(z)
            loss = ops.neg(ops.sum(ops.mul(p, ops.log_guarded(p))))
            tape.backward(loss)
        z.data -= lr * z.grad
    return ops.row_softmax(Tensor(z.data)).numpy()


def _tie_target(logits: np.ndarray) -> np.ndarray:
    """1/eta on the positions equal to the row maximum, 0 elsewhere."""
    mask = logits == logits.max(axis=1, keepdims=True)
    return mask / mask.sum(axis=1, keepdims=True)


# ────────────────────────────────────────────────────────────────────────────────
# Lemma 1
# ────────────────────────────────────────────────────────────────────────────────

@dataclass
class LemmaOneReport:
    k: int
    n_nodes: int
    steps: int
    lr: float
    tol: float
    max_deviation: float
    converged_fraction: float
    rows_by_eta: dict[int, int] = field(default_factory=dict)
    passed: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def verify_lemma1(
    k: int = 6,
    n_nodes: int = 200,
    steps: int = 3000,
    lr: float = 0.5,
    seed: int = 0,
    tol: float = 1e-3
) -> LemmaOneReport:
    """
    Entropy descent on random free logits, with constructed exact ties.

    Rows with index % 3 == 1 get a two-way tie at the maximum and rows with
    index % 3 == 2 a three-way tie (when k allows); the rest are generic.
    """
    if k < 2 or n_nodes < 1:
        raise ValueError("verify_lemma1 needs k >= 2 and at least one node")

    rng = np.random.default_rng(seed)
    logits = rng.normal(size=(n_nodes, k))
    for i in range(n_nodes):
        eta = min(1 + i % 3, k)
        if eta > 1:
            top = np.argsort(logits[i])[::-1][:eta]
            logits[i, top] = logits[i, top[0]]

    target = _tie_target(logits)
    final = entropy_descent(logits, steps, lr)
    deviation = np.abs(final - target).max(axis=1)

    etas, counts = np.unique((target > 0).sum(axis=1), return_counts=True)
    report = LemmaOneReport(
        k=k,
        n_nodes=n_nodes,
        steps=steps,
        lr=lr,
        tol=tol,
        max_deviation=float(deviation.max()),
        converged_fraction=float(np.mean(deviation <= tol)),
        rows_by_eta={int(e): int(c) for e, c in zip(etas, counts)},
    )
    report.passed = report.converged_fraction == 1.0
    logger.info(
        f"Lemma 1: max deviation {report.max_deviation:.2e} over {n_nodes} nodes, "
        f"{report.converged_fraction:.1%} within {tol}"
    )
    return report


# ────────────────────────────────────────────────────────────────────────────────
# Lemma 2
# ────────────────────────────────────────────────────────────────────────────────

@dataclass
class LemmaTwoSetup:
    """
    Binary worst case with prescribed per-class accuracies.

    r_p * n_pos and r_n * n_neg must be whole numbers so the empirical
    accuracies equal r_p and r_n exactly.
    """
    r_p: float
    r_n: float
    n_pos: int = 100
    n_neg: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError("degenerate counts: need at least one sample per class")
        for name, rate, count in (("r_p", self.r_p, self.n_pos), ("r_n", self.r_n, self.n_neg)):
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {rate}")
            if abs(rate * count - round(rate * count)) > 1e-9:
                raise ValueError(f"degenerate counts: {name}={rate} x {count} is not a whole number")

    @property
    def correct_pos(self) -> int:
        return int(round(self.r_p * self.n_pos))

    @property
    def correct_neg(self) -> int:
        return int(round(self.r_n * self.n_neg))

    def scores(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive-class probabilities and binary labels of the constructed worst case."""
        rng = np.random.default_rng(self.seed)
        wrong_pos = rng.uniform(*_WRONG_POS_BAND, size=self.n_pos - self.correct_pos)
        right_pos = rng.uniform(*_RIGHT_POS_BAND, size=self.correct_pos)
        right_neg = rng.uniform(*_RIGHT_NEG_BAND, size=self.correct_neg)
        wrong_neg = rng.uniform(*_WRONG_NEG_BAND, size=self.n_neg - self.correct_neg)
        scores = np.concatenate([wrong_pos, right_pos, right_neg, wrong_neg])
        labels = np.concatenate([np.ones(self.n_pos, dtype=int), np.zeros(self.n_neg, dtype=int)])
        return scores, labels


@dataclass
class LemmaTwoReport:
    r_p: float
    r_n: float
    n_pos: int
    n_neg: int
    auc_before: float
    auc_after: float
    lower_bound_before: float
    expected_after: float
    improvement: float
    hardening_max_deviation: float

    def to_dict(self) -> dict:
        return asdict(self)


def verify_lemma2(setup: LemmaTwoSetup, steps: int = 3000, lr: float = 0.5) -> LemmaTwoReport:
    """
    Harden the constructed scores by entropy descent and compare AUCs.

    The descended probabilities are snapped to their argmax so the after-AUC
    is evaluated on one-hot predictions.
    """
    scores, labels = setup.scores()
    auc_before = auc_binary(scores, labels)

    probs = np.stack([1.0 - scores, scores], axis=1)
    hardened = entropy_descent(np.log(probs), steps, lr)
    one_hot = (hardened.argmax(axis=1) == 1).astype(np.float64)
    deviation = float(np.abs(hardened[:, 1] - one_hot).max())
    auc_after = auc_binary(one_hot, labels)

    report = LemmaTwoReport(
        r_p=setup.r_p,
        r_n=setup.r_n,
        n_pos=setup.n_pos,
        n_neg=setup.n_neg,
        auc_before=auc_before,
        auc_after=auc_after,
        lower_bound_before=setup.r_p * setup.r_n,
        expected_after=0.5 * (setup.r_p + setup.r_n),
        improvement=auc_after - auc_before,
        hardening_max_deviation=deviation,
    )
    logger.info(f"Lemma 2: AUC {auc_before:.4f} -> {auc_after:.4f} (r_p={setup.r_p}, r_n={setup.r_n})")
    return report
