"""Metrics, stability statistics and the entropy-minimization lemma checks."""

import numpy as np
import pytest
from sklearn.metrics import f1_score, roc_auc_score

from evaluation import (
    LemmaTwoSetup,
    auc_binary,
    classification_report,
    confusion_matrix,
    entropy_descent,
    macro_f1,
    micro_f1,
    stability_stats,
    verify_lemma1,
    verify_lemma2,
)


class TestF1:

    def test_perfect(self):
        assert macro_f1([0, 1, 2, 1], [0, 1, 2, 1], 3) == 1.0
        assert micro_f1([0, 1, 2, 1], [0, 1, 2, 1], 3) == 1.0

    def test_crossed_predictions(self):
        assert macro_f1([0, 1, 0, 1], [0, 0, 1, 1], 2) == pytest.approx(0.5)

    def test_single_class_predicted(self):
        assert macro_f1([0, 0, 0, 0], [0, 0, 1, 1], 2) == pytest.approx(1 / 3)

    def test_absent_class_counts_as_zero(self):
        assert macro_f1([0, 1], [0, 1], 3) == pytest.approx(2 / 3)

    def test_empty_input(self):
        with pytest.raises(ValueError):
            macro_f1([], [], 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            micro_f1([0, 1], [0], 2)

    def test_matches_sklearn(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(1, 51))
            true, pred = rng.integers(0, k, size=n), rng.integers(0, k, size=n)
            expected_macro = f1_score(true, pred, labels=list(range(k)), average="macro", zero_division=0)
            assert macro_f1(pred, true, k) == pytest.approx(expected_macro, rel=1e-12, abs=1e-12)
            assert micro_f1(pred, true, k) == pytest.approx(np.mean(pred == true))


class TestConfusion:

    def test_layout_is_truth_by_prediction(self):
        cm = confusion_matrix([1, 1, 0], [0, 1, 0], 2)
        np.testing.assert_array_equal(cm, [[1, 1], [0, 1]])

    def test_report(self):
        rng = np.random.default_rng(1)
        true, pred = rng.integers(0, 4, size=40), rng.integers(0, 4, size=40)
        report = classification_report(pred, true, 4)
        assert report.support == np.bincount(true, minlength=4).tolist()
        assert [sum(row) for row in report.confusion] == report.support
        assert report.micro_f1 == pytest.approx(micro_f1(pred, true, 4))
        assert report.macro_f1 == pytest.approx(macro_f1(pred, true, 4))
        assert set(report.to_dict()) >= {"macro_f1", "micro_f1", "confusion"}


class TestAuc:

    def test_separable(self):
        assert auc_binary([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_all_ties(self):
        assert auc_binary([0.3] * 6, [1, 0, 1, 0, 1, 0]) == 0.5

    def test_single_class(self):
        with pytest.raises(ValueError):
            auc_binary([0.1, 0.2], [1, 1])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        scores = rng.random(60)
        labels = rng.integers(0, 2, size=60)
        labels[:2] = [0, 1]
        assert auc_binary(np.exp(3.0 * scores) + 1.0, labels) == auc_binary(scores, labels)

    def test_matches_sklearn(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            n = int(rng.integers(2, 40))
            labels = rng.integers(0, 2, size=n)
            labels[:2] = [0, 1]
            scores = rng.integers(0, 5, size=n) / 4.0
            assert auc_binary(scores, labels) == pytest.approx(roc_auc_score(labels, scores), abs=1e-12)

    def test_one_hot_hardening_identity(self):
        labels = np.array([1] * 10 + [0] * 10)
        scores = np.array([1] * 7 + [0] * 3 + [0] * 6 + [1] * 4, dtype=float)
        assert auc_binary(scores, labels) == pytest.approx(0.5 * (0.7 + 0.6), abs=1e-12)


class TestStability:

    def test_constant_trace(self):
        stats = stability_stats([0.7] * 40)
        assert stats.std == 0.0
        assert stats.mean == 0.7
        assert stats.n_epochs == 20

    def test_constant_tails_of_awkward_values(self):
        for value in (0.1, 1 / 3, 0.9271, 2 / 7):
            stats = stability_stats([0.2] * 20 + [value] * 37)
            assert stats.std == 0.0
            assert stats.mean == value

    def test_alternating_tail(self):
        trace = [0.6] * 30 + [0.61, 0.59] * 10
        stats = stability_stats(trace, skip_n=30)
        assert stats.mean == pytest.approx(0.6)
        assert stats.std == pytest.approx(0.01)

    def test_trace_too_short(self):
        with pytest.raises(ValueError):
            stability_stats([0.5] * 20, skip_n=20)
        with pytest.raises(ValueError):
            stability_stats([0.5] * 10, skip_n=30)


class TestLemmaOne:

    def test_generic_row_becomes_one_hot(self):
        final = entropy_descent(np.log([[0.5, 0.3, 0.2]]), steps=3000, lr=0.5)
        np.testing.assert_allclose(final, [[1.0, 0.0, 0.0]], atol=1e-3)

    def test_tied_row_splits_mass(self):
        final = entropy_descent(np.log([[0.4, 0.4, 0.2]]), steps=3000, lr=0.5)
        np.testing.assert_allclose(final, [[0.5, 0.5, 0.0]], atol=1e-3)

    def test_one_hot_is_a_fixed_point(self):
        logits = np.array([[60.0, 0.0, 0.0]])
        np.testing.assert_allclose(entropy_descent(logits, steps=50, lr=0.5), [[1.0, 0.0, 0.0]], atol=1e-12)

    def test_small_report(self):
        report = verify_lemma1(k=4, n_nodes=30, seed=2)
        assert report.passed
        assert report.max_deviation <= 1e-3
        assert report.rows_by_eta == {1: 10, 2: 10, 3: 10}


class TestLemmaTwo:

    def test_symmetric_accuracies(self):
        report = verify_lemma2(LemmaTwoSetup(r_p=0.7, r_n=0.7))
        assert report.auc_before == pytest.approx(0.49, abs=0.02)
        assert report.auc_after == pytest.approx(0.70, abs=1e-12)
        assert report.improvement == pytest.approx(0.21, abs=0.02)

    def test_asymmetric_accuracies(self):
        report = verify_lemma2(LemmaTwoSetup(r_p=0.6, r_n=0.8))
        assert report.auc_after == pytest.approx(0.70, abs=1e-12)
        assert report.auc_before >= report.lower_bound_before - 1e-12

    def test_perfect_classifier(self):
        report = verify_lemma2(LemmaTwoSetup(r_p=1.0, r_n=1.0))
        assert report.auc_before == 1.0
        assert report.auc_after == 1.0

    def test_random_grid(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            r_p, r_n = rng.integers(1, 101, size=2) / 100
            report = verify_lemma2(LemmaTwoSetup(r_p=r_p, r_n=r_n, seed=int(rng.integers(100))), steps=200)
            assert report.auc_after == pytest.approx(0.5 * (r_p + r_n), abs=1e-12)

    def test_degenerate_counts(self):
        with pytest.raises(ValueError, match="degenerate"):
            LemmaTwoSetup(r_p=0.7, r_n=0.7, n_pos=7)
        with pytest.raises(ValueError, match="degenerate"):
            LemmaTwoSetup(r_p=0.7, r_n=0.7, n_neg=0)
