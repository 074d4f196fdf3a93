"""Adaptation objectives, negative sampling and the adaptation loop."""

import numpy as np
import pytest
from scipy.special import expit

from diffmath import Tensor, grad_check, ops
from gnn.checkpoint import Architecture, CheckpointError, init_checkpoint
from gnn.models import predict
from graph.loader import load_graph, write_graph
from graph.models import GraphDataError
from settings import ConfigError
from soga import (
    EpochPredictions,
    MarginalMode,
    NegativeSampler,
    SogaConfig,
    SogaVariant,
    adapt,
    conditional_entropy,
    draw_negatives,
    im_objective,
    kl_marginal,
    marginal_entropy,
    pair_term,
    read_epoch_predictions,
    read_label_prior,
    sc_objective,
)
from soga.objectives import log_similarity
from structure.pairs import PairSet, mine_pairs


def pair_set(local, structural=()) -> PairSet:
    structural = np.array(structural, dtype=np.int64).reshape(-1, 2)
    return PairSet(
        local=np.array(local, dtype=np.int64).reshape(-1, 2),
        structural=structural,
        distances=np.zeros(len(structural)),
    )


class TestInformationMaximization:

    def test_conditional_entropy_one_hot(self):
        assert conditional_entropy(Tensor(np.eye(4))).item() == pytest.approx(0.0, abs=1e-10)

    def test_conditional_entropy_uniform(self):
        assert conditional_entropy(Tensor(np.full((3, 6), 1 / 6))).item() == pytest.approx(np.log(6))

    def test_conditional_entropy_mixed_rows(self):
        pred = Tensor([[0.5, 0.5, 0.0], [1.0, 0.0, 0.0]])
        assert conditional_entropy(pred).item() == pytest.approx(np.log(2) / 2, abs=1e-4)

    def test_marginal_entropy_balanced(self):
        assert marginal_entropy(Tensor(np.eye(2))).item() == pytest.approx(np.log(2))

    def test_marginal_entropy_collapsed(self):
        pred = Tensor(np.tile([0.0, 1.0, 0.0], (5, 1)))
        assert marginal_entropy(pred).item() == pytest.approx(0.0, abs=1e-10)

    def test_marginal_entropy_soft_rows(self):
        pred = Tensor([[0.8, 0.2], [0.4, 0.6], [0.6, 0.4]])
        expected = -0.6 * np.log(0.6) - 0.4 * np.log(0.4)
        assert marginal_entropy(pred).item() == pytest.approx(expected, abs=1e-4)

    def test_kl_marginal_matches_arithmetic(self):
        pred = Tensor([[1.0, 0.0], [0.0, 1.0]])
        expected = 0.7 * np.log(1.4) + 0.3 * np.log(0.6)
        assert kl_marginal(pred, [0.7, 0.3]).item() == pytest.approx(expected, abs=1e-4)

    def test_kl_marginal_zero_at_prior(self):
        pred = Tensor([[0.9, 0.1], [0.5, 0.5]])
        assert kl_marginal(pred, [0.7, 0.3]).item() == pytest.approx(0.0, abs=1e-12)

    def test_kl_marginal_rejects_bad_prior(self):
        with pytest.raises(ValueError):
            kl_marginal(Tensor(np.eye(2)), [1.0, 0.0])
        with pytest.raises(ValueError):
            kl_marginal(Tensor(np.eye(2)), [0.2, 0.3, 0.5])

    def test_im_maximum_and_minimum(self):
        cfg = SogaConfig()
        assert im_objective(Tensor(np.eye(3)), cfg).item() == pytest.approx(np.log(3))
        assert im_objective(Tensor(np.full((3, 3), 1 / 3)), cfg).item() == pytest.approx(0.0, abs=1e-12)
        assert im_objective(Tensor(np.tile([1.0, 0.0, 0.0], (3, 1))), cfg).item() == pytest.approx(0.0, abs=1e-10)

    def test_im_is_never_negative(self):
        rng = np.random.default_rng(6)
        cfg = SogaConfig()
        for _ in range(50):
            logits = rng.normal(scale=3.0, size=(int(rng.integers(2, 12)), int(rng.integers(2, 6))))
            probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
            assert im_objective(Tensor(probs), cfg).item() >= -1e-12

    def test_im_kl_mode(self):
        cfg = SogaConfig(marginal_mode="kl", label_prior=(0.5, 0.5))
        assert im_objective(Tensor(np.eye(2)), cfg).item() == pytest.approx(0.0, abs=1e-10)


class TestStructureConsistency:

    def test_closed_form_single_pair(self):
        pred = Tensor([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        value = pair_term(pred, np.array([[0, 1]]), np.full((1, 5), 2))
        expected = np.log(expit(1.0)) - 5 * np.log(0.5)
        assert value.item() == pytest.approx(expected, rel=1e-12)
        assert value.item() == pytest.approx(3.1524, abs=1e-4)

    def test_sc_objective_with_drawn_negatives(self):
        pred = Tensor([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        pairs = pair_set([[0, 1]])
        negatives = {"local": np.full((1, 5), 2), "structural": np.zeros((0, 5), dtype=np.int64)}
        cfg = SogaConfig(lambda1=1.0, lambda2=0.0)
        assert sc_objective(pred, pairs, None, cfg, negatives=negatives).item() == pytest.approx(3.1524, abs=1e-4)

    def test_zero_weights(self):
        pred = Tensor(np.full((4, 2), 0.5))
        cfg = SogaConfig(lambda1=0.0, lambda2=0.0)
        assert sc_objective(pred, pair_set([[0, 1]], [[2, 3]]), NegativeSampler(4, 0), cfg).item() == 0.0

    def test_similarity_bounds(self):
        rng = np.random.default_rng(0)
        pred = ops.row_softmax(Tensor(rng.normal(scale=3.0, size=(30, 4))))
        left, right = rng.integers(0, 30, size=200), rng.integers(0, 30, size=200)
        values = log_similarity(pred, left, right).data
        assert np.all(values > np.log(0.5))
        assert np.all(values <= np.log(expit(1.0)) + 1e-12)

    def test_raw_sums_scale_with_pair_count(self):
        pred = ops.row_softmax(Tensor(np.random.default_rng(1).normal(size=(6, 3))))
        pairs = np.array([[0, 1], [2, 3], [4, 5]])
        negatives = np.array([[2], [0], [1]])
        raw = pair_term(pred, pairs, negatives, normalize=False).item()
        assert pair_term(pred, pairs, negatives, normalize=True).item() == pytest.approx(raw / 3)

    def test_empty_pair_set_warns(self, caplog):
        pred = Tensor(np.full((4, 2), 0.5))
        value = sc_objective(pred, pair_set([]), NegativeSampler(4, 0), SogaConfig())
        assert value.item() == 0.0
        assert "Empty local pair set" in caplog.text


class TestNegativeSampler:

    def test_excludes_pair_members(self):
        sampler = NegativeSampler(10, np.random.default_rng(3))
        pairs = np.array([[0, 9], [4, 5], [7, 2], [3, 4]])
        draws = sampler.sample(pairs, 200)
        assert draws.shape == (4, 200)
        for (i, j), row in zip(pairs, draws):
            assert i not in row and j not in row
            assert row.min() >= 0 and row.max() < 10

    def test_covers_every_other_node(self):
        draws = NegativeSampler(6, 0).sample(np.array([[1, 4]]), 2000)
        assert set(draws.ravel().tolist()) == {0, 2, 3, 5}

    def test_deterministic_per_seed(self):
        pairs = pair_set([[0, 1], [1, 2]], [[0, 3]])
        a = draw_negatives(NegativeSampler(5, 8), pairs, 5)
        b = draw_negatives(NegativeSampler(5, 8), pairs, 5)
        np.testing.assert_array_equal(a["local"], b["local"])
        np.testing.assert_array_equal(a["structural"], b["structural"])

    def test_needs_three_nodes(self):
        with pytest.raises(GraphDataError, match="at least 3 nodes"):
            NegativeSampler(2)


class TestSogaConfig:

    def test_kl_needs_prior(self):
        with pytest.raises(ConfigError, match="label_prior"):
            SogaConfig(marginal_mode=MarginalMode.KL)

    def test_prior_must_be_simplex(self):
        with pytest.raises(ConfigError):
            SogaConfig(marginal_mode="kl", label_prior=(0.5, 0.6))

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            SogaConfig(marginal_mode="js")

    def test_invalid_values(self):
        for kwargs in ({"lambda1": -1.0}, {"negatives": 0}, {"lr": 0.0}, {"epochs": -1}):
            with pytest.raises(ConfigError):
                SogaConfig(**kwargs)

    def test_variants(self):
        cfg = SogaConfig(lambda1=2.0, lambda2=0.5)
        im = cfg.with_variant(SogaVariant.IM)
        sc = cfg.with_variant("sc")
        assert (im.lambda1, im.lambda2, im.cond_weight) == (0.0, 0.0, 1.0)
        assert (sc.lambda1, sc.cond_weight, sc.marginal_weight) == (2.0, 0.0, 0.0)
        assert cfg.with_variant("full") == cfg

    def test_to_dict_is_plain(self):
        data = SogaConfig(marginal_mode="kl", label_prior=(0.25, 0.75)).to_dict()
        assert data["marginal_mode"] == "kl"
        assert data["label_prior"] == [0.25, 0.75]

    def test_read_label_prior(self, tmp_path):
        path = tmp_path / "prior.txt"
        path.write_text("0.2, 0.3\n0.5\n", encoding="utf-8")
        assert read_label_prior(path, 3) == (0.2, 0.3, 0.5)

    @pytest.mark.parametrize("text, match", [
        ("0.5 0.5", "2 entries"),
        ("0.5 0.7 -0.2", ">= 0"),
        ("0.2 0.2 0.2", "sums to"),
        ("0.5 nan 0.5", ">= 0"),
        ("a b c", "numbers only"),
    ])
    def test_bad_label_prior(self, tmp_path, text, match):
        path = tmp_path / "prior.txt"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigError, match=match):
            read_label_prior(path, 3)

    def test_missing_label_prior(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            read_label_prior(tmp_path / "nope.txt", 2)


class TestObjectiveGradient:

    def test_total_objective_matches_finite_differences(self):
        rng = np.random.default_rng(10)
        pairs = pair_set([[0, 1], [1, 2], [3, 7], [5, 9]], [[2, 8], [4, 6]])
        cfg = SogaConfig(lambda1=1.0, lambda2=0.7)
        negatives = draw_negatives(NegativeSampler(10, rng), pairs, cfg.negatives)

        def total(logits):
            pred = ops.row_softmax(logits)
            return ops.add(im_objective(pred, cfg), sc_objective(pred, pairs, None, cfg, negatives=negatives))

        assert grad_check(total, Tensor(rng.normal(size=(10, 3)))) < 1e-4

    def test_kl_objective_matches_finite_differences(self):
        cfg = SogaConfig(marginal_mode="kl", label_prior=(0.2, 0.3, 0.5))
        logits = Tensor(np.random.default_rng(11).normal(size=(10, 3)))
        assert grad_check(lambda t: im_objective(ops.row_softmax(t), cfg), logits) < 1e-4


class TestAdapt:

    @pytest.fixture
    def source_ckpt(self, tiny_pair):
        source, _ = tiny_pair
        return init_checkpoint(
            Architecture.GCN, source.feature_dim, 8, source.n_classes, seed=1, metadata={"dropout": 0.0},
        )

    def test_zero_epochs_is_identity(self, tiny_pair, source_ckpt):
        _, target = tiny_pair
        view = target.unlabeled()
        adapted, record = adapt(source_ckpt, view, mine_pairs(view), SogaConfig(epochs=0))
        assert adapted.same_parameters(source_ckpt)
        assert record.epochs == []

    def test_labeled_graph_rejected(self, tiny_pair, source_ckpt):
        _, target = tiny_pair
        with pytest.raises(TypeError, match="UnlabeledGraph"):
            adapt(source_ckpt, target, mine_pairs(target), SogaConfig(epochs=1))

    def test_feature_dimension_mismatch(self, tiny_pair):
        _, target = tiny_pair
        view = target.unlabeled()
        ckpt = init_checkpoint(Architecture.GCN, target.feature_dim + 1, 8, target.n_classes)
        with pytest.raises(CheckpointError):
            adapt(ckpt, view, mine_pairs(view), SogaConfig(epochs=1))

    def test_epoch_predictions_trace(self, tmp_path, tiny_pair, source_ckpt):
        _, target = tiny_pair
        view = target.unlabeled()
        trace = EpochPredictions(view)
        adapted, record = adapt(source_ckpt, view, mine_pairs(view), SogaConfig(epochs=3), epoch_callback=trace)
        assert trace.epochs == [1, 2, 3]
        assert all(e.macro_f1 is None for e in record.epochs)
        np.testing.assert_array_equal(trace.labels[-1], predict(adapted, view).argmax())

        epochs, rows = read_epoch_predictions(trace.write_csv(tmp_path / "epoch_labels.csv"))
        assert epochs == [1, 2, 3]
        assert rows.shape == (3, view.n_nodes)

    def test_ragged_epoch_predictions(self, tmp_path):
        path = tmp_path / "epoch_labels.csv"
        path.write_text("1,0,1,1\n2,0,1\n", encoding="utf-8")
        with pytest.raises(GraphDataError, match="expected 3 labels"):
            read_epoch_predictions(path)

    def test_two_node_target_is_a_data_error(self, graph_factory):
        view = graph_factory(2, [(0, 1)]).unlabeled()
        ckpt = init_checkpoint(Architecture.GCN, 2, 4, 2)
        with pytest.raises(GraphDataError, match="at least 3 nodes"):
            adapt(ckpt, view, mine_pairs(view), SogaConfig(epochs=1))

    @pytest.mark.parametrize("arch", [Architecture.GCN, Architecture.GRAPHSAGE, Architecture.GAT])
    def test_deterministic_per_seed(self, tiny_pair, arch):
        _, target = tiny_pair
        view = target.unlabeled()
        ckpt = init_checkpoint(arch, target.feature_dim, 8, target.n_classes, seed=2)
        pairs = mine_pairs(view)
        cfg = SogaConfig(epochs=5, seed=7)
        (a, rec_a), (b, rec_b) = adapt(ckpt, view, pairs, cfg), adapt(ckpt, view, pairs, cfg)
        assert a.same_parameters(b)
        assert [e.total for e in rec_a.epochs] == [e.total for e in rec_b.epochs]
        assert not a.same_parameters(ckpt)

    def test_conditional_entropy_only_sharpens_predictions(self, tiny_pair, source_ckpt):
        _, target = tiny_pair
        view = target.unlabeled()
        cfg = SogaConfig(lambda1=0.0, lambda2=0.0, marginal_weight=0.0, lr=1e-2, epochs=30)
        adapted, record = adapt(source_ckpt, view, mine_pairs(view), cfg)
        before = conditional_entropy(predict(source_ckpt, view)).item()
        after = conditional_entropy(predict(adapted, view)).item()
        assert after < before
        assert all(e.l_sc == 0.0 for e in record.epochs)

    def test_record_and_callback(self, tmp_path, tiny_pair, source_ckpt):
        _, target = tiny_pair
        view = target.unlabeled()
        seen = []

        def callback(epoch, model):
            seen.append(epoch)
            return {"macro_f1": 0.5, "micro_f1": 0.6}

        _, record = adapt(source_ckpt, view, mine_pairs(view), SogaConfig(epochs=4), epoch_callback=callback)
        assert seen == [1, 2, 3, 4]
        assert record.macro_f1_trace() == [0.5] * 4
        lines = record.write_csv(tmp_path / "curve.csv").read_text().splitlines()
        assert lines[0] == "epoch,l_im,l_sc,total,macro_f1,micro_f1"
        assert len(lines) == 5

    def test_runs_on_label_free_manifest(self, tmp_path, tiny_pair, source_ckpt):
        _, target = tiny_pair
        loaded = load_graph(write_graph(target, tmp_path / "target", include_labels=False))
        assert loaded.labels is None
        view = loaded.unlabeled()
        adapted, record = adapt(source_ckpt, view, mine_pairs(view), SogaConfig(epochs=3))
        assert len(record.epochs) == 3
        assert np.all(np.isfinite([e.total for e in record.epochs]))
        np.testing.assert_allclose(predict(adapted, view).probs.sum(axis=1), 1.0, atol=1e-12)
