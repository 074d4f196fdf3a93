"""Synthetic source/target domain pairs."""

import networkx as nx
import numpy as np
import pytest

from datagen.sbm import DomainPairConfig, block_sizes, class_means, gen_pair
from evaluation.metrics import macro_f1
from gnn.models import predict
from gnn.trainer import SourceTrainConfig, train_source
from graph.split import split_train_val
from settings import ConfigError


class TestDomainPairConfig:

    def test_defaults_are_valid(self):
        cfg = DomainPairConfig()
        assert cfg.to_dict()["n_nodes"] == 1000

    @pytest.mark.parametrize("kwargs", [
        {"p_in": 0.01, "p_out": 0.01},
        {"p_out": -0.1},
        {"density_ratio": 0.0},
        {"p_in": 0.5, "density_ratio": 4.0},
        {"feature_noise": 0.0},
        {"feature_shift": -1.0},
        {"n_nodes": 3, "n_classes": 4},
    ])
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ConfigError):
            DomainPairConfig(**kwargs)


class TestGenPair:

    def test_block_sizes_balanced(self):
        assert block_sizes(10, 3) == [4, 3, 3]
        assert sum(block_sizes(1000, 4)) == 1000

    def test_deterministic_per_seed(self, tiny_pair_config):
        (s1, t1), (s2, t2) = gen_pair(tiny_pair_config), gen_pair(tiny_pair_config)
        np.testing.assert_array_equal(s1.edge_array(), s2.edge_array())
        np.testing.assert_array_equal(t1.features, t2.features)
        np.testing.assert_array_equal(t1.labels, t2.labels)

    def test_seed_changes_sample(self, tiny_pair_config):
        other = DomainPairConfig(**{**tiny_pair_config.to_dict(), "seed": 4})
        assert not np.array_equal(gen_pair(tiny_pair_config)[0].features, gen_pair(other)[0].features)

    def test_both_domains_labeled(self, tiny_pair):
        for g in tiny_pair:
            assert g.has_labels
            assert g.n_nodes == 60
            assert g.features.shape == (60, 4)

    def test_density_ratio(self):
        source, target = gen_pair(DomainPairConfig(n_nodes=600, density_ratio=6.5, seed=1))
        ratio = target.degrees().mean() / source.degrees().mean()
        assert 5.5 <= ratio <= 7.5

    def test_no_cross_class_edges_gives_pure_components(self):
        source, target = gen_pair(DomainPairConfig(n_nodes=200, n_classes=2, p_in=0.05, p_out=0.0, seed=2))
        for g in (source, target):
            nxg = nx.Graph(g.edge_array().tolist())
            for component in nx.connected_components(nxg):
                assert len({int(g.labels[v]) for v in component}) == 1

    def test_feature_shift_moves_class_means(self):
        cfg = DomainPairConfig(
            n_nodes=4000, n_classes=2, feature_dim=2, p_in=0.001, p_out=0.0, feature_shift=1.5, seed=3,
        )
        source, target = gen_pair(cfg)
        shift = np.linalg.norm(class_means(target) - class_means(source), axis=1)
        tolerance = 4 * cfg.feature_noise * np.sqrt(2 * cfg.feature_dim / 2000)
        np.testing.assert_allclose(shift, cfg.feature_shift, atol=tolerance)

    def test_no_shift_keeps_class_means(self):
        cfg = DomainPairConfig(n_nodes=2000, n_classes=2, feature_dim=2, p_in=0.002, p_out=0.0, seed=5)
        source, target = gen_pair(cfg)
        tolerance = 4 * np.sqrt(2 * cfg.feature_dim / 1000)
        np.testing.assert_allclose(class_means(target), class_means(source), atol=tolerance)
        assert not np.array_equal(target.features, source.features)


class TestUnshiftedPair:

    @pytest.mark.slow
    def test_source_model_transfers_without_shift(self):
        cfg = DomainPairConfig(
            n_nodes=400, n_classes=3, feature_dim=16, p_in=0.05, p_out=0.005,
            density_ratio=1.0, feature_shift=0.0, seed=4,
        )
        source, target = gen_pair(cfg)
        split = split_train_val(source, ratio=0.8, seed=0)
        ckpt = train_source(source, split, SourceTrainConfig(hidden_dim=16, max_epochs=100, patience=20))

        val_f1 = ckpt.metadata["best_val_macro_f1"]
        target_f1 = macro_f1(predict(ckpt, target).argmax(), target.labels, cfg.n_classes)
        assert abs(target_f1 - val_f1) <= 0.1, (val_f1, target_f1)
