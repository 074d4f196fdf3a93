"""
Synthetic source/target graph pairs from a stochastic block model.

Both domains share balanced class blocks and Gaussian class-mean features.
The target differs from the source along two axes:
- density: every target edge probability is the source probability times density_ratio
- features: each target class mean is translated by a random vector of norm feature_shift
"""

import logging
from dataclasses import asdict, dataclass

import networkx as nx
import numpy as np

from graph.models import Graph
from settings import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class DomainPairConfig:
    n_nodes: int = 1000
    n_classes: int = 4
    feature_dim: int = 16
    p_in: float = 0.024
    p_out: float = 0.0027
    density_ratio: float = 1.0
    feature_shift: float = 0.0
    feature_noise: float = 1.0
    class_separation: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 1 or self.n_nodes < self.n_classes:
            raise ConfigError(f"need n_nodes >= n_classes >= 1, got {self.n_nodes}, {self.n_classes}")
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ConfigError(f"need 0 <= p_out < p_in <= 1, got p_out={self.p_out}, p_in={self.p_in}")
        if self.density_ratio <= 0:
            raise ConfigError(f"density_ratio must be > 0, got {self.density_ratio}")
        if self.p_in * self.density_ratio > 1.0:
            raise ConfigError(f"target p_in = {self.p_in * self.density_ratio:.4f} exceeds 1")
        if self.feature_shift < 0 or self.feature_noise <= 0 or self.class_separation < 0:
            raise ConfigError("feature_shift and class_separation must be >= 0, feature_noise > 0")

    def to_dict(self) -> dict:
        return asdict(self)


def block_sizes(n_nodes: int, n_classes: int) -> list[int]:
    """Balanced block sizes; the first n % k blocks get one extra node."""
    sizes = [n_nodes // n_classes] * n_classes
    for i in range(n_nodes % n_classes):
        sizes[i] += 1
    return sizes


def _random_unit_rows(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    vectors = rng.normal(size=(rows, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def _sample_domain(
    cfg: DomainPairConfig,
    probs: np.ndarray,
    means: np.ndarray,
    rng: np.random.Generator
) -> Graph:
    sizes = block_sizes(cfg.n_nodes, cfg.n_classes)
    labels = np.repeat(np.arange(cfg.n_classes), sizes)
    sbm = nx.stochastic_block_model(sizes, probs.tolist(), seed=int(rng.integers(2**31 - 1)), sparse=True)
    edges = np.array(list(sbm.edges()), dtype=np.int64).reshape(-1, 2)
    features = means[labels] + cfg.feature_noise * rng.normal(size=(cfg.n_nodes, cfg.feature_dim))
    return Graph.from_edges(
        n_nodes=cfg.n_nodes,
        edges=edges,
        features=features,
        n_classes=cfg.n_classes,
        labels=labels,
    )


def gen_pair(cfg: DomainPairConfig) -> tuple[Graph, Graph]:
    """
    Generate (source, target), both fully labeled and deterministic per seed.

    Target labels exist for evaluation only.
    """
    means_rng, source_rng, target_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )
    k = cfg.n_classes

    source_means = cfg.class_separation * _random_unit_rows(means_rng, k, cfg.feature_dim)
    target_means = source_means + cfg.feature_shift * _random_unit_rows(means_rng, k, cfg.feature_dim)

    source_probs = np.full((k, k), cfg.p_out)
    np.fill_diagonal(source_probs, cfg.p_in)
    target_probs = source_probs * cfg.density_ratio

    source = _sample_domain(cfg, source_probs, source_means, source_rng)
    target = _sample_domain(cfg, target_probs, target_means, target_rng)
    logger.info(
        f"Generated domain pair: source {source.n_edges} edges, target {target.n_edges} edges "
        f"(density ratio {cfg.density_ratio}, feature shift {cfg.feature_shift})"
    )
    return source, target


def class_means(g: Graph) -> np.ndarray:
    """Empirical per-class feature means (k x d)."""
    return np.stack([g.features[g.labels == c].mean(axis=0) for c in range(g.n_classes)])
