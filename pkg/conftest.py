"""
Shared pytest fixtures: small hand-checkable graphs, a tiny synthetic domain
pair and an isolated SQLite run ledger.
"""

import numpy as np
import pytest

from datagen.sbm import DomainPairConfig, gen_pair
from db.database import dispose_engine
from graph.models import Graph


def make_graph(n_nodes: int, edges, n_classes: int = 2, labels=None, features=None) -> Graph:
    """Graph with one-hot node-index features unless features are given."""
    if features is None:
        features = np.eye(n_nodes)
    if labels is None:
        labels = np.arange(n_nodes) % n_classes
    return Graph.from_edges(n_nodes, edges, features, n_classes, labels=labels)


@pytest.fixture
def graph_factory():
    return make_graph


@pytest.fixture
def path_graph() -> Graph:
    """a - b - c"""
    return make_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def star_graph() -> Graph:
    """K_{1,4} with center 0."""
    return make_graph(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture
def cycle_graph() -> Graph:
    """4-cycle 0-1-2-3-0."""
    return make_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def triangles_graph() -> Graph:
    """Two disjoint triangles."""
    return make_graph(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])


@pytest.fixture
def tiny_pair_config() -> DomainPairConfig:
    return DomainPairConfig(
        n_nodes=60,
        n_classes=2,
        feature_dim=4,
        p_in=0.2,
        p_out=0.02,
        density_ratio=2.0,
        feature_shift=0.5,
        seed=3,
    )


@pytest.fixture
def tiny_pair(tiny_pair_config) -> tuple[Graph, Graph]:
    return gen_pair(tiny_pair_config)


@pytest.fixture
def ledger_db(tmp_path, monkeypatch):
    """Point the run ledger at a fresh SQLite file for the duration of a test."""
    url = f"sqlite:///{tmp_path / 'ledger.db'}"
    monkeypatch.setenv("SOGA_DATABASE_URL", url)
    dispose_engine()
    yield url
    dispose_engine()


@pytest.fixture(autouse=True)
def _quiet_env(monkeypatch):
    """Keep progress bars off and the default ledger out of the working directory."""
    monkeypatch.setenv("SOGA_PROGRESS", "0")
    monkeypatch.setenv("SOGA_JOBS", "1")
