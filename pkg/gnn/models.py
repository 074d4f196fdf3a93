"""
Two-layer GCN, GraphSAGE and GAT forward passes.

All three share one interface: GNNModel.forward(graph) returns an n x k
row-stochastic tensor, differentiable with respect to the model parameters.
Hidden activation is ReLU; dropout is applied to the input features and the
hidden layer in training mode only.
"""

import logging
from enum import Enum

import numpy as np

from diffmath import Tensor, ops
from gnn.checkpoint import Architecture, CheckpointError, ModelCheckpoint
from graph.models import PredictionMatrix, _GraphStructure

logger = logging.getLogger(__name__)


class ForwardMode(Enum):
    """Forward-pass mode: TRAIN enables dropout, EVAL disables it."""
    TRAIN = "train"
    EVAL = "eval"


class GNNModel:
    """
    Trainable view of a checkpoint: parameters held as gradient-tracking tensors.

    Example:
        model = GNNModel.from_checkpoint(ckpt)
        with Tape() as tape:
            loss = cross_entropy_loss(model.forward(g, training=True, rng=rng), g.labels, idx)
            tape.backward(loss)
    """

    def __init__(self, ckpt: ModelCheckpoint):
        self.arch = ckpt.arch
        self.feature_dim = ckpt.feature_dim
        self.hidden_dim = ckpt.hidden_dim
        self.n_classes = ckpt.n_classes
        self.heads = ckpt.heads
        self.dropout = ckpt.dropout
        self.metadata = dict(ckpt.metadata)
        self.params = {name: Tensor(value, requires_grad=True) for name, value in ckpt.params.items()}

    @classmethod
    def from_checkpoint(cls, ckpt: ModelCheckpoint) -> "GNNModel":
        return cls(ckpt)

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def to_checkpoint(self, metadata: dict | None = None) -> ModelCheckpoint:
        """Snapshot current parameter values (copied) into a checkpoint."""
        merged = dict(self.metadata)
        merged.update(metadata or {})
        return ModelCheckpoint(
            arch=self.arch,
            feature_dim=self.feature_dim,
            hidden_dim=self.hidden_dim,
            n_classes=self.n_classes,
            heads=self.heads,
            params={name: t.data.copy() for name, t in self.params.items()},
            metadata=merged,
        )

    # ──────────────────────────────────────────────────────────────────────────
    # Forward
    # ──────────────────────────────────────────────────────────────────────────

    def forward(
        self,
        graph: _GraphStructure,
        training: bool = False,
        rng: np.random.Generator | None = None
    ) -> Tensor:
        """
        Class probabilities for every node.

        Args:
            graph: Graph or UnlabeledGraph; only structure and features are read.
            training: Apply dropout when True.
            rng: Dropout generator; required when training with dropout > 0.

        Raises:
            CheckpointError: If the graph's feature dimension differs from the model's.
        """
        if graph.feature_dim != self.feature_dim:
            raise CheckpointError(
                f"feature dimension mismatch: model expects {self.feature_dim}, graph has {graph.feature_dim}"
            )
        rate = self.dropout if training else 0.0
        if rate > 0 and rng is None:
            raise ValueError("training forward with dropout needs an rng")

        x = ops.dropout(Tensor(graph.features, copy=False), rate, rng)
        if self.arch is Architecture.GCN:
            logits = self._gcn(graph, x, rate, rng)
        elif self.arch is Architecture.GRAPHSAGE:
            logits = self._sage(graph, x, rate, rng)
        else:
            logits = self._gat(graph, x, rate, rng)
        return ops.row_softmax(logits)

    def predict(self, graph: _GraphStructure) -> PredictionMatrix:
        """Eval-mode predictions as a plain probability matrix."""
        return PredictionMatrix(self.forward(graph, training=False).numpy())

    def _gcn(self, graph, x, rate, rng) -> Tensor:
        p = self.params
        a_hat = graph.gcn_adjacency
        h = ops.relu(ops.sparse_dense_matmul(a_hat, x @ p["W1"]) + p["b1"])
        h = ops.dropout(h, rate, rng)
        return ops.sparse_dense_matmul(a_hat, h @ p["W2"]) + p["b2"]

    def _sage(self, graph, x, rate, rng) -> Tensor:
        p = self.params
        mean_adj = graph.mean_adjacency
        h = ops.hstack(x, ops.sparse_dense_matmul(mean_adj, x))
        h = ops.relu(h @ p["W1"] + p["b1"])
        h = ops.dropout(h, rate, rng)
        h = ops.hstack(h, ops.sparse_dense_matmul(mean_adj, h))
        return h @ p["W2"] + p["b2"]

    def _attention_head(self, graph, x, weight, a_src, a_dst) -> Tensor:
        indptr, indices, rows = graph.attention_index
        wh = x @ weight
        score_dst = wh @ a_dst
        score_src = wh @ a_src
        scores = ops.leaky_relu(ops.gather_rows(score_dst, rows) + ops.gather_rows(score_src, indices))
        alpha = ops.edge_softmax(scores, indptr)
        return ops.edge_aggregate(alpha, wh, indptr, indices)

    def _gat(self, graph, x, rate, rng) -> Tensor:
        p = self.params
        heads = [
            self._attention_head(graph, x, p[f"W1_{i}"], p[f"a1_src_{i}"], p[f"a1_dst_{i}"])
            for i in range(self.heads)
        ]
        h = ops.relu(ops.hstack(*heads) + p["b1"])
        h = ops.dropout(h, rate, rng)
        outputs = [
            self._attention_head(graph, h, p[f"W2_{i}"], p[f"a2_src_{i}"], p[f"a2_dst_{i}"])
            for i in range(self.heads)
        ]
        return ops.stack_mean(outputs) + p["b2"]


def forward(
    ckpt: ModelCheckpoint,
    g: _GraphStructure,
    mode: ForwardMode | str = ForwardMode.EVAL,
    rng: np.random.Generator | None = None
) -> PredictionMatrix:
    """
    Run a checkpoint on a graph without tracking gradients.

    Raises:
        CheckpointError: On feature dimension mismatch.
    """
    mode = ForwardMode(mode)
    if mode is ForwardMode.TRAIN and rng is None:
        rng = np.random.default_rng(0)
    model = GNNModel(ckpt)
    return PredictionMatrix(model.forward(g, training=mode is ForwardMode.TRAIN, rng=rng).numpy())


def predict(ckpt: ModelCheckpoint, g: _GraphStructure) -> PredictionMatrix:
    """Eval-mode predictions of a checkpoint."""
    return forward(ckpt, g, ForwardMode.EVAL)


def check_label_compatibility(ckpt: ModelCheckpoint, labels: np.ndarray) -> None:
    """
    Raises:
        CheckpointError: If any label is outside the checkpoint's class range.
    """
    if labels.size and labels.max() >= ckpt.n_classes:
        raise CheckpointError(
            f"dimension mismatch: checkpoint predicts {ckpt.n_classes} classes, labels reach {int(labels.max())}"
        )
