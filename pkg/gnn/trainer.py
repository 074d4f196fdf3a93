"""
Supervised source-model training.

Produces the checkpoint handed to adaptation. Training is full-batch Adam on
the cross-entropy of the training split, with early stopping on validation
Macro-F1.
"""

import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from diffmath import Adam, Tape, Tensor, ops
from evaluation.metrics import macro_f1
from gnn.checkpoint import Architecture, ModelCheckpoint, init_checkpoint
from gnn.models import GNNModel
from graph.models import Graph, GraphDataError
from graph.split import SplitAssignment
from settings import ConfigError

logger = logging.getLogger(__name__)

LOG_EVERY = 20


@dataclass
class SourceTrainConfig:
    """Source-training hyperparameters (standard GCN settings by default)."""
    arch: Architecture = Architecture.GCN
    lr: float = 1e-2
    weight_decay: float = 5e-4
    max_epochs: int = 200
    patience: int = 20
    dropout: float = 0.5
    hidden_dim: int = 128
    heads: int = 2
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.arch, str):
            self.arch = Architecture.parse(self.arch)
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs > 0 and self.patience > self.max_epochs:
            raise ConfigError(f"patience {self.patience} exceeds max_epochs {self.max_epochs}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.hidden_dim < 1 or self.heads < 1:
            raise ConfigError("hidden_dim and heads must be positive")
        if self.arch is Architecture.GAT and self.hidden_dim % self.heads:
            raise ConfigError(f"GAT hidden_dim {self.hidden_dim} must be divisible by heads {self.heads}")


def cross_entropy_loss(pred: Tensor, labels: np.ndarray, idx: np.ndarray) -> Tensor:
    """
    Mean negative log-likelihood of the observed labels over idx.

    Raises:
        ValueError: If idx is empty.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cross_entropy_loss needs at least one index")
    onehot = np.zeros((idx.size, pred.shape[1]))
    onehot[np.arange(idx.size), np.asarray(labels)[idx]] = 1.0
    picked = ops.sum(ops.mul(ops.gather_rows(pred, idx), onehot), axis=1)
    return ops.neg(ops.mean(ops.log_guarded(picked)))


def train_source(
    g_source: Graph,
    split: SplitAssignment,
    cfg: SourceTrainConfig,
    progress: bool = False
) -> ModelCheckpoint:
    """
    Train a source model and return the checkpoint with the best validation Macro-F1.

    With an empty validation split the training-split Macro-F1 is used for
    model selection. max_epochs = 0 returns the initialization.

    Raises:
        GraphDataError: If the graph is unlabeled or the training split is empty.
    """
    if g_source.labels is None:
        raise GraphDataError("train_source needs a labeled source graph")
    if len(split.train_idx) == 0:
        raise GraphDataError("no labeled nodes in training split")

    labels = g_source.labels
    select_idx = split.val_idx if len(split.val_idx) else split.train_idx
    k = g_source.n_classes

    base_meta = {"seed": cfg.seed, "dropout": cfg.dropout, "arch": cfg.arch.value}
    ckpt = init_checkpoint(
        cfg.arch, g_source.feature_dim, cfg.hidden_dim, k,
        heads=cfg.heads, seed=cfg.seed, metadata=base_meta,
    )
    model = GNNModel(ckpt)
    optimizer = Adam(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    dropout_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])

    def selection_score() -> float:
        pred = model.predict(g_source).argmax()
        return macro_f1(pred[select_idx], labels[select_idx], k)

    best_f1 = selection_score()
    best_epoch = 0
    best = model.to_checkpoint()
    stale = 0
    epochs_run = 0

    bar = tqdm(range(1, cfg.max_epochs + 1), desc=f"source {cfg.arch.value}", disable=not progress, leave=False)
    for epoch in bar:
        optimizer.zero_grad()
        with Tape() as tape:
            loss = cross_entropy_loss(model.forward(g_source, training=True, rng=dropout_rng), labels, split.train_idx)
            tape.backward(loss)
        tape.release()
        optimizer.step()
        epochs_run = epoch

        score = selection_score()
        if score > best_f1:
            best_f1, best_epoch, stale = score, epoch, 0
            best = model.to_checkpoint()
        else:
            stale += 1

        bar.set_postfix(loss=f"{loss.item():.4f}", val_f1=f"{score:.4f}")
        if epoch % LOG_EVERY == 0:
            logger.debug(f"source epoch {epoch}: loss {loss.item():.4f}, val Macro-F1 {score:.4f}")
        if stale >= cfg.patience:
            logger.debug(f"Early stop at epoch {epoch} (best epoch {best_epoch})")
            break

    best.metadata.update({
        "epochs": epochs_run,
        "best_epoch": best_epoch,
        "best_val_macro_f1": best_f1,
    })
    logger.info(
        f"Trained {cfg.arch.value} source model: best val Macro-F1 {best_f1:.4f} "
        f"at epoch {best_epoch}/{epochs_run}"
    )
    return best
