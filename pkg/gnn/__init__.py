"""
Graph neural network zoo.

Provides:
- Architecture: GCN, GraphSAGE, GAT
- ModelCheckpoint with binary save/load
- GNNModel / forward / predict: two-layer forward passes
- train_source: supervised source training with early stopping
"""

from gnn.checkpoint import (
    Architecture,
    CheckpointError,
    ModelCheckpoint,
    init_checkpoint,
    load_checkpoint,
    param_shapes,
    save_checkpoint,
)
from gnn.models import ForwardMode, GNNModel, check_label_compatibility, forward, predict
from gnn.trainer import SourceTrainConfig, cross_entropy_loss, train_source

__all__ = [
    "Architecture",
    "CheckpointError",
    "ModelCheckpoint",
    "init_checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "param_shapes",
    "ForwardMode",
    "GNNModel",
    "forward",
    "predict",
    "check_label_compatibility",
    "SourceTrainConfig",
    "cross_entropy_loss",
    "train_source",
]
