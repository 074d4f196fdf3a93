"""
Source-free adaptation loop.

adapt() maximizes L_IM + L_SC over the checkpoint's parameters using only
an UnlabeledGraph. Evaluation against held-out labels, when wanted, happens
in an epoch callback owned by the caller.
"""

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from tqdm import tqdm

from diffmath import Adam, Tape, Tensor, ops
from gnn.checkpoint import CheckpointError, ModelCheckpoint
from gnn.models import GNNModel
from graph.models import GraphDataError, UnlabeledGraph
from soga.config import SogaConfig
from soga.objectives import draw_negatives, im_objective, sc_objective
from soga.sampler import NegativeSampler
from structure.pairs import PairSet

logger = logging.getLogger(__name__)

LOG_EVERY = 10

EpochCallback = Callable[[int, GNNModel], dict | None]


class NumericFailure(RuntimeError):
    """Exception raised when the objective becomes NaN or infinite."""

    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass
class EpochRecord:
    epoch: int
    l_im: float
    l_sc: float
    total: float
    macro_f1: float | None = None
    micro_f1: float | None = None


@dataclass
class RunRecord:
    """Per-epoch objective trace of one adaptation run."""
    config: dict
    epochs: list[EpochRecord] = field(default_factory=list)
    seconds: float = 0.0

    def macro_f1_trace(self) -> list[float]:
        return [e.macro_f1 for e in self.epochs if e.macro_f1 is not None]

    @property
    def has_metrics(self) -> bool:
        return any(e.macro_f1 is not None for e in self.epochs)

    def write_csv(self, path: str | Path) -> Path:
        """Write the curve: epoch, L_IM, L_SC, total (+ Macro/Micro-F1 when evaluated)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = ["epoch", "l_im", "l_sc", "total"]
        if self.has_metrics:
            header += ["macro_f1", "micro_f1"]
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for e in self.epochs:
                row = [e.epoch, repr(e.l_im), repr(e.l_sc), repr(e.total)]
                if self.has_metrics:
                    row += ["" if v is None else repr(v) for v in (e.macro_f1, e.micro_f1)]
                writer.writerow(row)
        return path

    def to_dict(self) -> dict:
        return {"config": self.config, "seconds": self.seconds, "epochs": [asdict(e) for e in self.epochs]}


class EpochPredictions:
    """
    Epoch callback keeping each epoch's argmax labels for later scoring.

    Needs no labels, so adapt runs stay label-free and eval scores the
    trace afterwards.
    """

    def __init__(self, view: UnlabeledGraph):
        self.view = view
        self.epochs: list[int] = []
        self.labels: list[np.ndarray] = []

    def __call__(self, epoch: int, model: GNNModel) -> None:
        self.epochs.append(epoch)
        self.labels.append(model.predict(self.view).argmax())

    def write_csv(self, path: str | Path) -> Path:
        """One row per epoch: the epoch number, then one predicted label per node."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            for epoch, labels in zip(self.epochs, self.labels):
                writer.writerow([epoch, *labels.tolist()])
        return path


def read_epoch_predictions(path: str | Path) -> tuple[list[int], np.ndarray]:
    """
    Read an epoch prediction file written by EpochPredictions.

    Returns:
        (epoch numbers, labels of shape (n_epochs, n_nodes))

    Raises:
        GraphDataError: If rows are ragged or hold non-integer values.
    """
    path = Path(path)
    epochs, rows = [], []
    with open(path, "r", newline="", encoding="utf-8") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            try:
                values = [int(v) for v in row]
            except ValueError:
                raise GraphDataError(f"{path}:{line_no}: non-integer value")
            if rows and len(values) - 1 != len(rows[0]):
                raise GraphDataError(f"{path}:{line_no}: expected {len(rows[0])} labels, got {len(values) - 1}")
            epochs.append(values[0])
            rows.append(values[1:])
    if not rows:
        raise GraphDataError(f"{path}: no epochs recorded")
    return epochs, np.array(rows, dtype=np.int64)


def adapt(
    ckpt: ModelCheckpoint,
    target: UnlabeledGraph,
    pairs: PairSet,
    cfg: SogaConfig,
    epoch_callback: EpochCallback | None = None,
    progress: bool = False
) -> tuple[ModelCheckpoint, RunRecord]:
    """
    Adapt a source checkpoint to an unlabeled target graph.

    Each epoch: train-mode forward, loss = -(L_IM + L_SC), backward, Adam
    step. The final-epoch parameters are returned.

    Args:
        ckpt: Source checkpoint (not modified).
        target: Label-free target graph.
        pairs: Local and structural positive pairs of the target.
        cfg: Adaptation hyperparameters.
        epoch_callback: Called as callback(epoch, model) after each step;
                        may return {"macro_f1": ..., "micro_f1": ...}.
        progress: Show a tqdm progress bar.

    Returns:
        (adapted checkpoint, run record)

    Raises:
        TypeError: If target is not an UnlabeledGraph.
        CheckpointError: If feature dimensions differ.
        NumericFailure: If the objective becomes NaN or infinite.
    """
    if not isinstance(target, UnlabeledGraph):
        raise TypeError(f"adapt() takes an UnlabeledGraph, got {type(target).__name__}")
    if ckpt.feature_dim != target.feature_dim:
        raise CheckpointError(
            f"feature dimension mismatch: checkpoint {ckpt.feature_dim}, target {target.feature_dim}"
        )

    start = time.perf_counter()
    record = RunRecord(config=cfg.to_dict())
    if cfg.epochs == 0:
        return ckpt.copy(), record

    uses_im = cfg.cond_weight > 0 or cfg.marginal_weight > 0
    sc_sets = [p for w, p in ((cfg.lambda1, pairs.local), (cfg.lambda2, pairs.structural)) if w > 0]
    uses_sc = any(len(p) for p in sc_sets)
    if any(len(p) == 0 for p in sc_sets):
        logger.warning("An SC pair set with positive weight is empty; that term contributes 0")

    dropout_seq, negative_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    dropout_rng = np.random.default_rng(dropout_seq)
    sampler = NegativeSampler(target.n_nodes, np.random.default_rng(negative_seq)) if uses_sc else None
    fixed = draw_negatives(sampler, pairs, cfg.negatives) if uses_sc and not cfg.resample_negatives else None

    model = GNNModel(ckpt)
    optimizer = Adam(model.parameters(), lr=cfg.lr)

    bar = tqdm(range(1, cfg.epochs + 1), desc=f"adapt {ckpt.arch.value}", disable=not progress, leave=False)
    for epoch in bar:
        optimizer.zero_grad()
        with Tape() as tape:
            pred = model.forward(target, training=True, rng=dropout_rng)
            l_im = im_objective(pred, cfg) if uses_im else Tensor(0.0)
            l_sc = sc_objective(pred, pairs, sampler, cfg, negatives=fixed, warn_empty=False) if uses_sc else Tensor(0.0)
            total = ops.add(l_im, l_sc)
            if not math.isfinite(total.item()):
                raise NumericFailure(epoch, f"non-finite objective (L_IM={l_im.item()}, L_SC={l_sc.item()})")
            loss = ops.neg(total)
            if loss.requires_grad:
                tape.backward(loss)
        tape.release()
        optimizer.step()

        entry = EpochRecord(epoch=epoch, l_im=l_im.item(), l_sc=l_sc.item(), total=total.item())
        if epoch_callback is not None:
            metrics = epoch_callback(epoch, model) or {}
            entry.macro_f1 = metrics.get("macro_f1")
            entry.micro_f1 = metrics.get("micro_f1")
        record.epochs.append(entry)

        bar.set_postfix(total=f"{entry.total:.4f}")
        if epoch % LOG_EVERY == 0:
            suffix = f", Macro-F1 {entry.macro_f1:.4f}" if entry.macro_f1 is not None else ""
            logger.debug(f"adapt epoch {epoch}: L_IM {entry.l_im:.4f}, L_SC {entry.l_sc:.4f}{suffix}")

    record.seconds = time.perf_counter() - start
    adapted = model.to_checkpoint({"adapted_epochs": cfg.epochs, "adapt_seed": cfg.seed})
    logger.info(f"Adapted {ckpt.arch.value} for {cfg.epochs} epochs in {record.seconds:.1f}s")
    return adapted, record
