"""
Sensitivity sweep over the structure-consistency weights.

One source model is trained for the configured (arch, seed); it is then
adapted once per (lambda1, lambda2) pair of every arm. Each arm reports the
per-epoch target Macro-F1 mean and std across its runs, after the first
skip_n epochs.
"""

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from gnn.checkpoint import ModelCheckpoint
from gnn.trainer import train_source
from graph.models import Graph, GraphDataError
from graph.split import split_train_val
from pipeline.benchmark import evaluate_checkpoint, metric_callback
from pipeline.config import SweepConfig
from pipeline.ledger import RunLedger
from pipeline.manifest import RunManifest
from pipeline.workers import estimate_job_bytes, memory_capped_workers, run_jobs
from soga.adapter import RunRecord, adapt
from soga.config import SogaConfig
from structure.pairs import PairSet, mine_pairs

logger = logging.getLogger(__name__)


@dataclass
class SweepRun:
    arm: str
    lambda1: float
    lambda2: float
    record: RunRecord

    @property
    def label(self) -> str:
        return arm_label(self.arm, self.lambda1, self.lambda2)


def arm_label(arm: str, lambda1: float, lambda2: float) -> str:
    return f"{arm}:{lambda1:g}/{lambda2:g}"


@dataclass
class ArmCurve:
    """Per-epoch mean/std of target Macro-F1 across the runs of one arm."""
    arm: str
    epochs: list[int]
    mean: list[float]
    std: list[float]
    n_runs: int

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "mean_macro_f1", "std_macro_f1", "n_runs"])
            for epoch, m, s in zip(self.epochs, self.mean, self.std):
                writer.writerow([epoch, repr(m), repr(s), self.n_runs])
        return path


@dataclass
class SweepStats:
    name: str
    runs: list[SweepRun] = field(default_factory=list)
    curves: dict[str, ArmCurve] = field(default_factory=dict)
    unadapted_macro_f1: float | None = None
    start_time: datetime = field(default_factory=datetime.now)
    end_time: datetime | None = None

    def summary(self) -> str:
        duration = (self.end_time - self.start_time).total_seconds() if self.end_time else 0.0
        lines = [
            "=" * 50,
            f"Lambda sweep '{self.name}' Complete",
            "=" * 50,
            f"Runs: {len(self.runs)}",
            f"Unadapted target Macro-F1: {self.unadapted_macro_f1:.4f}" if self.unadapted_macro_f1 is not None else "",
        ]
        for curve in self.curves.values():
            lines.append(
                f"  {curve.arm}: {curve.n_runs} runs, last epoch "
                f"{curve.mean[-1]:.4f} ± {curve.std[-1]:.4f}"
            )
        lines.append(f"Duration: {duration:.1f} seconds")
        return "\n".join(line for line in lines if line)


def arm_curve(arm: str, records: list[RunRecord], skip_n: int) -> ArmCurve:
    """
    Aggregate Macro-F1 traces of one arm, dropping the first skip_n epochs.

    Raises:
        ValueError: If the traces are missing or of different lengths.
    """
    traces = [r.macro_f1_trace() for r in records]
    if not traces or any(len(t) != len(traces[0]) for t in traces):
        raise ValueError(f"arm {arm}: Macro-F1 traces missing or of unequal length")
    matrix = np.asarray(traces, dtype=np.float64)[:, skip_n:]
    return ArmCurve(
        arm=arm,
        epochs=list(range(skip_n + 1, skip_n + 1 + matrix.shape[1])),
        mean=matrix.mean(axis=0).tolist(),
        std=matrix.std(axis=0).tolist(),
        n_runs=len(traces),
    )


def _adapt_run(args: tuple[ModelCheckpoint, Graph, PairSet, SogaConfig]) -> RunRecord:
    ckpt, target, pairs, cfg = args
    _, record = adapt(ckpt, target.unlabeled(), pairs, cfg, epoch_callback=metric_callback(target))
    return record


def run_sweep(
    cfg: SweepConfig,
    output_dir: str | Path,
    jobs: int = 1,
    use_db: bool = True,
    progress: bool = False,
    manifest: RunManifest | None = None
) -> SweepStats:
    """
    Run the lambda sweep and write per-arm curve CSVs, runs.csv and the manifest.

    Raises:
        GraphDataError: If the target has no labels (the sweep reports Macro-F1).
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest = manifest or RunManifest(subcommand="sweep-lambdas", argv=[])
    manifest.config = cfg.to_dict()
    manifest.seeds = [cfg.seed]
    stats = SweepStats(name=cfg.name)

    with manifest.timed("load"):
        source, target = cfg.task.load()
    for path in cfg.task.input_paths():
        manifest.add_input(path)
    if target.labels is None:
        raise GraphDataError("sweep-lambdas needs target labels to report Macro-F1")

    with manifest.timed("pairs"):
        pairs = mine_pairs(target.unlabeled(), cfg.pairs, progress=progress)

    with manifest.timed("source"):
        split = split_train_val(source, ratio=cfg.split_ratio, seed=cfg.seed)
        ckpt = train_source(source, split, replace(cfg.source, arch=cfg.arch, seed=cfg.seed), progress=progress)
    stats.unadapted_macro_f1 = evaluate_checkpoint(ckpt, target)["macro_f1"]

    plan = [
        (arm, l1, l2)
        for arm, lambda_pairs in cfg.lambda_arms().items()
        for l1, l2 in lambda_pairs
    ]
    work = [(ckpt, target, pairs, replace(cfg.soga, seed=cfg.seed, lambda1=l1, lambda2=l2)) for _, l1, l2 in plan]
    logger.info(f"Sweeping {len(plan)} lambda pairs over {len(cfg.lambda_arms())} arm(s)")

    footprint = estimate_job_bytes(target, cfg.arch, cfg.source.hidden_dim, cfg.source.heads)
    workers = memory_capped_workers(jobs, footprint)
    ledger = RunLedger(use_db, name=output_dir.name, kind="sweep", config=manifest.config)
    arch = cfg.arch.value
    for arm, l1, l2 in plan:
        ledger.start_cell(cfg.task.name, arch, arm_label(arm, l1, l2), cfg.seed)
    with manifest.timed("adapt"):
        records = run_jobs(_adapt_run, work, jobs=workers, progress=progress, desc="sweep")

    stats.runs = [SweepRun(arm, l1, l2, record) for (arm, l1, l2), record in zip(plan, records)]
    for arm in cfg.lambda_arms():
        arm_records = [r.record for r in stats.runs if r.arm == arm]
        stats.curves[arm] = arm_curve(arm, arm_records, cfg.skip_n)
        manifest.add_output(stats.curves[arm].write_csv(output_dir / f"sweep_{arm}.csv"))

    runs_path = output_dir / "runs.csv"
    with open(runs_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["arm", "lambda1", "lambda2", "final_macro_f1", "final_micro_f1"])
        for run in stats.runs:
            last = run.record.epochs[-1]
            writer.writerow([run.arm, repr(run.lambda1), repr(run.lambda2), repr(last.macro_f1), repr(last.micro_f1)])
    manifest.add_output(runs_path)

    summary_path = output_dir / "sweep.json"
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump({
            "config": manifest.config,
            "unadapted_macro_f1": stats.unadapted_macro_f1,
            "arms": {arm: {"epochs": c.epochs, "mean": c.mean, "std": c.std, "n_runs": c.n_runs}
                     for arm, c in stats.curves.items()},
        }, f, indent=2)
    manifest.add_output(summary_path)

    for run in stats.runs:
        last = run.record.epochs[-1]
        ledger.record_cell(
            cfg.task.name, arch, run.label, cfg.seed, error=None,
            metrics={
                "unadapted_macro_f1": stats.unadapted_macro_f1,
                "adapted_macro_f1": last.macro_f1,
                "adapted_micro_f1": last.micro_f1,
                "duration_seconds": round(run.record.seconds, 3),
            },
            epochs=run.record.epochs,
        )

    stats.end_time = datetime.now()
    manifest.finish()
    manifest.write(output_dir)
    ledger.finish(failed=False, manifest=manifest.to_dict())
    logger.info(stats.summary())
    return stats
