"""
Benchmark orchestrator.

For every task the structural pairs of the target are mined once. Then for
every (arch, seed) cell:
1. Split the labeled source graph and train a source model
2. Evaluate the unadapted model on the target (when target labels exist)
3. Adapt once per variant on the label-free target view
4. Evaluate every epoch and the final model, and compute stability statistics

Cells run in worker processes up to the jobs limit, capped by available
memory. Cells lost with a dead worker are rerun serially. Results are
aggregated in sorted (task, arch, variant, seed) order so tables do not depend on
scheduling. A failing cell is recorded and the others continue.
"""

import csv
import json
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from evaluation.metrics import classification_report, macro_f1, micro_f1
from evaluation.stability import StabilityStats, stability_stats
from gnn.checkpoint import Architecture, ModelCheckpoint
from gnn.models import GNNModel, check_label_compatibility, predict
from gnn.trainer import SourceTrainConfig, train_source
from graph.models import Graph, UnlabeledGraph
from graph.split import split_train_val
from pipeline.config import BenchmarkConfig
from pipeline.ledger import RunLedger
from pipeline.manifest import RunManifest
from pipeline.workers import estimate_job_bytes, memory_capped_workers, run_jobs
from soga.adapter import RunRecord, adapt
from soga.config import SogaConfig, SogaVariant
from structure.pairs import PairSet, mine_pairs

logger = logging.getLogger(__name__)

METRIC_COLUMNS = (
    "unadapted_macro_f1",
    "adapted_macro_f1",
    "unadapted_micro_f1",
    "adapted_micro_f1",
    "stability_mean",
    "stability_std",
)


@dataclass
class CellResult:
    """Result of one (task, arch, variant, seed) cell."""
    task: str
    arch: str
    variant: str
    seed: int
    success: bool
    error: str | None = None
    source_val_macro_f1: float | None = None
    unadapted_macro_f1: float | None = None
    unadapted_micro_f1: float | None = None
    adapted_macro_f1: float | None = None
    adapted_micro_f1: float | None = None
    stability: StabilityStats | None = None
    record: RunRecord | None = None
    duration: float = 0.0

    @property
    def key(self) -> tuple:
        return (self.task, self.arch, self.variant, self.seed)

    @property
    def stability_mean(self) -> float | None:
        return self.stability.mean if self.stability else None

    @property
    def stability_std(self) -> float | None:
        return self.stability.std if self.stability else None

    def metrics(self) -> dict:
        data = {name: getattr(self, name) for name in METRIC_COLUMNS}
        data["duration_seconds"] = round(self.duration, 3)
        return data


@dataclass
class CellJob:
    """Everything a worker process needs to run the variants of one (task, arch, seed)."""
    task: str
    arch: Architecture
    seed: int
    source: Graph
    target: Graph
    pairs: PairSet
    source_cfg: SourceTrainConfig
    soga_cfgs: dict[SogaVariant, SogaConfig]
    split_ratio: float
    skip_n: int
    progress: bool = False


@dataclass
class BenchmarkStats:
    """Statistics for a benchmark run."""
    name: str
    cells: list[CellResult] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    start_time: datetime = field(default_factory=datetime.now)
    end_time: datetime | None = None
    output_dir: Path | None = None

    @property
    def duration_seconds(self) -> float:
        if self.end_time:
            return (self.end_time - self.start_time).total_seconds()
        return 0.0

    @property
    def failed(self) -> list[CellResult]:
        return [c for c in self.cells if not c.success]

    def summary(self) -> str:
        """Generate summary string."""
        lines = [
            "=" * 50,
            f"Benchmark '{self.name}' Complete",
            "=" * 50,
            f"Cells: {len(self.cells)}",
            f"Succeeded: {len(self.cells) - len(self.failed)}",
            f"Failed: {len(self.failed)}",
            f"Duration: {self.duration_seconds:.1f} seconds",
        ]
        if self.rows:
            lines.append("")
            lines.append("Target Macro-F1 (mean ± std over seeds):")
            for row in self.rows:
                lines.append(
                    f"  {row['task']:<12} {row['arch']:<10} {row['variant']:<5} "
                    f"unadapted {_fmt(row['unadapted_macro_f1_mean'], row['unadapted_macro_f1_std'])}  "
                    f"adapted {_fmt(row['adapted_macro_f1_mean'], row['adapted_macro_f1_std'])}"
                )
        if self.failed:
            lines.append("")
            lines.append("Failed cells:")
            for c in self.failed:
                lines.append(f"  - {c.task}/{c.arch}/{c.variant}/seed {c.seed}: {c.error}")
        if self.output_dir:
            lines.append(f"Outputs: {self.output_dir}")
        return "\n".join(lines)


def _fmt(mean: float | None, std: float | None) -> str:
    if mean is None:
        return "n/a"
    return f"{mean:.4f} ± {std:.4f}"


# ────────────────────────────────────────────────────────────────────────────────
# Evaluation helpers
# ────────────────────────────────────────────────────────────────────────────────

def evaluate_checkpoint(ckpt: ModelCheckpoint, graph: Graph) -> dict | None:
    """
    Eval-mode Macro/Micro-F1 on a labeled graph; None when it has no labels.

    Raises:
        CheckpointError: If the labels reach beyond the checkpoint's classes.
    """
    if graph.labels is None:
        return None
    check_label_compatibility(ckpt, graph.labels)
    report = classification_report(predict(ckpt, graph.unlabeled()).argmax(), graph.labels, graph.n_classes)
    return {"macro_f1": report.macro_f1, "micro_f1": report.micro_f1}


def label_callback(view: UnlabeledGraph, labels: np.ndarray, k: int):
    """
    Epoch callback scoring the adapting model against held-out labels.

    The adaptation loop only ever sees the unlabeled view; labels stay in
    this closure.
    """
    labels = np.asarray(labels)

    def callback(epoch: int, model: GNNModel) -> dict:
        pred = model.predict(view).argmax()
        return {"macro_f1": macro_f1(pred, labels, k), "micro_f1": micro_f1(pred, labels, k)}

    return callback


def metric_callback(graph: Graph):
    """label_callback for a labeled graph; None when the graph has no labels."""
    if graph.labels is None:
        return None
    return label_callback(graph.unlabeled(), graph.labels, graph.n_classes)


def stability_of(record: RunRecord, skip_n: int) -> StabilityStats | None:
    trace = record.macro_f1_trace()
    if len(trace) <= skip_n + 1:
        return None
    return stability_stats(trace, skip_n=skip_n)


# ────────────────────────────────────────────────────────────────────────────────
# Cell execution (runs in worker processes)
# ────────────────────────────────────────────────────────────────────────────────

def run_cell_job(job: CellJob) -> list[CellResult]:
    """
    Train one source model and adapt it once per variant.

    Never raises: failures come back as unsuccessful CellResults.
    """
    arch = job.arch.value
    start = time.perf_counter()
    try:
        split = split_train_val(job.source, ratio=job.split_ratio, seed=job.seed)
        ckpt = train_source(job.source, split, job.source_cfg, progress=job.progress)
        unadapted = evaluate_checkpoint(ckpt, job.target) or {}
    except Exception as e:
        logger.error(f"Source stage failed for {job.task}/{arch}/seed {job.seed}: {e}")
        return [
            CellResult(job.task, arch, v.value, job.seed, success=False, error=f"source stage: {e}")
            for v in job.soga_cfgs
        ]
    source_seconds = time.perf_counter() - start

    view = job.target.unlabeled()
    callback = metric_callback(job.target)
    results = []
    for variant, soga_cfg in job.soga_cfgs.items():
        cell = CellResult(
            job.task, arch, variant.value, job.seed, success=False,
            source_val_macro_f1=ckpt.metadata.get("best_val_macro_f1"),
            unadapted_macro_f1=unadapted.get("macro_f1"),
            unadapted_micro_f1=unadapted.get("micro_f1"),
        )
        t0 = time.perf_counter()
        try:
            adapted, record = adapt(ckpt, view, job.pairs, soga_cfg, epoch_callback=callback, progress=job.progress)
            final = evaluate_checkpoint(adapted, job.target) or {}
            cell.adapted_macro_f1 = final.get("macro_f1")
            cell.adapted_micro_f1 = final.get("micro_f1")
            cell.stability = stability_of(record, job.skip_n)
            cell.record = record
            cell.success = True
        except Exception as e:
            logger.error(f"Adaptation failed for {job.task}/{arch}/{variant.value}/seed {job.seed}: {e}")
            cell.error = str(e)
        cell.duration = source_seconds + time.perf_counter() - t0
        results.append(cell)
    return results


# ────────────────────────────────────────────────────────────────────────────────
# Aggregation and outputs
# ────────────────────────────────────────────────────────────────────────────────

def _stats(values: list[float]) -> tuple[float | None, float | None, float | None]:
    if not values:
        return None, None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std()), float(np.median(arr))


def aggregate(cells: list[CellResult]) -> list[dict]:
    """Mean, population std and median over seeds per (task, arch, variant)."""
    groups: dict[tuple, list[CellResult]] = defaultdict(list)
    for c in sorted(cells, key=lambda c: c.key):
        groups[(c.task, c.arch, c.variant)].append(c)

    rows = []
    for (task, arch, variant), group in sorted(groups.items()):
        ok = [c for c in group if c.success]
        row = {
            "task": task,
            "arch": arch,
            "variant": variant,
            "n_seeds": len(group),
            "n_failed": len(group) - len(ok),
        }
        for name in METRIC_COLUMNS:
            values = [getattr(c, name) for c in ok if getattr(c, name) is not None]
            row[f"{name}_mean"], row[f"{name}_std"], row[f"{name}_median"] = _stats(values)
        rows.append(row)
    return rows


def _csv_value(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_table(rows: list[dict], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if rows:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _csv_value(v) for k, v in row.items()})
    return path


def cell_rows(cells: list[CellResult]) -> list[dict]:
    rows = []
    for c in cells:
        row = {
            "task": c.task,
            "arch": c.arch,
            "variant": c.variant,
            "seed": c.seed,
            "status": "completed" if c.success else "failed",
            "error": c.error,
            "source_val_macro_f1": c.source_val_macro_f1,
        }
        row.update({name: getattr(c, name) for name in METRIC_COLUMNS})
        rows.append(row)
    return rows


def stability_rows(cells: list[CellResult]) -> list[dict]:
    return [
        {"task": c.task, "arch": c.arch, "variant": c.variant, "seed": c.seed, **c.stability.to_dict()}
        for c in cells if c.stability is not None
    ]


def curve_path(output_dir: Path, cell: CellResult) -> Path:
    return output_dir / "curves" / f"{cell.task}__{cell.arch}__{cell.variant}__seed{cell.seed}.csv"


# ────────────────────────────────────────────────────────────────────────────────
# Runner
# ────────────────────────────────────────────────────────────────────────────────

class BenchmarkRunner:
    """
    Runs a BenchmarkConfig and writes its tables, curves and manifest.

    Outputs (under output_dir):
    - results.csv / results.json: mean/std/median per (task, arch, variant)
    - cells.csv: one row per cell, failures included
    - stability.csv: per-cell stability statistics
    - curves/*.csv: per-epoch objectives and target metrics per cell
    - run_manifest.json
    """

    def __init__(
        self,
        cfg: BenchmarkConfig,
        output_dir: str | Path,
        jobs: int = 1,
        use_db: bool = True,
        progress: bool = False,
        manifest: RunManifest | None = None
    ):
        self.cfg = cfg
        self.output_dir = Path(output_dir)
        self.jobs = jobs
        self.use_db = use_db
        self.progress = progress
        self.manifest = manifest or RunManifest(subcommand="run-benchmark", argv=[])

    def build_jobs(self) -> list[CellJob]:
        """Load every task, mine its pairs, and expand the (arch, seed) cells."""
        jobs = []
        for task in self.cfg.tasks:
            with self.manifest.timed("load"):
                source, target = task.load()
            for path in task.input_paths():
                self.manifest.add_input(path)
            if target.labels is None:
                logger.warning(f"Task {task.name}: target has no labels; evaluation steps are skipped")
            with self.manifest.timed("pairs"):
                pairs = mine_pairs(target.unlabeled(), self.cfg.pairs, progress=self.progress)
            logger.info(
                f"Task {task.name}: {len(pairs.local)} local and {len(pairs.structural)} structural pairs"
            )
            for arch in self.cfg.archs:
                for seed in self.cfg.seeds:
                    jobs.append(CellJob(
                        task=task.name,
                        arch=arch,
                        seed=seed,
                        source=source,
                        target=target,
                        pairs=pairs,
                        source_cfg=self.cfg.source_config(arch, seed),
                        soga_cfgs={v: self.cfg.soga_config(v, seed) for v in self.cfg.variants},
                        split_ratio=self.cfg.split_ratio,
                        skip_n=self.cfg.skip_n,
                        progress=self.progress and self.jobs == 1,
                    ))
        return jobs

    def worker_count(self, jobs: list[CellJob]) -> int:
        """Requested jobs, capped so the largest cell's estimated footprint fits in memory."""
        if self.jobs <= 1 or not jobs:
            return self.jobs
        peak = max(
            estimate_job_bytes(graph, job.arch, job.source_cfg.hidden_dim, job.source_cfg.heads)
            for job in jobs
            for graph in (job.source, job.target)
        )
        return memory_capped_workers(self.jobs, peak)

    def _execute(self, jobs: list[CellJob]) -> list[CellResult]:
        batches = run_jobs(run_cell_job, jobs, jobs=self.worker_count(jobs), progress=self.progress, desc="cells")
        results = [cell for batch in batches for cell in batch]
        return sorted(results, key=lambda c: c.key)

    def write_outputs(self, stats: BenchmarkStats) -> None:
        out = self.output_dir
        for path in (
            write_table(stats.rows, out / "results.csv"),
            write_table(cell_rows(stats.cells), out / "cells.csv"),
            write_table(stability_rows(stats.cells), out / "stability.csv"),
        ):
            self.manifest.add_output(path)

        results_json = out / "results.json"
        with open(results_json, "w", encoding="utf-8") as f:
            json.dump({"config": self.cfg.to_dict(), "rows": stats.rows}, f, indent=2)
        self.manifest.add_output(results_json)

        for cell in stats.cells:
            if cell.record is not None and cell.record.epochs:
                self.manifest.add_output(cell.record.write_csv(curve_path(out, cell)))

    def run(self) -> BenchmarkStats:
        stats = BenchmarkStats(name=self.cfg.name, output_dir=self.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest.config = self.cfg.to_dict()
        self.manifest.seeds = list(self.cfg.seeds)

        ledger = RunLedger(self.use_db, name=self.output_dir.name, kind="benchmark", config=self.manifest.config)
        logger.info(
            f"Starting benchmark '{self.cfg.name}': {len(self.cfg.tasks)} task(s), "
            f"{len(self.cfg.archs)} arch(s), {len(self.cfg.variants)} variant(s), "
            f"{len(self.cfg.seeds)} seed(s), jobs={self.jobs}"
        )

        jobs = self.build_jobs()
        for job in jobs:
            for variant in job.soga_cfgs:
                ledger.start_cell(job.task, job.arch.value, variant.value, job.seed)
        with self.manifest.timed("cells"):
            stats.cells = self._execute(jobs)
        stats.rows = aggregate(stats.cells)

        for cell in stats.cells:
            ledger.record_cell(
                cell.task, cell.arch, cell.variant, cell.seed,
                error=cell.error if not cell.success else None,
                metrics=cell.metrics(),
                epochs=cell.record.epochs if cell.record else (),
            )

        self.write_outputs(stats)
        stats.end_time = datetime.now()
        self.manifest.finish()
        self.manifest.write(self.output_dir)
        ledger.finish(failed=bool(stats.failed), manifest=self.manifest.to_dict())

        logger.info(stats.summary())
        return stats
