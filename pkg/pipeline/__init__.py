"""
Experiment pipeline for the SOGA graph adapter.

This module provides:
- Experiment configs (BenchmarkConfig, SweepConfig) loaded from JSON
- BenchmarkRunner: source training, adaptation and evaluation per cell
- run_sweep: lambda sensitivity curves
- RunManifest: reproducibility record written beside every output
- run_jobs: memory-capped process pool with serial rerun of lost jobs
"""

from pipeline.benchmark import BenchmarkRunner, BenchmarkStats, CellResult, aggregate, evaluate_checkpoint
from pipeline.config import (
    BenchmarkConfig,
    SweepConfig,
    TaskSpec,
    load_benchmark_config,
    load_sweep_config,
    parse_benchmark_config,
    parse_sweep_config,
)
from pipeline.ledger import RunLedger
from pipeline.manifest import RunManifest, calculate_hash
from pipeline.sweep import ArmCurve, SweepStats, arm_curve, run_sweep
from pipeline.workers import memory_capped_workers, run_jobs

__all__ = [
    "BenchmarkConfig",
    "SweepConfig",
    "TaskSpec",
    "load_benchmark_config",
    "load_sweep_config",
    "parse_benchmark_config",
    "parse_sweep_config",
    "BenchmarkRunner",
    "BenchmarkStats",
    "CellResult",
    "aggregate",
    "evaluate_checkpoint",
    "run_sweep",
    "arm_curve",
    "ArmCurve",
    "SweepStats",
    "RunLedger",
    "RunManifest",
    "calculate_hash",
    "run_jobs",
    "memory_capped_workers",
]
