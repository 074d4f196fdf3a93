"""
Run ledger for benchmarks and lambda sweeps.

This module provides database connectivity, models, and operations
for storing benchmark runs, their cells and per-epoch metrics.
"""

from db.database import (
    dispose_engine,
    get_db_info,
    get_engine,
    get_session,
    init_db,
    session_scope,
    verify_connection,
)
from db.models import BenchmarkCell, BenchmarkRun, CellStatus, EpochMetric
from db.operations import RunRepository

__all__ = [
    "get_engine",
    "get_session",
    "session_scope",
    "init_db",
    "verify_connection",
    "get_db_info",
    "dispose_engine",
    "BenchmarkRun",
    "BenchmarkCell",
    "EpochMetric",
    "CellStatus",
    "RunRepository",
]
