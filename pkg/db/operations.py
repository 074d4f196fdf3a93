"""
Run ledger CRUD operations.

Provides RunRepository class with methods for:
- Creating benchmark and sweep runs
- Adding cells and their per-epoch metrics
- Marking cells and runs completed or failed
- Querying cells of a run and failed cells
"""

import logging
from contextlib import contextmanager
from datetime import datetime
from typing import Generator, Iterable

from sqlalchemy import select
from sqlalchemy.orm import Session, selectinload

from db.database import session_scope
from db.models import BenchmarkCell, BenchmarkRun, CellStatus, EpochMetric

logger = logging.getLogger(__name__)


class RunRepository:
    """
    Repository for run ledger operations.

    Can be used with a provided session or create its own per call.
    """

    def __init__(self, session: Session | None = None):
        """
        Initialize repository with optional session.

        Args:
            session: SQLAlchemy session. If None, operations will
                    create their own sessions using session_scope().
        """
        self._session = session

    @contextmanager
    def _scope(self) -> Generator[Session, None, None]:
        if self._session:
            yield self._session
            self._session.flush()
        else:
            with session_scope() as session:
                yield session

    # ────────────────────────────────────────────────────────────────────────────
    # Create Operations
    # ────────────────────────────────────────────────────────────────────────────

    def create_run(self, name: str, kind: str, config: dict | None = None) -> BenchmarkRun:
        """
        Create a run record in RUNNING state.

        Args:
            name: Output directory name.
            kind: "benchmark" or "sweep".
            config: Experiment configuration echo.

        Returns:
            Created BenchmarkRun instance.
        """
        if kind not in ("benchmark", "sweep"):
            raise ValueError(f"unknown run kind {kind!r}")
        run = BenchmarkRun(name=name, kind=kind, config=config, status=CellStatus.RUNNING)
        with self._scope() as session:
            session.add(run)
            session.flush()
        logger.debug(f"Created run record: {run}")
        return run

    def add_cell(
        self,
        run_id: int,
        task: str,
        arch: str,
        variant: str,
        seed: int,
        status: CellStatus = CellStatus.PENDING,
        error_message: str | None = None,
        unadapted_macro_f1: float | None = None,
        unadapted_micro_f1: float | None = None,
        adapted_macro_f1: float | None = None,
        adapted_micro_f1: float | None = None,
        stability_mean: float | None = None,
        stability_std: float | None = None,
        duration_seconds: float | None = None,
    ) -> BenchmarkCell:
        """
        Add one cell to a run.

        Returns:
            Created BenchmarkCell instance.
        """
        cell = BenchmarkCell(
            run_id=run_id,
            task=task,
            arch=arch,
            variant=variant,
            seed=seed,
            status=status,
            error_message=error_message,
            unadapted_macro_f1=unadapted_macro_f1,
            unadapted_micro_f1=unadapted_micro_f1,
            adapted_macro_f1=adapted_macro_f1,
            adapted_micro_f1=adapted_micro_f1,
            stability_mean=stability_mean,
            stability_std=stability_std,
            duration_seconds=duration_seconds,
        )
        with self._scope() as session:
            session.add(cell)
            session.flush()
        logger.debug(f"Created cell record: {cell}")
        return cell

    def record_epochs(self, cell_id: int, epochs: Iterable) -> int:
        """
        Store per-epoch metrics of a cell.

        Args:
            cell_id: Primary key of the cell.
            epochs: Objects with epoch, l_im, l_sc, total and macro_f1 attributes
                    (soga.adapter.EpochRecord).

        Returns:
            Number of rows written.
        """
        rows = [
            EpochMetric(
                cell_id=cell_id,
                epoch=e.epoch,
                l_im=e.l_im,
                l_sc=e.l_sc,
                total=e.total,
                macro_f1=e.macro_f1,
            )
            for e in epochs
        ]
        with self._scope() as session:
            session.add_all(rows)
        return len(rows)

    # ────────────────────────────────────────────────────────────────────────────
    # Read Operations
    # ────────────────────────────────────────────────────────────────────────────

    def get_run(self, run_id: int) -> BenchmarkRun | None:
        with self._scope() as session:
            return session.get(BenchmarkRun, run_id)

    def get_runs(self, kind: str | None = None, limit: int | None = None) -> list[BenchmarkRun]:
        """
        Get runs, newest first.

        Args:
            kind: Filter by run kind.
            limit: Maximum number of results.
        """
        stmt = select(BenchmarkRun).order_by(BenchmarkRun.id.desc())
        if kind:
            stmt = stmt.where(BenchmarkRun.kind == kind)
        if limit:
            stmt = stmt.limit(limit)
        with self._scope() as session:
            return list(session.execute(stmt).scalars().all())

    def get_cells(self, run_id: int, status: CellStatus | None = None) -> list[BenchmarkCell]:
        """
        Get the cells of a run with their epoch metrics loaded.

        Args:
            run_id: Primary key of the run.
            status: Filter by cell status.
        """
        stmt = (
            select(BenchmarkCell)
            .where(BenchmarkCell.run_id == run_id)
            .options(selectinload(BenchmarkCell.epochs))
            .order_by(BenchmarkCell.id)
        )
        if status:
            stmt = stmt.where(BenchmarkCell.status == status)
        with self._scope() as session:
            return list(session.execute(stmt).scalars().all())

    def get_failed_cells(self, run_id: int | None = None) -> list[BenchmarkCell]:
        """Failed cells of one run, or of every run when run_id is None."""
        stmt = select(BenchmarkCell).where(BenchmarkCell.status == CellStatus.FAILED)
        if run_id is not None:
            stmt = stmt.where(BenchmarkCell.run_id == run_id)
        with self._scope() as session:
            return list(session.execute(stmt).scalars().all())

    # ────────────────────────────────────────────────────────────────────────────
    # Update Operations
    # ────────────────────────────────────────────────────────────────────────────

    def update_cell(self, cell_id: int, **kwargs) -> BenchmarkCell | None:
        """
        Update a cell record.

        Args:
            cell_id: Primary key of the cell.
            **kwargs: Fields to update.

        Returns:
            Updated BenchmarkCell instance or None if not found.
        """
        with self._scope() as session:
            cell = session.get(BenchmarkCell, cell_id)
            if cell:
                for key, value in kwargs.items():
                    if hasattr(cell, key):
                        setattr(cell, key, value)
            return cell

    def mark_cell_completed(self, cell_id: int, **metrics) -> BenchmarkCell | None:
        return self.update_cell(cell_id, status=CellStatus.COMPLETED, **metrics)

    def mark_cell_failed(self, cell_id: int, error_message: str, **metrics) -> BenchmarkCell | None:
        return self.update_cell(cell_id, status=CellStatus.FAILED, error_message=error_message, **metrics)

    def finish_run(
        self,
        run_id: int,
        status: CellStatus = CellStatus.COMPLETED,
        manifest: dict | None = None
    ) -> BenchmarkRun | None:
        """
        Close a run: set its final status, finish time and manifest.

        Returns:
            Updated BenchmarkRun instance or None if not found.
        """
        with self._scope() as session:
            run = session.get(BenchmarkRun, run_id)
            if run:
                run.status = status
                run.finished_at = datetime.now()
                if manifest is not None:
                    run.manifest = manifest
            return run

    # ────────────────────────────────────────────────────────────────────────────
    # Delete Operations
    # ────────────────────────────────────────────────────────────────────────────

    def delete_run(self, run_id: int) -> bool:
        """
        Delete a run with its cells and epoch metrics.

        Returns:
            True if deleted, False if not found.
        """
        with self._scope() as session:
            run = session.get(BenchmarkRun, run_id)
            if run:
                session.delete(run)
                logger.debug(f"Deleted run record: {run_id}")
                return True
            return False
