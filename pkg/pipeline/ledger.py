"""
Best-effort run ledger writes for benchmarks and sweeps.

File artifacts are the primary output; a ledger that cannot be reached or
fails mid-run is logged and switched off instead of failing the run.
"""

import logging
from typing import Iterable

from sqlalchemy.exc import SQLAlchemyError

from db.database import init_db
from db.models import CellStatus
from db.operations import RunRepository

logger = logging.getLogger(__name__)


class RunLedger:
    """Writes one run and its cells to the database through RunRepository."""

    def __init__(self, enabled: bool, name: str, kind: str, config: dict):
        self.run_id: int | None = None
        self._repo: RunRepository | None = None
        self._cells: dict[tuple, int] = {}
        if not enabled:
            return
        if not init_db():
            logger.warning("Run ledger unavailable; continuing with file outputs only")
            return
        try:
            self._repo = RunRepository()
            self.run_id = self._repo.create_run(name=name, kind=kind, config=config).id
            logger.info(f"Recording run {self.run_id} in the run ledger")
        except SQLAlchemyError as e:
            self._disable(e)

    @property
    def enabled(self) -> bool:
        return self._repo is not None

    def _disable(self, error: Exception) -> None:
        logger.warning(f"Run ledger write failed ({error}); continuing without it")
        self._repo = None

    def start_cell(self, task: str, arch: str, variant: str, seed: int) -> None:
        """Register a cell as RUNNING before it executes."""
        if not self.enabled:
            return
        try:
            cell = self._repo.add_cell(
                run_id=self.run_id,
                task=task,
                arch=arch,
                variant=variant,
                seed=seed,
                status=CellStatus.RUNNING,
            )
            self._cells[(task, arch, variant, seed)] = cell.id
        except SQLAlchemyError as e:
            self._disable(e)

    def record_cell(
        self,
        task: str,
        arch: str,
        variant: str,
        seed: int,
        error: str | None,
        metrics: dict,
        epochs: Iterable = ()
    ) -> None:
        """
        Move a cell to COMPLETED, or FAILED when error is set, and store its epochs.

        A cell that was never started is registered first.
        """
        key = (task, arch, variant, seed)
        if key not in self._cells:
            self.start_cell(*key)
        if not self.enabled:
            return
        cell_id = self._cells.pop(key)
        try:
            if error:
                self._repo.mark_cell_failed(cell_id, error, **metrics)
            else:
                self._repo.mark_cell_completed(cell_id, **metrics)
            self._repo.record_epochs(cell_id, epochs)
        except SQLAlchemyError as e:
            self._disable(e)

    def finish(self, failed: bool, manifest: dict) -> None:
        if not self.enabled:
            return
        try:
            status = CellStatus.FAILED if failed else CellStatus.COMPLETED
            self._repo.finish_run(self.run_id, status=status, manifest=manifest)
        except SQLAlchemyError as e:
            self._disable(e)
