"""
SQLAlchemy models for the SOGA run ledger.

Database Schema:
----------------
benchmark_runs table:
    - id: Primary key, auto-increment
    - name: Output directory name of the run
    - kind: "benchmark" or "sweep"
    - config: Full experiment configuration (JSON)
    - manifest: RunManifest written beside the outputs (JSON)
    - status: Run status enum (pending, running, completed, failed)
    - created_at / finished_at: Timestamps

benchmark_cells table:
    - id: Primary key
    - run_id: Foreign key to benchmark_runs
    - task / arch / variant / seed: Cell coordinates
    - status: Cell status enum
    - error_message: Error details if the cell failed
    - unadapted_macro_f1 / unadapted_micro_f1: Source model on the target
    - adapted_macro_f1 / adapted_micro_f1: Final-epoch adapted model
    - stability_mean / stability_std: Macro-F1 after the skipped epochs
    - duration_seconds: Wall-clock time of the cell

epoch_metrics table:
    - id: Primary key
    - cell_id: Foreign key to benchmark_cells
    - epoch, l_im, l_sc, total, macro_f1: One adaptation epoch
"""

from datetime import datetime
from enum import Enum as PyEnum
from typing import List, Optional

from sqlalchemy import (
    JSON,
    DateTime,
    Enum,
    Float,
    ForeignKey,
    Index,
    Integer,
    String,
    Text,
    UniqueConstraint,
    func,
)
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class CellStatus(PyEnum):
    """Execution status of runs and benchmark cells."""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class Base(DeclarativeBase):
    """Base class for all SQLAlchemy models."""
    pass


class BenchmarkRun(Base):
    """One run-benchmark or sweep-lambdas invocation."""
    __tablename__ = "benchmark_runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    name: Mapped[str] = mapped_column(String(255), nullable=False)
    kind: Mapped[str] = mapped_column(String(20), nullable=False, default="benchmark")

    config: Mapped[Optional[dict]] = mapped_column(JSON, nullable=True)
    manifest: Mapped[Optional[dict]] = mapped_column(JSON, nullable=True)

    status: Mapped[CellStatus] = mapped_column(
        Enum(CellStatus, name="run_status_enum"),
        nullable=False,
        default=CellStatus.RUNNING
    )

    created_at: Mapped[datetime] = mapped_column(
        DateTime,
        nullable=False,
        server_default=func.now()
    )
    finished_at: Mapped[Optional[datetime]] = mapped_column(DateTime, nullable=True)

    cells: Mapped[List["BenchmarkCell"]] = relationship(
        "BenchmarkCell",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="BenchmarkCell.id"
    )

    __table_args__ = (
        Index("idx_runs_kind", "kind"),
        Index("idx_runs_status", "status"),
    )

    def __repr__(self) -> str:
        return f"<BenchmarkRun(id={self.id}, name='{self.name}', kind={self.kind}, status={self.status.value})>"

    def to_dict(self) -> dict:
        """Convert model to dictionary for serialization."""
        return {
            "id": self.id,
            "name": self.name,
            "kind": self.kind,
            "config": self.config,
            "manifest": self.manifest,
            "status": self.status.value,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "finished_at": self.finished_at.isoformat() if self.finished_at else None,
        }


class BenchmarkCell(Base):
    """
    One (task, arch, variant, seed) cell of a benchmark.

    Sweep runs use the variant column for the lambda arm label.
    """
    __tablename__ = "benchmark_cells"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(
        Integer, ForeignKey("benchmark_runs.id", ondelete="CASCADE"), nullable=False
    )

    task: Mapped[str] = mapped_column(String(100), nullable=False)
    arch: Mapped[str] = mapped_column(String(20), nullable=False)
    variant: Mapped[str] = mapped_column(String(50), nullable=False)
    seed: Mapped[int] = mapped_column(Integer, nullable=False)

    status: Mapped[CellStatus] = mapped_column(
        Enum(CellStatus, name="cell_status_enum"),
        nullable=False,
        default=CellStatus.PENDING
    )
    error_message: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    unadapted_macro_f1: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    unadapted_micro_f1: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    adapted_macro_f1: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    adapted_micro_f1: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    stability_mean: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    stability_std: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    duration_seconds: Mapped[Optional[float]] = mapped_column(Float, nullable=True)

    run: Mapped["BenchmarkRun"] = relationship("BenchmarkRun", back_populates="cells")
    epochs: Mapped[List["EpochMetric"]] = relationship(
        "EpochMetric",
        back_populates="cell",
        cascade="all, delete-orphan",
        order_by="EpochMetric.epoch"
    )

    __table_args__ = (
        Index("idx_cells_run_id", "run_id"),
        Index("idx_cells_status", "status"),
        UniqueConstraint("run_id", "task", "arch", "variant", "seed", name="uq_cell_coordinates"),
    )

    def __repr__(self) -> str:
        return (
            f"<BenchmarkCell(id={self.id}, task='{self.task}', arch={self.arch}, "
            f"variant={self.variant}, seed={self.seed}, status={self.status.value})>"
        )

    def to_dict(self) -> dict:
        """Convert model to dictionary for serialization."""
        return {
            "id": self.id,
            "run_id": self.run_id,
            "task": self.task,
            "arch": self.arch,
            "variant": self.variant,
            "seed": self.seed,
            "status": self.status.value,
            "error_message": self.error_message,
            "unadapted_macro_f1": self.unadapted_macro_f1,
            "unadapted_micro_f1": self.unadapted_micro_f1,
            "adapted_macro_f1": self.adapted_macro_f1,
            "adapted_micro_f1": self.adapted_micro_f1,
            "stability_mean": self.stability_mean,
            "stability_std": self.stability_std,
            "duration_seconds": self.duration_seconds,
        }


class EpochMetric(Base):
    """Objective values (and Macro-F1 when evaluated) of one adaptation epoch."""
    __tablename__ = "epoch_metrics"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    cell_id: Mapped[int] = mapped_column(
        Integer, ForeignKey("benchmark_cells.id", ondelete="CASCADE"), nullable=False
    )
    epoch: Mapped[int] = mapped_column(Integer, nullable=False)
    l_im: Mapped[float] = mapped_column(Float, nullable=False)
    l_sc: Mapped[float] = mapped_column(Float, nullable=False)
    total: Mapped[float] = mapped_column(Float, nullable=False)
    macro_f1: Mapped[Optional[float]] = mapped_column(Float, nullable=True)

    cell: Mapped["BenchmarkCell"] = relationship("BenchmarkCell", back_populates="epochs")

    __table_args__ = (
        UniqueConstraint("cell_id", "epoch", name="uq_cell_epoch"),
    )

    def __repr__(self) -> str:
        return f"<EpochMetric(cell_id={self.cell_id}, epoch={self.epoch}, total={self.total:.4f})>"
