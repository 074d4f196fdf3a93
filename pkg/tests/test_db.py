"""Run ledger models, repository and the best-effort RunLedger wrapper."""

import pytest

import init_db as init_script
from db import CellStatus, RunRepository, get_db_info, init_db, verify_connection
from pipeline.ledger import RunLedger
from soga.adapter import EpochRecord


@pytest.fixture
def repo(ledger_db):
    assert init_db()
    return RunRepository()


class TestDatabase:

    def test_sqlite_url_from_env(self, ledger_db):
        info = get_db_info()
        assert info["backend"] == "sqlite"
        assert info["database"].endswith("ledger.db")
        assert "pool_size" not in info

    def test_connection(self, ledger_db):
        assert verify_connection()


class TestRunRepository:

    def test_create_and_finish_run(self, repo):
        run = repo.create_run("smoke", "benchmark", config={"seeds": [1, 3]})
        assert run.status is CellStatus.RUNNING
        repo.finish_run(run.id, manifest={"tool_version": "x"})
        stored = repo.get_run(run.id)
        assert stored.status is CellStatus.COMPLETED
        assert stored.finished_at is not None
        assert stored.to_dict()["manifest"] == {"tool_version": "x"}

    def test_unknown_kind(self, repo):
        with pytest.raises(ValueError):
            repo.create_run("x", "training")

    def test_cells_and_epochs(self, repo):
        run = repo.create_run("smoke", "benchmark")
        cell = repo.add_cell(run.id, "task", "GCN", "full", 1, status=CellStatus.COMPLETED, adapted_macro_f1=0.8)
        written = repo.record_epochs(cell.id, [EpochRecord(e, -0.5, 0.2, -0.3, macro_f1=0.7) for e in (1, 2, 3)])
        assert written == 3

        cells = repo.get_cells(run.id)
        assert len(cells) == 1
        assert [e.epoch for e in cells[0].epochs] == [1, 2, 3]
        assert cells[0].to_dict()["adapted_macro_f1"] == 0.8

    def test_failed_cells(self, repo):
        run = repo.create_run("smoke", "benchmark")
        ok = repo.add_cell(run.id, "task", "GCN", "full", 1)
        bad = repo.add_cell(run.id, "task", "GAT", "full", 1)
        repo.mark_cell_completed(ok.id, adapted_macro_f1=0.9)
        repo.mark_cell_failed(bad.id, "epoch 3: non-finite objective")
        failed = repo.get_failed_cells(run.id)
        assert [c.arch for c in failed] == ["GAT"]
        assert failed[0].error_message.startswith("epoch 3")
        assert len(repo.get_cells(run.id, status=CellStatus.COMPLETED)) == 1

    def test_get_runs_newest_first(self, repo):
        first = repo.create_run("a", "benchmark")
        second = repo.create_run("b", "sweep")
        assert [r.id for r in repo.get_runs()] == [second.id, first.id]
        assert [r.name for r in repo.get_runs(kind="sweep")] == ["b"]

    def test_delete_cascades(self, repo):
        run = repo.create_run("smoke", "benchmark")
        repo.add_cell(run.id, "task", "GCN", "full", 1)
        assert repo.delete_run(run.id)
        assert repo.get_run(run.id) is None
        assert not repo.delete_run(run.id)


class TestRunLedger:

    def test_disabled_ledger_is_inert(self):
        ledger = RunLedger(enabled=False, name="x", kind="benchmark", config={})
        assert not ledger.enabled
        ledger.record_cell("task", "GCN", "full", 1, None, {})
        ledger.finish(False, {})

    def test_records_cells(self, ledger_db):
        ledger = RunLedger(enabled=True, name="smoke", kind="benchmark", config={"k": 1})
        assert ledger.enabled
        ledger.record_cell("task", "GCN", "full", 1, None, {"adapted_macro_f1": 0.75},
                           epochs=[EpochRecord(1, 0.1, 0.2, 0.3)])
        ledger.record_cell("task", "GAT", "full", 1, "boom", {})
        ledger.finish(True, {"seeds": [1]})

        repo = RunRepository()
        run = repo.get_run(ledger.run_id)
        assert run.status is CellStatus.FAILED
        statuses = {c.arch: c.status for c in repo.get_cells(ledger.run_id)}
        assert statuses == {"GCN": CellStatus.COMPLETED, "GAT": CellStatus.FAILED}

    def test_started_cell_moves_from_running_to_completed(self, ledger_db):
        ledger = RunLedger(enabled=True, name="smoke", kind="benchmark", config={})
        ledger.start_cell("task", "GCN", "full", 1)
        repo = RunRepository()
        (cell,) = repo.get_cells(ledger.run_id)
        assert cell.status is CellStatus.RUNNING
        assert cell.adapted_macro_f1 is None

        ledger.record_cell("task", "GCN", "full", 1, None, {"adapted_macro_f1": 0.6},
                           epochs=[EpochRecord(1, 0.1, 0.2, 0.3), EpochRecord(2, 0.2, 0.2, 0.4)])
        (done,) = repo.get_cells(ledger.run_id)
        assert done.id == cell.id
        assert done.status is CellStatus.COMPLETED
        assert done.adapted_macro_f1 == 0.6
        assert [e.epoch for e in done.epochs] == [1, 2]

    def test_failed_cell_keeps_partial_metrics(self, ledger_db):
        ledger = RunLedger(enabled=True, name="smoke", kind="benchmark", config={})
        ledger.start_cell("task", "GAT", "im", 2)
        ledger.record_cell("task", "GAT", "im", 2, "epoch 3: non-finite objective", {"unadapted_macro_f1": 0.5})
        (cell,) = RunRepository().get_failed_cells(ledger.run_id)
        assert cell.error_message == "epoch 3: non-finite objective"
        assert cell.unadapted_macro_f1 == 0.5

    def test_unfinished_cells_stay_running(self, ledger_db):
        ledger = RunLedger(enabled=True, name="smoke", kind="benchmark", config={})
        ledger.start_cell("task", "GCN", "full", 1)
        ledger.start_cell("task", "GCN", "full", 2)
        ledger.record_cell("task", "GCN", "full", 1, None, {})
        running = RunRepository().get_cells(ledger.run_id, status=CellStatus.RUNNING)
        assert [c.seed for c in running] == [2]

    def test_duplicate_cell_disables_ledger(self, ledger_db):
        ledger = RunLedger(enabled=True, name="smoke", kind="sweep", config={})
        ledger.record_cell("task", "GCN", "arm", 1, None, {})
        ledger.record_cell("task", "GCN", "arm", 1, None, {})
        assert not ledger.enabled


class TestInitScript:

    def test_creates_tables(self, ledger_db, capsys):
        assert init_script.main([]) == 0
        out = capsys.readouterr().out
        for table in ("benchmark_runs", "benchmark_cells", "epoch_metrics"):
            assert table in out
        assert RunRepository().get_runs() == []

    def test_check_only(self, ledger_db, capsys):
        assert init_script.main(["--check-only", "--verbose"]) == 0
        assert "Skipping table creation" in capsys.readouterr().out
