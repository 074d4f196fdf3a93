"""run_soga command line: subcommand flow, exit codes and replay."""

import json
from pathlib import Path

import numpy as np
import pytest

import run_soga
from gnn.checkpoint import Architecture, init_checkpoint, save_checkpoint
from graph.loader import write_graph
from pipeline.manifest import RunManifest

SMOKE_CONFIG = str(Path(__file__).resolve().parents[1] / "configs" / "smoke.json")

TINY_FLAGS = [
    "--n-nodes", "60", "--n-classes", "2", "--feature-dim", "4", "--p-in", "0.2",
    "--p-out", "0.02", "--density-ratio", "2", "--feature-shift", "0.5", "--seed", "3",
]


@pytest.fixture
def data_dir(tmp_path):
    out = tmp_path / "data"
    assert run_soga.main(["gen-data", "-o", str(out), *TINY_FLAGS]) == run_soga.EXIT_OK
    return out


@pytest.fixture
def source_run(tmp_path, data_dir):
    out = tmp_path / "source"
    code = run_soga.main([
        "train-source", str(data_dir / "source" / "manifest.json"), "-o", str(out),
        "--arch", "GCN", "--epochs", "10", "--patience", "5", "--hidden", "8",
    ])
    assert code == run_soga.EXIT_OK
    return out


class TestExitCodes:

    def test_help(self, capsys):
        assert run_soga.main(["--help"]) == run_soga.EXIT_OK

    def test_unknown_subcommand(self, capsys):
        assert run_soga.main(["pseudo-label"]) == run_soga.EXIT_CONFIG

    def test_bad_flag_value(self, tmp_path):
        code = run_soga.main(["gen-data", "-o", str(tmp_path), "--density-ratio", "0"])
        assert code == run_soga.EXIT_CONFIG

    def test_unknown_config_key(self, tmp_path, capsys):
        config = tmp_path / "exp.json"
        config.write_text(json.dumps({"datagen": {"n_node": 10}}), encoding="utf-8")
        code = run_soga.main(["gen-data", "-o", str(tmp_path / "out"), "--config", str(config)])
        assert code == run_soga.EXIT_CONFIG
        assert "unknown key" in capsys.readouterr().err

    def test_missing_manifest(self, tmp_path):
        code = run_soga.main(["mine-pairs", str(tmp_path / "nope.json"), "-o", str(tmp_path / "out")])
        assert code == run_soga.EXIT_DATA

    def test_unlabeled_source(self, tmp_path):
        data = tmp_path / "data"
        run_soga.main(["gen-data", "-o", str(data), "--target-unlabeled", *TINY_FLAGS])
        code = run_soga.main(["train-source", str(data / "target" / "manifest.json"), "-o", str(tmp_path / "s")])
        assert code == run_soga.EXIT_DATA

    def test_corrupt_checkpoint(self, tmp_path, data_dir):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"not a checkpoint")
        code = run_soga.main([
            "adapt", "--ckpt", str(bad), "--target-manifest", str(data_dir / "target" / "manifest.json"),
            "--out", str(tmp_path / "a"),
        ])
        assert code == run_soga.EXIT_DATA

    def test_bad_jobs(self, tmp_path):
        code = run_soga.main(["run-benchmark", SMOKE_CONFIG, "--jobs", "0", "--no-db", "-o", str(tmp_path)])
        assert code == run_soga.EXIT_CONFIG


class TestFlow:

    def test_gen_data_layout(self, data_dir):
        for domain in ("source", "target"):
            assert (data_dir / domain / "manifest.json").is_file()
            assert (data_dir / domain / "labels.txt").is_file()
        manifest = RunManifest.load(data_dir)
        assert manifest.subcommand == "gen-data"
        assert manifest.config["density_ratio"] == 2.0

    def test_target_unlabeled(self, tmp_path):
        data = tmp_path / "data"
        run_soga.main(["gen-data", "-o", str(data), "--target-unlabeled", *TINY_FLAGS])
        assert not (data / "target" / "labels.txt").exists()
        assert (data / "source" / "labels.txt").exists()

    def test_train_mine_adapt_eval(self, tmp_path, data_dir, source_run):
        target = str(data_dir / "target" / "manifest.json")
        assert (source_run / "source.ckpt").is_file()

        pairs_dir = tmp_path / "pairs"
        assert run_soga.main(["mine-pairs", target, "-o", str(pairs_dir), "--kappa", "30"]) == run_soga.EXIT_OK
        assert len((pairs_dir / "pairs.tsv").read_text(encoding="utf-8").splitlines()) == 30

        adapted = tmp_path / "adapted"
        code = run_soga.main([
            "adapt", "--ckpt", str(source_run / "source.ckpt"), "--target-manifest", target,
            "--out", str(adapted), "--pairs", str(pairs_dir / "pairs.tsv"), "--epochs", "5",
        ])
        assert code == run_soga.EXIT_OK
        for name in ("adapted.ckpt", "curve.csv", "epoch_labels.csv", "predictions.csv", "run_manifest.json"):
            assert (adapted / name).is_file()
        probs = np.loadtxt(adapted / "predictions.csv", delimiter=",")
        assert probs.shape == (60, 2)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

        report_path = tmp_path / "report.json"
        code = run_soga.main([
            "eval", str(adapted / "predictions.csv"), "--target", target, "-o", str(report_path),
            "--curve", str(adapted), "--skip-n", "2",
        ])
        assert code == run_soga.EXIT_OK
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert 0.0 <= report["macro_f1"] <= 1.0
        assert 0.0 <= report["auc"] <= 1.0
        assert report["curve"]["epochs"] == 5
        assert report["curve"]["final_macro_f1"] == pytest.approx(report["macro_f1"])
        assert report["curve"]["stability"]["n_epochs"] == 3
        rows = (adapted / "curve_eval.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "epoch,macro_f1,micro_f1"
        assert [int(r.split(",")[0]) for r in rows[1:]] == [1, 2, 3, 4, 5]

    def test_eval_label_file(self, tmp_path):
        pred, truth = tmp_path / "pred.txt", tmp_path / "truth.txt"
        pred.write_text("0\n1\n0\n1\n", encoding="utf-8")
        truth.write_text("0\n0\n1\n1\n", encoding="utf-8")
        out = tmp_path / "report.json"
        assert run_soga.main(["eval", str(pred), "--labels", str(truth), "-o", str(out)]) == run_soga.EXIT_OK
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["macro_f1"] == pytest.approx(0.5)
        assert "auc" not in report

    def test_eval_needs_labels(self, tmp_path):
        pred = tmp_path / "pred.txt"
        pred.write_text("0\n1\n", encoding="utf-8")
        assert run_soga.main(["eval", str(pred)]) == run_soga.EXIT_CONFIG

    def test_eval_length_mismatch(self, tmp_path):
        pred, truth = tmp_path / "pred.txt", tmp_path / "truth.txt"
        pred.write_text("0\n1\n", encoding="utf-8")
        truth.write_text("0\n1\n1\n", encoding="utf-8")
        assert run_soga.main(["eval", str(pred), "--labels", str(truth)]) == run_soga.EXIT_DATA

    def test_verify_lemmas(self, tmp_path):
        out = tmp_path / "lemmas.json"
        code = run_soga.main(["verify-lemmas", "--k", "3", "--nodes", "12", "-o", str(out)])
        assert code == run_soga.EXIT_OK
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["lemma1"]["passed"]
        assert report["lemma2"]["auc_after"] == pytest.approx(0.7, abs=1e-12)

    def test_verify_lemmas_degenerate_setup(self):
        assert run_soga.main(["verify-lemmas", "--n-pos", "7"]) == run_soga.EXIT_CONFIG


class TestAdaptFlags:

    @pytest.fixture
    def adapt_argv(self, tmp_path, data_dir, source_run):
        def build(out: str, *extra: str) -> list[str]:
            return [
                "adapt", "--ckpt", str(source_run / "source.ckpt"),
                "--target-manifest", str(data_dir / "target" / "manifest.json"),
                "--out", str(tmp_path / out), "--epochs", "2", "--kappa", "20", *extra,
            ]
        return build

    @staticmethod
    def write_prior(tmp_path, text: str) -> str:
        path = tmp_path / "prior.txt"
        path.write_text(text, encoding="utf-8")
        return str(path)

    def test_prior_file_selects_kl(self, tmp_path, adapt_argv):
        prior = self.write_prior(tmp_path, "0.5\n0.5\n")
        assert run_soga.main(adapt_argv("kl", "--prior", prior)) == run_soga.EXIT_OK
        soga = RunManifest.load(tmp_path / "kl").config["soga"]
        assert soga["marginal_mode"] == "kl"
        assert soga["label_prior"] == [0.5, 0.5]

    def test_explicit_kl_with_comma_separated_prior(self, tmp_path, adapt_argv):
        prior = self.write_prior(tmp_path, "0.25,0.75")
        code = run_soga.main(adapt_argv("kl", "--marginal", "kl", "--prior", prior))
        assert code == run_soga.EXIT_OK
        assert RunManifest.load(tmp_path / "kl").config["soga"]["label_prior"] == [0.25, 0.75]

    def test_neg_and_marginal_flags(self, tmp_path, adapt_argv):
        code = run_soga.main(adapt_argv("ent", "--neg", "3", "--marginal", "entropy", "--lambda2", "0.5"))
        assert code == run_soga.EXIT_OK
        soga = RunManifest.load(tmp_path / "ent").config["soga"]
        assert soga["negatives"] == 3
        assert soga["marginal_mode"] == "entropy"
        assert soga["lambda2"] == 0.5
        assert soga["label_prior"] is None

    @pytest.mark.parametrize("text", ["0.2 0.3 0.5", "0.9", "1.5,-0.5", "0.6 0.6", "0.5 half"])
    def test_bad_prior_file(self, tmp_path, adapt_argv, text):
        prior = self.write_prior(tmp_path, text)
        assert run_soga.main(adapt_argv("bad", "--prior", prior)) == run_soga.EXIT_CONFIG
        assert not (tmp_path / "bad" / "adapted.ckpt").exists()

    def test_missing_prior_file(self, tmp_path, adapt_argv):
        code = run_soga.main(adapt_argv("bad", "--prior", str(tmp_path / "nope.txt")))
        assert code == run_soga.EXIT_CONFIG

    def test_kl_needs_prior(self, adapt_argv):
        assert run_soga.main(adapt_argv("bad", "--marginal", "kl")) == run_soga.EXIT_CONFIG

    def test_prior_conflicts_with_entropy(self, tmp_path, adapt_argv):
        prior = self.write_prior(tmp_path, "0.5 0.5")
        code = run_soga.main(adapt_argv("bad", "--marginal", "entropy", "--prior", prior))
        assert code == run_soga.EXIT_CONFIG

    def test_unknown_marginal(self, adapt_argv):
        assert run_soga.main(adapt_argv("bad", "--marginal", "js")) == run_soga.EXIT_CONFIG

    def test_labels_are_not_an_adapt_flag(self, data_dir, adapt_argv):
        labels = str(data_dir / "target" / "labels.txt")
        assert run_soga.main(adapt_argv("bad", "--eval-labels", labels)) == run_soga.EXIT_CONFIG

    def test_missing_required_flags(self, data_dir):
        target = str(data_dir / "target" / "manifest.json")
        assert run_soga.main(["adapt", "--target-manifest", target, "--out", "x"]) == run_soga.EXIT_CONFIG

    def test_two_node_target_is_a_data_error(self, tmp_path, graph_factory):
        target = write_graph(graph_factory(2, [(0, 1)]), tmp_path / "tiny")
        ckpt = save_checkpoint(init_checkpoint(Architecture.GCN, 2, 4, 2), tmp_path / "tiny.ckpt")
        code = run_soga.main([
            "adapt", "--ckpt", str(ckpt), "--target-manifest", str(target),
            "--out", str(tmp_path / "a"), "--epochs", "1",
        ])
        assert code == run_soga.EXIT_DATA


class TestReplay:

    def test_replay_argv_redirects_output(self):
        manifest = RunManifest(subcommand="adapt", argv=["adapt", "a", "b", "-o", "old"])
        assert run_soga.replay_argv(manifest, "new") == ["adapt", "a", "b", "-o", "new"]
        assert run_soga.replay_argv(manifest) == ["adapt", "a", "b", "-o", "old"]

    def test_replay_argv_redirects_out_flag(self):
        manifest = RunManifest(subcommand="adapt", argv=["adapt", "--ckpt", "a", "--out", "old"])
        assert run_soga.replay_argv(manifest, "new") == ["adapt", "--ckpt", "a", "--out", "new"]
        manifest = RunManifest(subcommand="adapt", argv=["adapt", "--ckpt", "a", "--out=old"])
        assert run_soga.replay_argv(manifest, "new")[-1] == "--out=new"

    def test_replay_argv_equals_form(self):
        manifest = RunManifest(subcommand="run-benchmark", argv=["run-benchmark", "c.json", "--output=old"])
        assert run_soga.replay_argv(manifest, "new")[-1] == "--output=new"

    def test_replay_argv_appends_output(self):
        manifest = RunManifest(subcommand="run-benchmark", argv=["run-benchmark", "c.json"])
        assert run_soga.replay_argv(manifest, "new") == ["run-benchmark", "c.json", "--output", "new"]

    def test_replay_reproduces_predictions(self, tmp_path, data_dir, source_run):
        first = tmp_path / "first"
        code = run_soga.main([
            "adapt", "--ckpt", str(source_run / "source.ckpt"),
            "--target-manifest", str(data_dir / "target" / "manifest.json"),
            "--out", str(first), "--epochs", "4", "--kappa", "20",
        ])
        assert code == run_soga.EXIT_OK
        second = tmp_path / "second"
        assert run_soga.main(["replay", str(first), "-o", str(second)]) == run_soga.EXIT_OK
        assert (first / "predictions.csv").read_bytes() == (second / "predictions.csv").read_bytes()
        assert (first / "curve.csv").read_bytes() == (second / "curve.csv").read_bytes()

    def test_strict_replay_rejects_changed_inputs(self, tmp_path, data_dir):
        pred, truth = tmp_path / "pred.txt", tmp_path / "truth.txt"
        pred.write_text("0\n1\n", encoding="utf-8")
        truth.write_text("0\n1\n", encoding="utf-8")
        manifest = RunManifest(subcommand="eval", argv=["eval", str(pred), "--labels", str(truth)])
        manifest.add_input(truth)
        manifest.write(tmp_path / "run")
        truth.write_text("1\n0\n", encoding="utf-8")
        assert run_soga.main(["replay", str(tmp_path / "run"), "--strict"]) == run_soga.EXIT_DATA
        assert run_soga.main(["replay", str(tmp_path / "run")]) == run_soga.EXIT_OK

    def test_missing_manifest(self, tmp_path):
        assert run_soga.main(["replay", str(tmp_path)]) == run_soga.EXIT_DATA
