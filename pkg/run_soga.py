#!/usr/bin/env python3
"""
CLI entry point for the SOGA graph adapter.

Subcommands:
    gen-data        Generate a synthetic source/target dataset pair
    train-source    Train a source GNN on a labeled source graph
    mine-pairs      Mine structurally similar node pairs of a target graph
    adapt           Adapt a source checkpoint to an unlabeled target graph
    eval            Score predictions against labels
    verify-lemmas   Empirically check the entropy-minimization lemmas
    run-benchmark   Full source -> target benchmark over archs and seeds
    sweep-lambdas   Lambda sensitivity curves
    replay          Re-execute a run from its run_manifest.json

Exit codes: 0 success, 1 other failure, 2 configuration error,
3 data error, 4 numeric failure, 130 interrupted.

Usage:
    python run_soga.py gen-data --density-ratio 4 --feature-shift 1 -o data/dense
    python run_soga.py train-source data/dense/source/manifest.json --arch GCN -o runs/gcn
    python run_soga.py adapt --ckpt runs/gcn/source.ckpt --target-manifest data/dense/target/manifest.json --out runs/gcn-adapted
    python run_soga.py run-benchmark configs/benchmark.json --jobs 4
"""

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from datagen.sbm import DomainPairConfig, gen_pair
from db.database import dispose_engine
from evaluation.lemmas import LemmaTwoSetup, verify_lemma1, verify_lemma2
from evaluation.metrics import auc_binary, classification_report, macro_f1, micro_f1
from evaluation.stability import DEFAULT_SKIP, stability_stats
from gnn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from gnn.models import predict
from gnn.trainer import SourceTrainConfig, train_source
from graph.loader import load_graph, read_labels, read_predictions, write_graph, write_predictions
from graph.models import GraphDataError
from graph.split import split_train_val
from pipeline.benchmark import BenchmarkRunner
from pipeline.config import build_section, load_benchmark_config, load_sweep_config, read_config
from pipeline.manifest import RunManifest
from pipeline.sweep import run_sweep
from settings import ConfigError, get_jobs, get_output_dir, progress_enabled
from soga.adapter import EpochPredictions, NumericFailure, adapt, read_epoch_predictions
from soga.config import MarginalMode, SogaConfig, SogaVariant, read_label_prior
from structure.pairs import StructPairConfig, mine_pairs, read_pairs, write_pairs

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_INTERRUPTED = 130


def setup_logging(verbose: bool = False, log_file: str | None = None) -> None:
    """Configure logging for the run."""
    level = logging.DEBUG if verbose else logging.INFO

    handlers: list[logging.Handler] = [logging.StreamHandler()]

    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=handlers
    )


# ────────────────────────────────────────────────────────────────────────────────
# Helpers
# ────────────────────────────────────────────────────────────────────────────────

def _progress(args: argparse.Namespace) -> bool:
    return args.verbose and progress_enabled()


def _jobs(args: argparse.Namespace) -> int:
    if args.jobs is None:
        return get_jobs()
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    return args.jobs


def _section(args: argparse.Namespace, cls, key: str):
    """Config dataclass from --config's section (or defaults), with non-None flags applied."""
    data = {}
    if getattr(args, "config", None):
        data = read_config(args.config).get(key) or {}
    base = build_section(cls, data, key)
    overrides = {
        f.name: getattr(args, f.name)
        for f in dataclasses.fields(cls)
        if getattr(args, f.name, None) is not None
    }
    try:
        return dataclasses.replace(base, **overrides)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{key}: {e}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _new_manifest(args: argparse.Namespace) -> RunManifest:
    return RunManifest(subcommand=args.command, argv=list(args.argv))


def _write_json(data: dict, output: str | None) -> None:
    text = json.dumps(data, indent=2)
    print(text)
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")


# ────────────────────────────────────────────────────────────────────────────────
# Subcommands
# ────────────────────────────────────────────────────────────────────────────────

def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _section(args, DomainPairConfig, "datagen")
    out = Path(args.output)
    manifest = _new_manifest(args)
    manifest.config = cfg.to_dict()
    manifest.seeds = [cfg.seed]

    with manifest.timed("generate"):
        source, target = gen_pair(cfg)
    manifest.add_output(write_graph(source, out / "source"))
    manifest.add_output(write_graph(target, out / "target", include_labels=not args.target_unlabeled))
    manifest.finish()
    manifest.write(out)

    print(f"Source: {source.n_nodes} nodes, {source.n_edges} edges -> {out / 'source'}")
    print(f"Target: {target.n_nodes} nodes, {target.n_edges} edges -> {out / 'target'}")
    return EXIT_OK


def cmd_train_source(args: argparse.Namespace) -> int:
    cfg = _section(args, SourceTrainConfig, "source")
    out = Path(args.output)
    manifest = _new_manifest(args)
    manifest.add_input(args.source)

    graph = load_graph(args.source)
    if graph.labels is None:
        raise GraphDataError(f"{args.source}: source manifest has no labels")
    split = split_train_val(graph, ratio=args.split_ratio, seed=cfg.seed)
    with manifest.timed("train"):
        ckpt = train_source(graph, split, cfg, progress=_progress(args))

    config = dataclasses.asdict(cfg)
    config["arch"] = cfg.arch.value
    config["split_ratio"] = args.split_ratio
    manifest.config = config
    manifest.seeds = [cfg.seed]
    manifest.add_output(save_checkpoint(ckpt, out / "source.ckpt"))
    manifest.finish()
    manifest.write(out)

    print(
        f"Trained {cfg.arch.value}: best validation Macro-F1 "
        f"{ckpt.metadata['best_val_macro_f1']:.4f} at epoch {ckpt.metadata['best_epoch']}"
    )
    print(f"Checkpoint: {out / 'source.ckpt'}")
    return EXIT_OK


def _pair_config(args: argparse.Namespace) -> StructPairConfig:
    cfg = _section(args, StructPairConfig, "pairs")
    if args.no_bins:
        cfg = dataclasses.replace(cfg, bin_base=None)
    return cfg


def cmd_mine_pairs(args: argparse.Namespace) -> int:
    cfg = _pair_config(args)
    out = Path(args.output)
    manifest = _new_manifest(args)
    manifest.add_input(args.target)
    manifest.config = dataclasses.asdict(cfg)

    target = load_graph(args.target).unlabeled()
    with manifest.timed("mine"):
        pairs = mine_pairs(target, cfg, progress=_progress(args))
    path = write_pairs(pairs, out / "pairs.tsv")
    manifest.add_output(path)
    manifest.add_output(path.with_suffix(".json"))
    manifest.finish()
    manifest.write(out)

    print(f"Mined {len(pairs.structural)} structural pairs from {pairs.n_candidates} candidates -> {path}")
    return EXIT_OK


def _soga_config(args: argparse.Namespace, n_classes: int) -> SogaConfig:
    cfg = _section(args, SogaConfig, "soga")
    changes = {}
    mode = MarginalMode(args.marginal) if args.marginal else None
    if args.prior:
        if mode is MarginalMode.ENTROPY:
            raise ConfigError("--prior only applies to --marginal kl")
        changes["label_prior"] = read_label_prior(args.prior, n_classes)
        mode = MarginalMode.KL
    if mode is not None:
        changes["marginal_mode"] = mode
    if args.raw_sums:
        changes["normalize_pairs"] = False
    if args.fixed_negatives:
        changes["resample_negatives"] = False
    if changes:
        try:
            cfg = dataclasses.replace(cfg, **changes)
        except ValueError as e:
            raise e if isinstance(e, ConfigError) else ConfigError(str(e))
    if cfg.label_prior is not None and len(cfg.label_prior) != n_classes:
        raise ConfigError(f"label prior has {len(cfg.label_prior)} entries, model has {n_classes} classes")
    return cfg.with_variant(SogaVariant(args.variant))


def cmd_adapt(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.ckpt)
    cfg = _soga_config(args, ckpt.n_classes)
    out = Path(args.output)
    manifest = _new_manifest(args)
    manifest.add_input(args.ckpt)
    manifest.add_input(args.target_manifest)
    if args.prior:
        manifest.add_input(args.prior)
    manifest.config = {"soga": cfg.to_dict(), "variant": args.variant}
    manifest.seeds = [cfg.seed]

    # Labels are dropped at load time; adaptation only ever sees this view
    target = load_graph(args.target_manifest).unlabeled()

    if args.pairs:
        manifest.add_input(args.pairs)
        pairs = read_pairs(args.pairs, target)
    else:
        pair_cfg = _pair_config(args)
        manifest.config["pairs"] = dataclasses.asdict(pair_cfg)
        with manifest.timed("mine"):
            pairs = mine_pairs(target, pair_cfg, progress=_progress(args))

    trace = EpochPredictions(target)
    with manifest.timed("adapt"):
        adapted, record = adapt(ckpt, target, pairs, cfg, epoch_callback=trace, progress=_progress(args))

    manifest.add_output(save_checkpoint(adapted, out / "adapted.ckpt"))
    manifest.add_output(record.write_csv(out / "curve.csv"))
    manifest.add_output(trace.write_csv(out / "epoch_labels.csv"))
    manifest.add_output(write_predictions(predict(adapted, target), out / "predictions.csv"))
    manifest.finish()
    manifest.write(out)

    if record.epochs:
        last = record.epochs[-1]
        print(f"Adapted {cfg.epochs} epochs: L_IM {last.l_im:.4f}, L_SC {last.l_sc:.4f}")
    print(f"Outputs: {out}")
    return EXIT_OK


def _score_curve(curve_dir: Path, labels: np.ndarray, k: int, skip_n: int) -> dict:
    """Per-epoch Macro/Micro-F1 of an adapt run's epoch_labels.csv, written to curve_eval.csv."""
    epochs, rows = read_epoch_predictions(curve_dir / "epoch_labels.csv")
    if rows.shape[1] != len(labels):
        raise GraphDataError(f"epoch predictions cover {rows.shape[1]} nodes, labels {len(labels)}")
    if rows.size and (rows.min() < 0 or rows.max() >= k):
        raise GraphDataError(f"epoch predictions must lie in [0, {k})")

    macro = [macro_f1(row, labels, k) for row in rows]
    micro = [micro_f1(row, labels, k) for row in rows]
    path = curve_dir / "curve_eval.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "macro_f1", "micro_f1"])
        for epoch, ma, mi in zip(epochs, macro, micro):
            writer.writerow([epoch, repr(ma), repr(mi)])

    summary = {"epochs": len(epochs), "final_macro_f1": macro[-1], "final_micro_f1": micro[-1], "path": str(path)}
    if len(macro) > skip_n + 1:
        summary["stability"] = stability_stats(macro, skip_n=skip_n).to_dict()
    else:
        logger.info(f"{len(macro)} epochs is too short for stability after skipping {skip_n}")
    return summary


def cmd_eval(args: argparse.Namespace) -> int:
    pred_labels, pred = read_predictions(args.predictions)

    k = args.n_classes
    if args.labels:
        labels = read_labels(Path(args.labels))
    elif args.target:
        graph = load_graph(args.target)
        if graph.labels is None:
            raise GraphDataError(f"{args.target}: manifest has no labels")
        labels = graph.labels
        k = k or graph.n_classes
    else:
        raise ConfigError("eval needs --labels or --target")

    if k is None:
        k = pred.n_classes if pred is not None else int(max(pred_labels.max(), labels.max())) + 1
    if len(pred_labels) != len(labels):
        raise GraphDataError(f"{len(pred_labels)} predictions vs {len(labels)} labels")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise GraphDataError(f"labels must lie in [0, {k})")
    if pred_labels.size and pred_labels.max() >= k:
        raise GraphDataError(f"predicted labels must lie in [0, {k})")

    report = classification_report(pred_labels, labels, k).to_dict()
    if pred is not None and k == 2 and 0 < labels.sum() < len(labels):
        report["auc"] = auc_binary(pred.probs[:, 1], labels)
    if args.curve:
        report["curve"] = _score_curve(Path(args.curve), labels, k, args.skip_n)
    _write_json(report, args.output)
    return EXIT_OK


def cmd_verify_lemmas(args: argparse.Namespace) -> int:
    try:
        setup = LemmaTwoSetup(r_p=args.rp, r_n=args.rn, n_pos=args.n_pos, n_neg=args.n_neg, seed=args.seed)
        lemma1 = verify_lemma1(k=args.k, n_nodes=args.nodes, steps=args.steps, lr=args.lr, seed=args.seed)
    except ValueError as e:
        raise ConfigError(str(e))
    lemma2 = verify_lemma2(setup, steps=args.steps, lr=args.lr)
    _write_json({"lemma1": lemma1.to_dict(), "lemma2": lemma2.to_dict()}, args.output)
    return EXIT_OK


def _benchmark_overrides(cfg, args: argparse.Namespace):
    changes = {}
    if args.seeds:
        changes["seeds"] = tuple(args.seeds)
    if args.archs:
        changes["archs"] = args.archs
    if args.variants:
        changes["variants"] = args.variants
    if args.epochs is not None:
        changes["soga"] = dataclasses.replace(cfg.soga, epochs=args.epochs)
    try:
        return dataclasses.replace(cfg, **changes) if changes else cfg
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e))


def cmd_run_benchmark(args: argparse.Namespace) -> int:
    cfg = _benchmark_overrides(load_benchmark_config(args.config), args)
    out = Path(args.output) if args.output else Path(get_output_dir()) / cfg.name
    manifest = _new_manifest(args)
    manifest.add_input(args.config)

    runner = BenchmarkRunner(
        cfg, out,
        jobs=_jobs(args),
        use_db=not args.no_db,
        progress=_progress(args),
        manifest=manifest,
    )
    stats = runner.run()
    print("\n" + stats.summary())
    return EXIT_OK if not stats.failed else EXIT_FAILURE


def cmd_sweep_lambdas(args: argparse.Namespace) -> int:
    cfg = load_sweep_config(args.config)
    if args.epochs is not None:
        try:
            cfg = dataclasses.replace(cfg, soga=dataclasses.replace(cfg.soga, epochs=args.epochs))
        except ValueError as e:
            raise e if isinstance(e, ConfigError) else ConfigError(str(e))
    out = Path(args.output) if args.output else Path(get_output_dir()) / cfg.name
    manifest = _new_manifest(args)
    manifest.add_input(args.config)

    stats = run_sweep(
        cfg, out,
        jobs=_jobs(args),
        use_db=not args.no_db,
        progress=_progress(args),
        manifest=manifest,
    )
    print("\n" + stats.summary())
    return EXIT_OK


def replay_argv(manifest: RunManifest, output: str | None = None) -> list[str]:
    """The recorded argv, with --output redirected when output is given."""
    argv = list(manifest.argv)
    if output is None:
        return argv
    for flag in ("-o", "--out", "--output"):
        if flag in argv:
            i = argv.index(flag)
            argv[i + 1] = output
            return argv
    for i, token in enumerate(argv):
        for flag in ("--out=", "--output="):
            if token.startswith(flag):
                argv[i] = f"{flag}{output}"
                return argv
    return argv + ["--output", output]


def cmd_replay(args: argparse.Namespace) -> int:
    manifest = RunManifest.load(args.manifest)
    if manifest.subcommand == "replay" or not manifest.argv:
        raise ConfigError(f"{args.manifest}: manifest has no replayable command")
    changed = manifest.changed_inputs()
    for path in changed:
        logger.warning(f"Input changed since the recorded run: {path}")
    if changed and args.strict:
        raise GraphDataError(f"{len(changed)} input(s) changed since the recorded run")
    argv = replay_argv(manifest, args.output)
    logger.info(f"Replaying: {' '.join(argv)}")
    return main(argv)


# ────────────────────────────────────────────────────────────────────────────────
# Argument parsing
# ────────────────────────────────────────────────────────────────────────────────

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true", help="Debug logging and progress bars")
    p.add_argument("--log-file", help="Write logs to file")


def _add_pair_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("structural pairs")
    g.add_argument("--kappa", type=int, help="Number of structural pairs (default: number of edges)")
    g.add_argument("--max-hop", type=int, help="Ring depth (default: 2)")
    g.add_argument("--bin-base", type=float, help="Log-degree binning base (default: 2)")
    g.add_argument("--no-bins", action="store_true", help="Disable degree binning")
    g.add_argument("--exclude-edges", action="store_true", default=None, help="Drop structural pairs that are edges")
    g.add_argument("--candidate-limit", type=int, help="Compare each node with at most this many nodes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Source-free unsupervised graph domain adaptation (SOGA).",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Environment:
  SOGA_JOBS          default for --jobs
  SOGA_OUTPUT_DIR    default output root (runs)
  SOGA_DATABASE_URL  run ledger (sqlite:///soga_runs.db)
  SOGA_PROGRESS      0 disables progress bars

Examples:
  python run_soga.py gen-data --density-ratio 0.25 --feature-shift 1 -o data/sparse
  python run_soga.py verify-lemmas --rp 0.7 --rn 0.7
  python run_soga.py run-benchmark configs/benchmark.json --jobs 4 --no-db
  python run_soga.py replay runs/benchmark/run_manifest.json --output runs/replayed
        """
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Generate a synthetic source/target pair")
    p.add_argument("-o", "--output", required=True, help="Output directory (source/ and target/ inside)")
    p.add_argument("--config", help="Experiment JSON; its 'datagen' section is the base")
    p.add_argument("--n-nodes", dest="n_nodes", type=int)
    p.add_argument("--n-classes", dest="n_classes", type=int)
    p.add_argument("--feature-dim", dest="feature_dim", type=int)
    p.add_argument("--p-in", dest="p_in", type=float)
    p.add_argument("--p-out", dest="p_out", type=float)
    p.add_argument("--density-ratio", dest="density_ratio", type=float)
    p.add_argument("--feature-shift", dest="feature_shift", type=float)
    p.add_argument("--feature-noise", dest="feature_noise", type=float)
    p.add_argument("--class-separation", dest="class_separation", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--target-unlabeled", action="store_true", help="Write the target without labels")
    _add_common(p)
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train-source", help="Train a source model")
    p.add_argument("source", help="Labeled source dataset manifest")
    p.add_argument("-o", "--output", required=True, help="Output directory (source.ckpt)")
    p.add_argument("--config", help="Experiment JSON; its 'source' section is the base")
    p.add_argument("--arch", help="GCN, GraphSAGE or GAT")
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--hidden", dest="hidden_dim", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--split-ratio", type=float, default=0.8, help="Train fraction (default: 0.8)")
    _add_common(p)
    p.set_defaults(handler=cmd_train_source)

    p = sub.add_parser("mine-pairs", help="Mine structural pairs of a target graph")
    p.add_argument("target", help="Target dataset manifest (labels are ignored)")
    p.add_argument("-o", "--output", required=True, help="Output directory (pairs.tsv)")
    p.add_argument("--config", help="Experiment JSON; its 'pairs' section is the base")
    _add_pair_flags(p)
    _add_common(p)
    p.set_defaults(handler=cmd_mine_pairs)

    p = sub.add_parser("adapt", help="Adapt a source checkpoint to a target graph")
    p.add_argument("--ckpt", required=True, help="Source checkpoint")
    p.add_argument("--target-manifest", required=True, help="Target dataset manifest (labels are dropped on load)")
    p.add_argument("-o", "--out", "--output", dest="output", required=True, help="Output directory")
    p.add_argument("--config", help="Experiment JSON; its 'soga' and 'pairs' sections are the base")
    p.add_argument("--pairs", help="Structural pair TSV from mine-pairs (mined on the fly otherwise)")
    p.add_argument("--variant", choices=[v.value for v in SogaVariant], default="full")
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--neg", dest="negatives", type=int, help="Negative samples per positive pair (default: 5)")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--marginal", choices=[m.value for m in MarginalMode],
                   help="Marginal term: entropy (default) or kl against --prior")
    p.add_argument("--prior", help="File of k label prior probabilities; implies --marginal kl")
    p.add_argument("--raw-sums", action="store_true", help="Sum pair terms instead of averaging")
    p.add_argument("--fixed-negatives", action="store_true", help="Draw negatives once and reuse them")
    _add_pair_flags(p)
    _add_common(p)
    p.set_defaults(handler=cmd_adapt)

    p = sub.add_parser("eval", help="Score predictions against labels")
    p.add_argument("predictions", help="predictions.csv (probabilities) or one label per line")
    p.add_argument("--labels", help="One integer label per line")
    p.add_argument("--target", help="Labeled dataset manifest")
    p.add_argument("--n-classes", type=int)
    p.add_argument("--curve", help="adapt output directory; scores its epoch_labels.csv into curve_eval.csv")
    p.add_argument("--skip-n", type=int, default=DEFAULT_SKIP,
                   help=f"Warm-up epochs left out of the stability stats (default: {DEFAULT_SKIP})")
    p.add_argument("-o", "--output", help="Also write the JSON report here")
    _add_common(p)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("verify-lemmas", help="Check the entropy-minimization lemmas numerically")
    p.add_argument("--k", type=int, default=6, help="Classes for the convergence check (default: 6)")
    p.add_argument("--nodes", type=int, default=200, help="Nodes for the convergence check (default: 200)")
    p.add_argument("--steps", type=int, default=3000, help="Gradient steps (default: 3000)")
    p.add_argument("--lr", type=float, default=0.5, help="Step size (default: 0.5)")
    p.add_argument("--rp", type=float, default=0.7, help="Positive-class accuracy (default: 0.7)")
    p.add_argument("--rn", type=float, default=0.7, help="Negative-class accuracy (default: 0.7)")
    p.add_argument("--n-pos", type=int, default=100)
    p.add_argument("--n-neg", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="Also write the JSON report here")
    _add_common(p)
    p.set_defaults(handler=cmd_verify_lemmas)

    for name, handler, help_text in (
        ("run-benchmark", cmd_run_benchmark, "Benchmark archs x seeds x variants"),
        ("sweep-lambdas", cmd_sweep_lambdas, "Lambda sensitivity curves"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="Experiment JSON")
        p.add_argument("-o", "--output", help="Output directory (default: $SOGA_OUTPUT_DIR/<name>)")
        p.add_argument("--jobs", type=int, help="Concurrent cells (default: $SOGA_JOBS or 1)")
        p.add_argument("--no-db", action="store_true", help="Skip the run ledger")
        p.add_argument("--epochs", type=int, help="Override soga.epochs")
        if name == "run-benchmark":
            p.add_argument("--seeds", type=_int_list, help="Override seeds, e.g. 1,3,5")
            p.add_argument("--archs", type=_str_list, help="Override archs, e.g. GCN,GAT")
            p.add_argument("--variants", type=_str_list, help="Override variants, e.g. full,im,sc")
        _add_common(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("replay", help="Re-execute a run from its manifest")
    p.add_argument("manifest", help="run_manifest.json or the directory holding it")
    p.add_argument("-o", "--output", help="Write to this directory instead of the recorded one")
    p.add_argument("--strict", action="store_true", help="Fail when recorded inputs have changed")
    _add_common(p)
    p.set_defaults(handler=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point. Returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    args.argv = argv

    setup_logging(args.verbose, args.log_file)

    try:
        return args.handler(args)
    except KeyboardInterrupt:
        print("\n\nInterrupted by user.")
        return EXIT_INTERRUPTED
    except ConfigError as e:
        print(f"\nCONFIG ERROR: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphDataError, CheckpointError, FileNotFoundError) as e:
        print(f"\nDATA ERROR: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericFailure as e:
        print(f"\nNUMERIC FAILURE: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as e:
        print(f"\nERROR: {e}", file=sys.stderr)
        if args.verbose:
            import traceback
            traceback.print_exc()
        return EXIT_FAILURE
    finally:
        dispose_engine()


if __name__ == "__main__":
    sys.exit(main())
