"""
Command-line entry point: `python -m hiegnn <command>`.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 training failure.
"""

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from hiegnn import __version__
from hiegnn.core.config import get_preset, settings
from hiegnn.core.exceptions import (
    EXIT_OK,
    EXIT_TRAINING,
    EXIT_USAGE,
    CheckpointError,
    ConfigError,
    DataError,
    HieGnnError,
    TrainingDivergedError,
)
from hiegnn.schemas.config import RunManifest
from hiegnn.schemas.corpus import Corpus
from hiegnn.services.ablation import run_ablation_grid, select_rows
from hiegnn.services.checkpoint import Checkpoint, load_checkpoint
from hiegnn.services.corpus_cache import CACHE_FILENAME, load_corpus, save_corpus
from hiegnn.services.diagnostics import check_model_gradients
from hiegnn.services.graph_builder import build_sample_graphs, dump_graphs
from hiegnn.services.hiegnn_model import HieGnnModel
from hiegnn.services.inference import predict_text
from hiegnn.services.reports import (
    render_ablation_table,
    render_evaluation,
    render_seed_summary,
    render_train_report,
    summarize_seeds,
    write_report,
)
from hiegnn.services.run_config import ResolvedRun, read_config_file, resolve_run
from hiegnn.services.run_registry import record_run
from hiegnn.services.text_pipeline import ingest_corpus, stats_report
from hiegnn.services.trainer import evaluate_detailed, train

logger = logging.getLogger("hiegnn.cli")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the configuration exit code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ============================
# Shared helpers
# ============================

def _run_id() -> str:
    return datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _progress(args: argparse.Namespace) -> bool:
    return not getattr(args, "quiet", False) and sys.stderr.isatty()


def _parse_seeds(text: Optional[str]) -> List[int]:
    if not text:
        return []
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be comma-separated integers, got {text!r}") from exc


def _flag_values(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted-key overrides from the flags that were actually given."""
    mapping = {
        "dataset": "data.dataset",
        "split_mode": "data.split_mode",
        "chunk_size": "data.chunk_size",
        "embedding_dim": "model.embedding_dim",
        "dropout": "model.dropout",
        "lambda_policy": "model.lambda_policy",
        "batch_size": "train.batch_size",
        "lr": "train.learning_rate",
        "optimizer": "train.optimizer",
        "epochs": "train.max_epochs",
        "patience": "train.patience",
        "lambdas": "train.lambda",
        "levels": "train.levels",
        "seed": "seed",
    }
    return {key: getattr(args, attr) for attr, key in mapping.items()
            if getattr(args, attr, None) is not None}


def _resolve(args: argparse.Namespace) -> ResolvedRun:
    file_values = read_config_file(Path(args.config)) if getattr(args, "config", None) else {}
    return resolve_run(getattr(args, "dataset", None), file_values, _flag_values(args))


def _load_corpus(args: argparse.Namespace, run: Optional[ResolvedRun] = None) -> Corpus:
    """Corpus from --cache, from --meta/--text, or from the dataset's default cache."""
    if getattr(args, "cache", None):
        return load_corpus(Path(args.cache))
    if getattr(args, "meta", None) or getattr(args, "text", None):
        if not (args.meta and args.text):
            raise ConfigError("--meta and --text must be given together")
        split_mode = run.data.split_mode if run else None
        chunk_size = run.data.chunk_size if run else 12
        dataset = run.data.dataset if run else getattr(args, "dataset", None)
        return ingest_corpus(Path(args.meta), Path(args.text), mode=split_mode,
                             chunk_size=chunk_size, dataset=dataset)
    dataset = run.data.dataset if run else getattr(args, "dataset", None)
    if dataset:
        return load_corpus(Path(settings.OUTPUT_DIR) / dataset / CACHE_FILENAME)
    raise ConfigError("no corpus given; use --cache, --meta/--text or --dataset")


def _output_dir(args: argparse.Namespace, corpus: Corpus, command: str) -> Path:
    if getattr(args, "out", None):
        directory = Path(args.out)
    else:
        directory = Path(settings.OUTPUT_DIR) / (corpus.name or "corpus") / f"{command}-{_run_id()}"
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_manifest(directory: Path, command: str, corpus_name: Optional[str],
                    paths: Dict[str, str], **fields: Any) -> RunManifest:
    manifest = RunManifest(
        command=command,
        corpus=corpus_name or "corpus",
        timestamp=datetime.now(timezone.utc).isoformat(),
        paths=paths,
        **fields,
    )
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "manifest.json"
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Wrote run manifest {path}")
    return manifest


def _write_run_manifest(directory: Path, command: str, corpus: Corpus, run: ResolvedRun,
                        seeds: Sequence[int]) -> RunManifest:
    return _write_manifest(directory, command, corpus.name, {"output": str(directory)},
                           seed=run.train.seed, model=run.model_config_for(corpus),
                           train=run.train, sources=run.sources, seeds=list(seeds))


# ============================
# Commands
# ============================

def cmd_ingest(args: argparse.Namespace) -> int:
    preset = get_preset(args.dataset)
    name = preset.name if preset else args.dataset
    out = Path(args.out) if args.out else Path(settings.OUTPUT_DIR) / (name or "corpus")
    _write_manifest(out, "ingest", name,
                    {"meta": str(args.meta), "text": str(args.text),
                     "cache": str(out / CACHE_FILENAME)})
    corpus = ingest_corpus(Path(args.meta), Path(args.text), mode=args.split_mode,
                           chunk_size=args.chunk_size, dataset=args.dataset)
    save_corpus(out / CACHE_FILENAME, corpus)
    if args.json:
        _emit(json.dumps({"stats": corpus.stats.model_dump(),
                          "checks": [c.model_dump() for c in corpus.checks]}, indent=2))
    else:
        _emit(stats_report(corpus.stats, corpus.checks))
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(Path(args.cache))
    if args.json:
        _emit(corpus.stats.model_dump_json(indent=2))
    else:
        _emit(stats_report(corpus.stats, corpus.checks))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    run = _resolve(args)
    corpus = _load_corpus(args, run)
    seeds = _parse_seeds(args.seeds) or [run.train.seed]
    out = _output_dir(args, corpus, "train")
    _write_run_manifest(out, "train", corpus, run, seeds)

    run_id = out.name
    accuracies = {}
    reports = []
    for seed in seeds:
        model_config = run.model_config_for(corpus).model_copy(update={"seed": seed})
        train_config = run.train.model_copy(update={"seed": seed})
        stem = "train" if len(seeds) == 1 else f"train-seed{seed}"
        model = HieGnnModel(model_config)
        try:
            report = train(model, corpus, train_config, progress=_progress(args),
                           checkpoint_path=out / f"{stem}.npz")
        except TrainingDivergedError as exc:
            if exc.report is not None:
                write_report(out, f"{stem}-diverged", exc.report, render_train_report(exc.report))
            raise
        report_path = write_report(out, stem, report, render_train_report(report))
        record_run(settings.database_url, run_id=run_id, command="train",
                   corpus=corpus.name or "corpus", report=report, report_path=str(report_path))
        accuracies[seed] = report.test_accuracy or 0.0
        reports.append(report)

    if len(seeds) > 1:
        summary = summarize_seeds(accuracies)
        write_report(out, "seeds", summary, render_seed_summary(summary))
        _emit(summary.model_dump_json(indent=2) if args.json else render_seed_summary(summary))
    else:
        report = reports[0]
        _emit(report.model_dump_json(indent=2) if args.json else render_train_report(report))
    return EXIT_OK


def _eval_corpus(args: argparse.Namespace, run: ResolvedRun, checkpoint: Checkpoint) -> Corpus:
    """Evaluation corpus encoded with the checkpoint's vocabulary and label order."""
    if getattr(args, "meta", None) or getattr(args, "text", None):
        if not (args.meta and args.text):
            raise ConfigError("--meta and --text must be given together")
        return ingest_corpus(Path(args.meta), Path(args.text), mode=run.data.split_mode,
                             chunk_size=run.data.chunk_size, dataset=run.data.dataset,
                             vocabulary=checkpoint.vocabulary, labels=checkpoint.labels)
    corpus = _load_corpus(args, run)
    if corpus.num_classes != checkpoint.model.num_classes:
        raise CheckpointError(f"class count mismatch: checkpoint has "
                              f"C={checkpoint.model.num_classes}, corpus has C={corpus.num_classes}")
    if corpus.vocabulary.tokens != checkpoint.vocabulary.tokens:
        raise DataError("corpus vocabulary differs from the checkpoint vocabulary; "
                        "evaluate with --meta/--text to re-encode the documents")
    return corpus


def cmd_eval(args: argparse.Namespace) -> int:
    run = resolve_run(args.dataset)
    checkpoint = load_checkpoint(Path(args.checkpoint))
    name = run.data.dataset
    if name is None and args.cache:
        name = Path(args.cache).resolve().parent.name
    elif name is None and args.text:
        name = Path(args.text).stem
    out = (Path(args.out) if args.out
           else Path(settings.OUTPUT_DIR) / (name or "corpus") / f"eval-{_run_id()}")
    paths = {"checkpoint": str(args.checkpoint), "output": str(out)}
    for key in ("cache", "meta", "text"):
        if getattr(args, key, None):
            paths[key] = str(getattr(args, key))
    _write_manifest(out, "eval", name, paths, seed=checkpoint.model.config.seed,
                    model=checkpoint.model.config, split=args.split)

    corpus = _eval_corpus(args, run, checkpoint)
    records = corpus.split(args.split)
    if not records:
        raise DataError(f"corpus has no {args.split} documents")
    result = evaluate_detailed(checkpoint.model, records, checkpoint.labels)
    write_report(out, "eval", result, render_evaluation(result))
    _emit(result.model_dump_json(indent=2) if args.json else render_evaluation(result))
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    rows = [name.strip() for name in args.rows.split(",")] if args.rows else None
    select_rows(rows)
    run = _resolve(args)
    corpus = _load_corpus(args, run)
    out = _output_dir(args, corpus, "ablate")
    _write_run_manifest(out, "ablate", corpus, run, [run.train.seed])

    def on_row(setting, report):
        report_path = write_report(out, f"ablate-{setting.name}", report, render_train_report(report))
        record_run(settings.database_url, run_id=out.name, command="ablate",
                   corpus=corpus.name or "corpus", report=report, setting=setting.name,
                   report_path=str(report_path))

    report = run_ablation_grid(corpus, run.model_config_for(corpus), run.train, rows,
                               progress=_progress(args), on_row=on_row)
    text = render_ablation_table(report)
    write_report(out, "ablation", report, text)
    _emit(report.model_dump_json(indent=2) if args.json else text)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    result = check_model_gradients(seed=args.seed)
    if args.json:
        _emit(json.dumps({"max_relative_error": result.max_relative_error,
                          "per_parameter": result.per_tensor,
                          "passed": result.passed}, indent=2))
    else:
        lines = [f"{name}: {error:.3e}" for name, error in result.per_tensor.items()]
        lines.append(f"max_relative_error: {result.max_relative_error:.3e}")
        lines.append("status: " + ("ok" if result.passed else "FAILED"))
        _emit("\n".join(lines))
    return EXIT_OK if result.passed else EXIT_TRAINING


def cmd_predict(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(Path(args.checkpoint))
    text = args.input if args.input is not None else sys.stdin.read()
    prediction = predict_text(checkpoint.model, checkpoint.vocabulary, checkpoint.labels, text,
                              mode=args.split_mode, chunk_size=args.chunk_size)
    if args.json:
        _emit(prediction.model_dump_json(indent=2))
    else:
        _emit(f"label: {prediction.label}\n"
              f"probability: {prediction.probabilities[prediction.label]:.4f}\n"
              f"sentences: {prediction.sentence_count}\n"
              f"tokens: {prediction.token_count} ({prediction.unknown_tokens} unknown)")
    return EXIT_OK


def cmd_dump_graphs(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    records = [r for r in corpus.records if args.doc_id is None or r.doc_id == args.doc_id]
    if not records:
        raise DataError(f"document {args.doc_id!r} not found")
    for record in records[:args.limit]:
        _emit(f"# {record.doc_id}")
        _emit(dump_graphs(build_sample_graphs(record, args.window)))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    if args.checkpoint:
        settings.CHECKPOINT_PATH = args.checkpoint
    uvicorn.run("hiegnn.main:app", host=args.host or settings.API_HOST,
                port=args.port or settings.API_PORT, log_level=settings.log_level.lower())
    return EXIT_OK


# ============================
# Parser
# ============================

def _add_corpus_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cache", help=f"ingested corpus ({CACHE_FILENAME})")
    parser.add_argument("--meta", help="metadata file: doc_id<TAB>split<TAB>label per line")
    parser.add_argument("--text", help="corpus file: one document per line")
    parser.add_argument("--dataset", help="benchmark preset: 20ng, r8, r52, ohsumed, mr")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    _add_corpus_args(parser)
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--lr", type=float, help="learning rate")
    parser.add_argument("--epochs", type=int, help="maximum epochs")
    parser.add_argument("--patience", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--optimizer", choices=["adam", "sgd"])
    parser.add_argument("--embedding-dim", type=int)
    parser.add_argument("--dropout", type=float)
    parser.add_argument("--lambda-policy", choices=["per_sample", "batch_mean"])
    parser.add_argument("--split-mode", choices=["punct", "chunk"])
    parser.add_argument("--chunk-size", type=int)
    parser.add_argument("--quiet", action="store_true", help="no progress bars")
    parser.add_argument("--json", action="store_true", help="print JSON instead of text")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hiegnn", description="Hierarchical graph attention text classification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ingest = sub.add_parser("ingest", help="tokenize and cache a corpus")
    ingest.add_argument("meta")
    ingest.add_argument("text")
    ingest.add_argument("--out", help="cache directory")
    ingest.add_argument("--dataset")
    ingest.add_argument("--split-mode", choices=["punct", "chunk"])
    ingest.add_argument("--chunk-size", type=int, default=12)
    ingest.add_argument("--json", action="store_true")
    ingest.set_defaults(func=cmd_ingest)

    stats = sub.add_parser("stats", help="print statistics of a cached corpus")
    stats.add_argument("cache")
    stats.add_argument("--json", action="store_true")
    stats.set_defaults(func=cmd_stats)

    train_cmd = sub.add_parser("train", help="train and evaluate a model")
    _add_run_args(train_cmd)
    train_cmd.add_argument("--lambda", dest="lambdas", help="fixed level weights d,s,w")
    train_cmd.add_argument("--levels", help="active levels, e.g. s,w")
    train_cmd.add_argument("--seeds", help="comma-separated seeds; one run per seed")
    train_cmd.set_defaults(func=cmd_train)

    eval_cmd = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_corpus_args(eval_cmd)
    eval_cmd.add_argument("--checkpoint", required=True)
    eval_cmd.add_argument("--split", choices=["train", "test"], default="test")
    eval_cmd.add_argument("--out", help="output directory")
    eval_cmd.add_argument("--json", action="store_true")
    eval_cmd.set_defaults(func=cmd_eval)

    ablate = sub.add_parser("ablate", help="run the level ablation grid")
    _add_run_args(ablate)
    ablate.add_argument("--rows", help="comma-separated rows, e.g. d_only,hiegat")
    ablate.set_defaults(func=cmd_ablate)

    gradcheck = sub.add_parser("gradcheck", help="finite-difference check of the model gradients")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--json", action="store_true")
    gradcheck.set_defaults(func=cmd_gradcheck)

    predict = sub.add_parser("predict", help="classify text with a checkpoint")
    predict.add_argument("--checkpoint", required=True)
    predict.add_argument("--input", help="text to classify; stdin when omitted")
    predict.add_argument("--split-mode", choices=["punct", "chunk"], default="punct")
    predict.add_argument("--chunk-size", type=int, default=12)
    predict.add_argument("--json", action="store_true")
    predict.set_defaults(func=cmd_predict)

    dump = sub.add_parser("dump-graphs", help="print the graphs of corpus documents")
    _add_corpus_args(dump)
    dump.add_argument("--doc-id")
    dump.add_argument("--window", type=int, default=2)
    dump.add_argument("--limit", type=int, default=1)
    dump.set_defaults(func=cmd_dump_graphs)

    serve = sub.add_parser("serve", help="start the inference API")
    serve.add_argument("--checkpoint")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        return args.func(args)
    except HieGnnError as exc:
        logger.debug("Command failed", exc_info=True)
        sys.stderr.write(f"hiegnn {args.command}: {exc}\n")
        return exc.exit_code
