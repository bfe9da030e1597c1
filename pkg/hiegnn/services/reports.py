"""
Text and JSON renderings of run reports.
"""

from pathlib import Path
from typing import Dict

import numpy as np
from pydantic import BaseModel

from hiegnn.schemas.reports import AblationReport, EvaluationResult, SeedSummary, TrainReport


def render_train_report(report: TrainReport) -> str:
    """Key-value header followed by the per-epoch table."""
    lines = [
        f"seed: {report.seed}",
        f"best_epoch: {report.best_epoch}",
        f"best_validation_accuracy: {report.best_validation_accuracy:.4f}",
        f"test_accuracy: {'-' if report.test_accuracy is None else f'{report.test_accuracy:.4f}'}",
        f"train_accuracy: {'-' if report.train_accuracy is None else f'{report.train_accuracy:.4f}'}",
        f"stopped_early: {report.stopped_early}",
        f"diverged: {report.diverged}",
        f"wall_clock_seconds: {report.wall_clock_seconds:.1f}",
        f"checkpoint: {report.checkpoint_path or '-'}",
    ]
    lines += [f"model.{key}: {value}" for key, value in report.model.model_dump().items()]
    lines += [f"train.{key}: {value}" for key, value in report.train.model_dump().items()]
    lines.append("")
    lines.append(f"{'epoch':>5}  {'train_loss':>12}  {'val_acc':>8}  {'seconds':>8}")
    for e in report.epochs:
        lines.append(f"{e.epoch:>5}  {e.train_loss:>12.6f}  {e.validation_accuracy:>8.4f}  {e.seconds:>8.1f}")
    return "\n".join(lines) + "\n"


def render_ablation_table(report: AblationReport) -> str:
    """Aligned table, one row per level setting, best row marked with '*'."""
    width = max(len(row.description) for row in report.rows)
    lines = [f"{'λ':<{width}}  {report.corpus:>8}", "-" * (width + 10)]
    for row in report.rows:
        marker = " *" if row.is_best else ""
        lines.append(f"{row.description:<{width}}  {row.test_accuracy:>8.4f}{marker}")
    return "\n".join(lines) + "\n"


def render_evaluation(result: EvaluationResult) -> str:
    lines = [f"accuracy: {result.accuracy:.4f}", f"samples: {result.total}"]
    for counts in result.per_class:
        lines.append(f"class {counts.label}: {counts.correct}/{counts.support} correct")
    return "\n".join(lines) + "\n"


def summarize_seeds(accuracies: Dict[int, float]) -> SeedSummary:
    values = np.array(list(accuracies.values()), dtype=np.float64)
    return SeedSummary(accuracies=accuracies, mean=float(values.mean()),
                       std=float(values.std(ddof=1)) if values.size > 1 else 0.0)


def render_seed_summary(summary: SeedSummary) -> str:
    lines = [f"seed {seed}: {acc:.4f}" for seed, acc in summary.accuracies.items()]
    lines.append(f"mean: {summary.mean:.4f}")
    lines.append(f"std: {summary.std:.4f}")
    return "\n".join(lines) + "\n"


def write_report(directory: Path, stem: str, model: BaseModel, text: str) -> Path:
    """Write `<stem>.txt` (human) and `<stem>.json` (machine) side by side."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{stem}.txt").write_text(text, encoding="utf-8")
    path = directory / f"{stem}.json"
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    return path
