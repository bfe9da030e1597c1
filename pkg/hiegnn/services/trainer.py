"""
Mini-batch training, evaluation and early stopping.
"""

import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix
from sklearn.model_selection import train_test_split
from tqdm import tqdm

from hiegnn.core.exceptions import InvalidInputError, TrainingDivergedError, TrainingError
from hiegnn.nn import tensor as T
from hiegnn.nn.optim import clip_grad_norm, make_optimizer
from hiegnn.nn.tensor import Tensor, backward
from hiegnn.schemas.config import TrainConfig
from hiegnn.schemas.corpus import Corpus, DocumentRecord
from hiegnn.schemas.reports import ClassCounts, EpochRecord, EvaluationResult, TrainReport
from hiegnn.services.checkpoint import save_checkpoint
from hiegnn.services.graph_builder import SampleGraphs
from hiegnn.services.hiegnn_model import HieGnnModel

logger = logging.getLogger(__name__)

Samples = Union[Sequence[DocumentRecord], Sequence[SampleGraphs]]

EVAL_BATCH_SIZE = 256


def cross_entropy_loss(log_probs: Tensor, labels: Sequence[int]) -> Tensor:
    """
    Mean negative log-likelihood of the true labels.

    `log_probs` is already in log space (fused log-softmax outputs), so no
    further log is taken.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if log_probs.ndim == 1:
        log_probs = T.reshape(log_probs, (1, log_probs.shape[0]))
    batch, classes = log_probs.shape
    if labels.shape != (batch,):
        raise InvalidInputError(f"{labels.shape[0] if labels.ndim else 0} labels for a batch of {batch}")
    if np.any(labels < 0) or np.any(labels >= classes):
        raise InvalidInputError(f"labels must lie in [0, {classes}), got {labels.tolist()}")
    one_hot = np.zeros((batch, classes))
    one_hot[np.arange(batch), labels] = 1.0
    return T.mul(T.sum(T.mul(log_probs, one_hot)), -1.0 / batch)


def _as_graphs(model: HieGnnModel, samples: Samples) -> List[SampleGraphs]:
    samples = list(samples)
    if samples and isinstance(samples[0], DocumentRecord):
        return model.build_graphs(samples)
    return samples


def _predict_batches(model: HieGnnModel, graphs: List[SampleGraphs], batch_size: int,
                     fixed=None, active_levels=None) -> np.ndarray:
    predictions = []
    for start in range(0, len(graphs), batch_size):
        batch = graphs[start:start + batch_size]
        lambdas = model.lambdas_for(batch, fixed, active_levels)
        predictions.append(model.predict(batch, lambdas))
    return np.concatenate(predictions) if predictions else np.zeros(0, dtype=np.int64)


def evaluate(model: HieGnnModel, records: Samples, *, batch_size: int = EVAL_BATCH_SIZE,
             fixed: Optional[Tuple[float, float, float]] = None,
             active_levels: Optional[Sequence[str]] = None) -> float:
    """Fraction of samples whose argmax prediction equals the label (dropout off)."""
    graphs = _as_graphs(model, records)
    if not graphs:
        return 0.0
    predictions = _predict_batches(model, graphs, batch_size, fixed, active_levels)
    return float(accuracy_score([g.label_id for g in graphs], predictions))


def evaluate_detailed(model: HieGnnModel, records: Samples, labels: Sequence[str], *,
                      batch_size: int = EVAL_BATCH_SIZE,
                      fixed: Optional[Tuple[float, float, float]] = None,
                      active_levels: Optional[Sequence[str]] = None) -> EvaluationResult:
    """Accuracy plus per-class support/correct counts and the confusion matrix."""
    graphs = _as_graphs(model, records)
    truth = np.array([g.label_id for g in graphs], dtype=np.int64)
    predictions = _predict_batches(model, graphs, batch_size, fixed, active_levels)
    matrix = confusion_matrix(truth, predictions, labels=list(range(len(labels)))) if graphs else \
        np.zeros((len(labels), len(labels)), dtype=np.int64)
    per_class = [
        ClassCounts(label=name, support=int(matrix[i].sum()), correct=int(matrix[i, i]))
        for i, name in enumerate(labels)
    ]
    accuracy = float(np.trace(matrix) / len(graphs)) if graphs else 0.0
    return EvaluationResult(accuracy=accuracy, total=len(graphs), per_class=per_class,
                            confusion=matrix.tolist())


def split_validation(labels: Sequence[int], fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stratified (fit, validation) index split of the training set.

    Falls back to an unstratified split when some class is too small to be
    represented on both sides.
    """
    indices = np.arange(len(labels))
    if len(indices) < 2:
        raise TrainingError("need at least two training samples to hold out a validation set")
    try:
        fit, val = train_test_split(indices, test_size=fraction, random_state=seed,
                                    shuffle=True, stratify=labels)
    except ValueError:
        logger.warning("Validation split is too small to stratify; using a random split")
        fit, val = train_test_split(indices, test_size=fraction, random_state=seed, shuffle=True)
    return np.sort(fit), np.sort(val)


class Trainer:
    """Runs the optimization loop for one model and one TrainConfig."""

    def __init__(self, model: HieGnnModel, config: TrainConfig, progress: bool = False):
        self.model = model
        self.config = config
        self.progress = progress
        self.rng = np.random.default_rng(config.seed)
        self.optimizer = make_optimizer(config.optimizer, model.registry, config.learning_rate)

    def _lambdas(self, batch: Sequence[SampleGraphs]) -> np.ndarray:
        return self.model.lambdas_for(batch, self.config.lambda_override, self.config.active_levels)

    def batch_loss(self, batch: Sequence[SampleGraphs], training: bool = True) -> Tensor:
        log_probs, _, _ = self.model.forward(batch, training=training, rng=self.rng,
                                             lambdas=self._lambdas(batch))
        return cross_entropy_loss(log_probs, [g.label_id for g in batch])

    def step(self, batch: Sequence[SampleGraphs]) -> float:
        """One forward/backward/update on a batch; returns the batch loss."""
        registry = self.model.registry
        loss = self.batch_loss(batch)
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingDivergedError(f"loss became {value}")
        registry.zero_grad()
        backward(loss)
        grads = registry.grads()
        clip_grad_norm(grads, self.config.grad_clip)
        self.optimizer.step(grads)
        registry.zero_grad()
        return value

    def accuracy(self, graphs: List[SampleGraphs]) -> float:
        if not graphs:
            return 0.0
        return evaluate(self.model, graphs, batch_size=max(self.config.batch_size, 1),
                        fixed=self.config.lambda_override, active_levels=self.config.active_levels)

    def fit(self, train_graphs: List[SampleGraphs], validation_graphs: List[SampleGraphs],
            test_graphs: Optional[List[SampleGraphs]] = None) -> TrainReport:
        cfg = self.config
        registry = self.model.registry
        report = TrainReport(model=self.model.config, train=cfg, seed=cfg.seed)
        started = time.perf_counter()

        best_state = registry.state_dict()
        best_accuracy = -1.0
        waiting = 0
        for epoch in range(1, cfg.max_epochs + 1):
            epoch_start = time.perf_counter()
            order = self.rng.permutation(len(train_graphs))
            total, seen = 0.0, 0
            batches = range(0, len(order), cfg.batch_size)
            for start in tqdm(batches, desc=f"epoch {epoch}", disable=not self.progress, leave=False):
                batch = [train_graphs[i] for i in order[start:start + cfg.batch_size]]
                try:
                    value = self.step(batch)
                except TrainingDivergedError as exc:
                    report.diverged = True
                    report.wall_clock_seconds = time.perf_counter() - started
                    logger.error(f"Training diverged in epoch {epoch}: {exc}")
                    raise TrainingDivergedError(f"epoch {epoch}: {exc}", report=report) from exc
                total += value * len(batch)
                seen += len(batch)

            validation_accuracy = self.accuracy(validation_graphs)
            record = EpochRecord(epoch=epoch, train_loss=total / max(seen, 1),
                                 validation_accuracy=validation_accuracy,
                                 seconds=time.perf_counter() - epoch_start)
            report.epochs.append(record)
            logger.info(f"Epoch {epoch}: loss {record.train_loss:.5f}, "
                        f"validation accuracy {validation_accuracy:.4f}, {record.seconds:.1f}s")

            if validation_accuracy > best_accuracy:
                best_accuracy = validation_accuracy
                best_state = registry.state_dict()
                report.best_epoch = epoch
                waiting = 0
            else:
                waiting += 1
                if waiting >= cfg.patience:
                    report.stopped_early = True
                    logger.info(f"Early stop after epoch {epoch}; best epoch {report.best_epoch}")
                    break

        registry.load_state_dict(best_state)
        report.best_validation_accuracy = max(best_accuracy, 0.0)
        report.train_accuracy = self.accuracy(train_graphs)
        if test_graphs is not None:
            report.test_accuracy = self.accuracy(test_graphs)
            logger.info(f"Test accuracy {report.test_accuracy:.4f} (best epoch {report.best_epoch})")
        report.wall_clock_seconds = time.perf_counter() - started
        return report


def train(model: HieGnnModel, corpus: Corpus, config: TrainConfig, *, progress: bool = False,
          checkpoint_path: Optional[Path] = None) -> TrainReport:
    """
    Train on the corpus train split with a held-out validation part, keep
    the best-validation parameters and score them on the test split.

    Raises:
        TrainingDivergedError: the loss became non-finite; `report` holds
            the epochs completed so far
    """
    train_records = corpus.split("train")
    test_records = corpus.split("test")
    if not train_records:
        raise TrainingError("corpus has no training documents")
    if corpus.num_classes != model.num_classes:
        raise TrainingError(f"corpus has C={corpus.num_classes}, model has C={model.num_classes}")

    graphs = model.build_graphs(train_records)
    fit_idx, val_idx = split_validation([r.label_id for r in train_records],
                                        config.validation_fraction, config.seed)
    logger.info(f"Training on {len(fit_idx)} samples, validating on {len(val_idx)}, "
                f"testing on {len(test_records)}")

    trainer = Trainer(model, config, progress=progress)
    report = trainer.fit([graphs[i] for i in fit_idx], [graphs[i] for i in val_idx],
                         model.build_graphs(test_records) if test_records else None)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, model, corpus.vocabulary, corpus.labels)
        report.checkpoint_path = str(checkpoint_path)
    return report
