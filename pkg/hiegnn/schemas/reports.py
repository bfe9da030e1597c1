"""
Training, evaluation and ablation report schemas.
"""

from datetime import datetime
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from hiegnn.schemas.config import HieGnnConfig, TrainConfig


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    validation_accuracy: float
    seconds: float


class ClassCounts(BaseModel):
    label: str
    support: int
    correct: int


class EvaluationResult(BaseModel):
    accuracy: float = Field(ge=0.0, le=1.0)
    total: int
    per_class: List[ClassCounts]
    confusion: List[List[int]]


class TrainReport(BaseModel):
    """Everything needed to audit and replay one training run."""

    epochs: List[EpochRecord] = []
    best_epoch: int = 0
    best_validation_accuracy: float = 0.0
    test_accuracy: Optional[float] = Field(None, ge=0.0, le=1.0)
    train_accuracy: Optional[float] = Field(None, ge=0.0, le=1.0)
    stopped_early: bool = False
    diverged: bool = False
    wall_clock_seconds: float = 0.0
    seed: int = 0
    model: HieGnnConfig
    train: TrainConfig
    checkpoint_path: Optional[str] = None

    @property
    def losses(self) -> List[float]:
        return [e.train_loss for e in self.epochs]


class AblationRow(BaseModel):
    name: str
    description: str
    levels: Tuple[str, ...]
    fixed: Optional[Tuple[float, float, float]] = None
    test_accuracy: float
    best_epoch: int
    is_best: bool = False


class AblationReport(BaseModel):
    corpus: str
    rows: List[AblationRow]
    seed: int


class SeedSummary(BaseModel):
    accuracies: Dict[int, float]
    mean: float
    std: float


class TrainingRunSchema(BaseModel):
    """One run-registry row."""
    model_config = ConfigDict(from_attributes=True)

    id: int
    run_id: str
    command: str
    corpus: str
    seed: int
    setting: str
    test_accuracy: Optional[float] = None
    best_epoch: Optional[int] = None
    epochs: Optional[int] = None
    report_path: Optional[str] = None
    checkpoint_path: Optional[str] = None
    created_at: Optional[datetime] = None
