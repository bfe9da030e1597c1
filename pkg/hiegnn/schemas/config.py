"""
Experiment configuration schemas.
"""

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

LambdaPolicy = Literal["per_sample", "batch_mean"]
ReadoutMode = Literal["mean", "max", "sum"]
SplitMode = Literal["punct", "chunk"]
LayerType = Literal["gat", "gcn"]


class LevelConfig(BaseModel):
    """Layer type, depth, heads and window for one level. `heads` is ignored by gcn layers."""
    model_config = ConfigDict(extra="forbid")

    layer_type: LayerType = "gat"
    layers: int = Field(1, ge=1)
    heads: int = Field(1, ge=1)
    window: int = Field(2, ge=1)


class HieGnnConfig(BaseModel):
    """Model hyperparameters and the level-weight policy."""
    model_config = ConfigDict(extra="forbid")

    embedding_dim: int = Field(200, ge=1)
    embedding_init: float = Field(0.01, gt=0)
    word: LevelConfig = LevelConfig(layers=1, heads=1)
    sen: LevelConfig = LevelConfig(layers=1, heads=1)
    doc: LevelConfig = LevelConfig(layers=3, heads=3)
    readout: ReadoutMode = "mean"
    dropout: float = 0.5
    negative_slope: float = 0.2
    lambda_policy: LambdaPolicy = "per_sample"
    num_classes: int = Field(2, ge=1)
    vocab_size: int = Field(1, ge=1)
    seed: int = 0

    @field_validator("dropout")
    @classmethod
    def check_dropout(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        return v

    @field_validator("sen")
    @classmethod
    def check_sen(cls, v: LevelConfig) -> LevelConfig:
        if v.layers != 1:
            raise ValueError("the sentence level is a single GAT layer")
        return v


class TrainConfig(BaseModel):
    """Optimization and evaluation protocol."""
    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(64, ge=1)
    learning_rate: float = Field(1e-3, ge=0)
    optimizer: Literal["adam", "sgd"] = "adam"
    max_epochs: int = Field(200, ge=1)
    patience: int = Field(10, ge=1)
    validation_fraction: float = 0.1
    grad_clip: float = Field(5.0, ge=0)
    lambda_override: Optional[Tuple[float, float, float]] = None
    active_levels: Optional[Tuple[str, ...]] = None
    seed: int = 0

    @field_validator("validation_fraction")
    @classmethod
    def check_validation_fraction(cls, v: float) -> float:
        if not 0.0 < v < 0.5:
            raise ValueError("validation_fraction must lie in (0, 0.5)")
        return v

    @field_validator("lambda_override")
    @classmethod
    def check_lambda_override(cls, v):
        if v is None:
            return v
        if any(x < 0 for x in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError("fixed lambda weights must be non-negative and sum to 1")
        return v

    @field_validator("active_levels")
    @classmethod
    def check_active_levels(cls, v):
        if v is None:
            return v
        if not v or any(level not in ("d", "s", "w") for level in v) or len(set(v)) != len(v):
            raise ValueError("active_levels must be a non-empty subset of d, s, w")
        return tuple(sorted(v, key="dsw".index))

    @model_validator(mode="after")
    def check_exclusive(self) -> "TrainConfig":
        if self.lambda_override is not None and self.active_levels is not None:
            raise ValueError("lambda_override and active_levels are mutually exclusive")
        return self


class ResolvedValue(BaseModel):
    value: object
    source: Literal["default", "preset", "file", "flag"]


class RunManifest(BaseModel):
    """Fully resolved inputs of one command, written before any compute.

    `ingest` has no model or training section; `eval` records the
    checkpoint's model configuration and the evaluated split.
    """

    command: str
    corpus: str
    timestamp: str
    paths: Dict[str, str]
    seed: Optional[int] = None
    model: Optional[HieGnnConfig] = None
    train: Optional[TrainConfig] = None
    split: Optional[str] = None
    sources: Dict[str, ResolvedValue] = {}
    seeds: List[int] = []
