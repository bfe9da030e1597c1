"""
Level weights and prediction schemas.
"""

from typing import Dict, List, Literal

from pydantic import BaseModel, Field, model_validator


class LambdaWeights(BaseModel):
    """Convex weights of the doc, sen and word level outputs for one sentence count."""

    lambda_d: float
    lambda_s: float
    lambda_w: float
    source_xs: float

    @model_validator(mode="after")
    def check_simplex(self) -> "LambdaWeights":
        total = self.lambda_d + self.lambda_s + self.lambda_w
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"level weights sum to {total}, expected 1")
        if min(self.lambda_d, self.lambda_s, self.lambda_w) < 0:
            raise ValueError("level weights must be non-negative")
        return self

    def as_tuple(self):
        return self.lambda_d, self.lambda_s, self.lambda_w


class Prediction(BaseModel):
    """Classification of one raw text."""

    label: str
    label_id: int
    probabilities: Dict[str, float]
    level_probabilities: Dict[str, Dict[str, float]]
    lambdas: LambdaWeights
    sentence_count: int
    token_count: int
    unknown_tokens: int


class PredictRequest(BaseModel):
    text: str = Field(..., min_length=1)
    split_mode: Literal["punct", "chunk"] = "punct"
    chunk_size: int = Field(12, ge=1)


class ModelInfo(BaseModel):
    """Summary of the model currently served."""

    labels: List[str]
    vocab_size: int
    parameters: int
    config: Dict[str, object]
