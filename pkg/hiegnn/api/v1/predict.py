"""
Prediction and model-info endpoints.
"""

from fastapi import APIRouter, Depends, HTTPException, Request, status

from hiegnn.core.security import require_token
from hiegnn.schemas.model import ModelInfo, Prediction, PredictRequest
from hiegnn.services.checkpoint import Checkpoint
from hiegnn.services.inference import predict_text

router = APIRouter(
    tags=["Prediction"],
    dependencies=[Depends(require_token)],
    responses={503: {"description": "No model loaded"}},
)


def get_checkpoint(request: Request) -> Checkpoint:
    """The checkpoint loaded at startup; 503 when the service runs without one."""
    checkpoint = getattr(request.app.state, "checkpoint", None)
    if checkpoint is None:
        raise HTTPException(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE,
            detail="No model loaded; set CHECKPOINT_PATH",
        )
    return checkpoint


@router.get("/model", response_model=ModelInfo)
async def get_model_info(checkpoint: Checkpoint = Depends(get_checkpoint)):
    """Class names, vocabulary size, parameter count and hyperparameters of the served model."""
    model = checkpoint.model
    return ModelInfo(
        labels=checkpoint.labels,
        vocab_size=checkpoint.vocabulary.size,
        parameters=model.registry.num_values(),
        config=model.config.model_dump(),
    )


@router.post("/predict", response_model=Prediction)
def predict(payload: PredictRequest, checkpoint: Checkpoint = Depends(get_checkpoint)):
    """Classify one document; also returns per-level probabilities and level weights."""
    return predict_text(checkpoint.model, checkpoint.vocabulary, checkpoint.labels, payload.text,
                        mode=payload.split_mode, chunk_size=payload.chunk_size)
