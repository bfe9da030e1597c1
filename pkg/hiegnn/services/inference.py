"""
Classification of raw text with a trained model.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hiegnn.core.exceptions import InvalidInputError
from hiegnn.schemas.corpus import UNK_ID, Vocabulary
from hiegnn.schemas.model import LambdaWeights, Prediction
from hiegnn.services.hiegnn_model import LEVELS, HieGnnModel
from hiegnn.services.text_pipeline import DEFAULT_CHUNK_SIZE, SplitMode, encode_document, segment

logger = logging.getLogger(__name__)


def _probabilities(scores: np.ndarray, labels: List[str]) -> dict:
    """Softmax of a score row; for log-probabilities this is plain exp."""
    normalized = np.exp(scores - np.logaddexp.reduce(scores))
    return {label: float(p) for label, p in zip(labels, normalized)}


def predict_text(model: HieGnnModel, vocabulary: Vocabulary, labels: List[str], text: str, *,
                 mode: SplitMode = "punct", chunk_size: int = DEFAULT_CHUNK_SIZE,
                 fixed: Optional[Tuple[float, float, float]] = None,
                 active_levels: Optional[Sequence[str]] = None) -> Prediction:
    """
    Segment, encode and classify one document.

    Out-of-vocabulary words map to UNK. The fused scores are a weighted sum
    of per-level log-probabilities and are renormalized before they are
    reported. Levels with zero weight are not run and have no entry in
    `level_probabilities`.

    Raises:
        InvalidInputError: the text has no tokens after cleaning
    """
    sentences = segment(text, mode, chunk_size)
    if not sentences:
        raise InvalidInputError("text has no tokens after cleaning")
    record = encode_document("input", "test", 0, sentences, vocabulary)
    sample = model.build_graphs([record])
    lambdas = model.lambdas_for(sample, fixed, active_levels)
    fused, outputs, lambdas = model.forward(sample, training=False, lambdas=lambdas)
    scores = fused.data[0]

    label_id = int(np.argmax(scores))
    unknown = sum(1 for token in record.tokens if token == UNK_ID)
    logger.debug(f"Predicted {labels[label_id]!r} for {len(record.tokens)} tokens "
                 f"in {record.sentence_count} sentences")
    return Prediction(
        label=labels[label_id],
        label_id=label_id,
        probabilities=_probabilities(scores, labels),
        level_probabilities={level: _probabilities(outputs.get(level).data[0], labels)
                             for level in LEVELS if outputs.get(level) is not None},
        lambdas=LambdaWeights(lambda_d=float(lambdas[0, 0]), lambda_s=float(lambdas[0, 1]),
                              lambda_w=float(lambdas[0, 2]), source_xs=float(record.sentence_count)),
        token_count=len(record.tokens),
        sentence_count=record.sentence_count,
        unknown_tokens=unknown,
    )
