"""
Model checkpoints: named parameter arrays plus config, vocabulary and
labels in one NumPy `.npz` container.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from hiegnn.core.exceptions import CheckpointError
from hiegnn.schemas.config import HieGnnConfig
from hiegnn.schemas.corpus import Vocabulary
from hiegnn.services.hiegnn_model import HieGnnModel

logger = logging.getLogger(__name__)

FORMAT_TAG = "hiegnn-checkpoint/1"
_META_KEYS = ("__format__", "__config__", "__vocabulary__", "__labels__")


@dataclass
class Checkpoint:
    model: HieGnnModel
    vocabulary: Vocabulary
    labels: List[str]


def save_checkpoint(path: Path, model: HieGnnModel, vocabulary: Vocabulary, labels: List[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if len(labels) != model.num_classes:
        raise CheckpointError(f"{len(labels)} labels for a model with C={model.num_classes}")
    arrays = {f"param:{name}": values for name, values in model.registry.state_dict().items()}
    arrays["__format__"] = np.array(FORMAT_TAG)
    arrays["__config__"] = np.array(model.config.model_dump_json())
    arrays["__vocabulary__"] = np.array(json.dumps(vocabulary.tokens))
    arrays["__labels__"] = np.array(json.dumps(labels))
    with open(path, "wb") as handle:
        np.savez(handle, **arrays)
    logger.info(f"Saved checkpoint with {model.registry.num_values()} values to {path}")
    return path


def load_checkpoint(path: Path, expected_classes: Optional[int] = None) -> Checkpoint:
    """
    Rebuild a model from a checkpoint.

    Raises:
        CheckpointError: missing file, wrong format tag, unknown or missing
            parameters, shape mismatches, or a class count different from
            `expected_classes`
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} not found")
    try:
        with np.load(path, allow_pickle=False) as archive:
            contents = {key: archive[key] for key in archive.files}
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    missing = [key for key in _META_KEYS if key not in contents]
    if missing:
        raise CheckpointError(f"checkpoint {path} lacks {missing}")
    tag = str(contents["__format__"])
    if tag != FORMAT_TAG:
        raise CheckpointError(f"checkpoint format {tag!r}, expected {FORMAT_TAG!r}")

    try:
        config = HieGnnConfig.model_validate_json(str(contents["__config__"]))
        vocabulary = Vocabulary(tokens=json.loads(str(contents["__vocabulary__"])))
    except (ValidationError, ValueError) as exc:
        raise CheckpointError(f"checkpoint {path} has invalid metadata: {exc}") from exc
    labels = json.loads(str(contents["__labels__"]))

    if expected_classes is not None and expected_classes != config.num_classes:
        raise CheckpointError(
            f"class count mismatch: checkpoint has C={config.num_classes}, corpus has C={expected_classes}"
        )

    model = HieGnnModel(config)
    state = {key[len("param:"):]: value for key, value in contents.items() if key.startswith("param:")}
    model.registry.load_state_dict(state)
    return Checkpoint(model=model, vocabulary=vocabulary, labels=labels)
