"""
Run configuration resolution.

Values come from four layers, later ones winning:
built-in defaults < dataset preset < config file < command-line flags.
The config file is INI text with one section per module:

    [data]        dataset, split_mode, chunk_size
    [model]       embedding_dim, embedding_init, readout, dropout,
                  negative_slope, lambda_policy, seed
    [model.word]  layer_type (gat|gcn), layers, heads, window
                  (also [model.sen], [model.doc])
    [train]       batch_size, learning_rate, optimizer, max_epochs, patience,
                  validation_fraction, grad_clip, lambda, levels, seed
"""

import configparser
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError

from hiegnn.core.config import get_preset
from hiegnn.core.exceptions import ConfigError
from hiegnn.schemas.config import HieGnnConfig, ResolvedValue, TrainConfig
from hiegnn.schemas.corpus import Corpus

logger = logging.getLogger(__name__)

Source = Literal["default", "preset", "file", "flag"]

_KNOWN_KEYS = {
    "data": {"dataset", "split_mode", "chunk_size"},
    "model": {"embedding_dim", "embedding_init", "readout", "dropout", "negative_slope",
              "lambda_policy", "seed"},
    "model.word": {"layer_type", "layers", "heads", "window"},
    "model.sen": {"layer_type", "layers", "heads", "window"},
    "model.doc": {"layer_type", "layers", "heads", "window"},
    "train": {"batch_size", "learning_rate", "optimizer", "max_epochs", "patience",
              "validation_fraction", "grad_clip", "lambda", "levels", "seed"},
}


class DataOptions(BaseModel):
    dataset: Optional[str] = None
    split_mode: Literal["punct", "chunk"] = "punct"
    chunk_size: int = Field(12, ge=1)


def parse_lambda(text: str) -> Tuple[float, float, float]:
    """'1,0,0' → (1.0, 0.0, 0.0)."""
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"lambda must be three comma-separated numbers, got {text!r}") from exc
    if len(values) != 3:
        raise ConfigError(f"lambda must have three values (d,s,w), got {text!r}")
    return values


def parse_levels(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def read_config_file(path: Path) -> Dict[str, str]:
    """Flatten an INI file into dotted keys, rejecting unknown sections and keys."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        for key, value in parser.items(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path}")
            values[f"{section}.{key}"] = value.strip()
    return values


@dataclass
class ResolvedRun:
    """Everything a command needs except corpus-derived sizes."""

    model_values: Dict[str, Any]
    train: TrainConfig
    data: DataOptions
    sources: Dict[str, ResolvedValue] = field(default_factory=dict)

    def model_config_for(self, corpus: Corpus) -> HieGnnConfig:
        values = dict(self.model_values)
        values["num_classes"] = corpus.num_classes
        values["vocab_size"] = corpus.vocabulary.size
        try:
            return HieGnnConfig.model_validate(values)
        except ValidationError as exc:
            raise ConfigError(f"invalid model configuration: {exc}") from exc


def _nest(flat: Dict[str, Any], prefix: str) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        if not key.startswith(prefix + "."):
            continue
        parts = key[len(prefix) + 1:].split(".")
        target = nested
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    return nested


def _flatten(prefix: str, values: Dict[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in values.items():
        if isinstance(value, dict):
            flat.update(_flatten(f"{prefix}.{key}", value))
        else:
            flat[f"{prefix}.{key}"] = value
    return flat


def _defaults() -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    flat.update(_flatten("model", HieGnnConfig().model_dump(exclude={"num_classes", "vocab_size"})))
    flat.update({f"train.{k}": v for k, v in TrainConfig().model_dump(
        exclude={"lambda_override", "active_levels"}).items()})
    flat.update({f"data.{k}": v for k, v in DataOptions().model_dump().items()})
    return flat


def resolve_run(dataset: Optional[str] = None, file_values: Optional[Dict[str, str]] = None,
                flag_values: Optional[Dict[str, Any]] = None) -> ResolvedRun:
    """
    Merge the four configuration layers and validate the result.

    `flag_values` uses the same dotted keys as the config file; a `seed`
    key sets both the model and the training seed.
    """
    flat = _defaults()
    sources: Dict[str, Source] = {key: "default" for key in flat}

    def apply(values: Dict[str, Any], source: Source):
        for key, value in values.items():
            if value is None:
                continue
            keys = ("model.seed", "train.seed") if key == "seed" else (key,)
            for k in keys:
                flat[k] = value
                sources[k] = source

    file_values = file_values or {}
    flag_values = flag_values or {}
    dataset = flag_values.get("data.dataset") or file_values.get("data.dataset") or dataset
    preset = get_preset(dataset)
    if dataset and preset is None:
        logger.warning(f"No preset for dataset {dataset!r}; using built-in defaults")
    if preset is not None:
        apply({"train.learning_rate": preset.learning_rate,
               "data.split_mode": preset.split_mode,
               "data.dataset": preset.name}, "preset")
    apply(file_values, "file")
    apply(flag_values, "flag")

    train_values = _nest(flat, "train")
    if "lambda" in train_values:
        raw = train_values.pop("lambda")
        train_values["lambda_override"] = parse_lambda(raw) if isinstance(raw, str) else raw
    if "levels" in train_values:
        raw = train_values.pop("levels")
        train_values["active_levels"] = parse_levels(raw) if isinstance(raw, str) else raw

    try:
        train = TrainConfig.model_validate(train_values)
        data = DataOptions.model_validate(_nest(flat, "data"))
        model = HieGnnConfig.model_validate(_nest(flat, "model"))
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc

    model_values = model.model_dump(exclude={"num_classes", "vocab_size"})
    validated = {**_flatten("model", model_values), **_flatten("train", train.model_dump()),
                 **_flatten("data", data.model_dump())}
    validated["train.lambda"] = train.lambda_override
    validated["train.levels"] = train.active_levels
    resolved = {key: ResolvedValue(value=validated.get(key, flat[key]), source=sources[key])
                for key in sorted(flat)}
    return ResolvedRun(model_values=model_values, train=train, data=data, sources=resolved)
