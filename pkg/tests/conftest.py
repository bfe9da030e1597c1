"""
Shared fixtures: a small two-class corpus on disk, tiny model configs and
an isolated output directory for the CLI and API.
"""

from pathlib import Path

import numpy as np
import pytest

from hiegnn.core.config import settings
from hiegnn.schemas.config import HieGnnConfig, LevelConfig, TrainConfig
from hiegnn.schemas.corpus import DocumentRecord
from hiegnn.services.text_pipeline import ingest_corpus

POSITIVE = [
    "a good movie. great acting and a fine plot.",
    "good fun. the cast is great!",
    "fine work; good pacing.",
    "great film. good score. fine ending.",
    "a great and good story.",
    "good direction! great cast.",
    "fine and good. truly great.",
    "great fun; good times.",
]
NEGATIVE = [
    "a bad movie. awful acting and a dull plot.",
    "bad fun. the cast is awful!",
    "dull work; bad pacing.",
    "awful film. bad score. dull ending.",
    "a awful and bad story.",
    "bad direction! awful cast.",
    "dull and bad. truly awful.",
    "awful fun; bad times.",
]
TEST_DOCS = [
    ("pos", "good and great. a fine movie."),
    ("neg", "bad and awful. a dull movie."),
    ("pos", "great cast, unseen twist."),
    ("neg", "dull cast, unseen twist."),
]


def write_corpus(directory: Path):
    """Write the toy corpus in the two-file layout; returns (meta, text)."""
    meta_lines, text_lines = [], []
    for i, (pos, neg) in enumerate(zip(POSITIVE, NEGATIVE)):
        meta_lines += [f"p{i}\ttrain\tpos", f"n{i}\ttrain\tneg"]
        text_lines += [pos, neg]
    for i, (label, text) in enumerate(TEST_DOCS):
        meta_lines.append(f"t{i}\ttest\t{label}")
        text_lines.append(text)
    meta = directory / "toy.meta"
    text = directory / "toy.txt"
    meta.write_text("\n".join(meta_lines) + "\n", encoding="utf-8")
    text.write_text("\n".join(text_lines) + "\n", encoding="utf-8")
    return meta, text


@pytest.fixture
def corpus_files(tmp_path):
    return write_corpus(tmp_path)


@pytest.fixture
def toy_corpus(corpus_files):
    meta, text = corpus_files
    return ingest_corpus(meta, text, dataset="toy")


def small_config(vocab_size: int, num_classes: int = 2, **overrides) -> HieGnnConfig:
    values = dict(
        embedding_dim=6,
        embedding_init=0.1,
        word=LevelConfig(layers=1, heads=1),
        sen=LevelConfig(layers=1, heads=1),
        doc=LevelConfig(layers=2, heads=2),
        dropout=0.0,
        num_classes=num_classes,
        vocab_size=vocab_size,
        seed=3,
    )
    values.update(overrides)
    return HieGnnConfig(**values)


@pytest.fixture
def model_config(toy_corpus):
    return small_config(toy_corpus.vocabulary.size, toy_corpus.num_classes)


@pytest.fixture
def train_config():
    return TrainConfig(batch_size=4, learning_rate=0.01, max_epochs=3, patience=5,
                       validation_fraction=0.25, seed=1)


@pytest.fixture
def two_sentence_doc():
    """Sentences of 3 and 2 tokens."""
    return DocumentRecord(doc_id="d", split="train", label_id=1,
                          tokens=[1, 2, 3, 4, 5], sentence_spans=[(0, 3), (3, 5)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def isolated_settings(tmp_path, monkeypatch):
    """Point every output (reports, caches, run registry) at tmp_path."""
    out = tmp_path / "runs"
    monkeypatch.setattr(settings, "OUTPUT_DIR", str(out))
    monkeypatch.setattr(settings, "DATABASE_URL", None)
    monkeypatch.setattr(settings, "API_TOKEN", None)
    return out
