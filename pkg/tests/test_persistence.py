"""
Checkpoints and the corpus cache.
"""

import sqlite3

import numpy as np
import pytest

from hiegnn.core.exceptions import CheckpointError, DataError
from hiegnn.schemas.config import LevelConfig
from hiegnn.services.checkpoint import load_checkpoint, save_checkpoint
from hiegnn.services.corpus_cache import load_corpus, save_corpus
from hiegnn.services.hiegnn_model import HieGnnModel


class TestCheckpoint:
    def test_restores_identical_predictions(self, tmp_path, toy_corpus, model_config):
        model = HieGnnModel(model_config)
        path = save_checkpoint(tmp_path / "m.npz", model, toy_corpus.vocabulary, toy_corpus.labels)
        restored = load_checkpoint(path, expected_classes=2)
        graphs = model.build_graphs(toy_corpus.split("test"))
        assert np.array_equal(model.forward(graphs)[0].data, restored.model.forward(graphs)[0].data)
        assert restored.labels == toy_corpus.labels
        assert restored.vocabulary.tokens == toy_corpus.vocabulary.tokens
        assert restored.model.config == model.config

    def test_gcn_levels_round_trip(self, tmp_path, toy_corpus, model_config):
        config = model_config.model_copy(update={
            "sen": LevelConfig(layer_type="gcn"),
            "doc": LevelConfig(layer_type="gcn", layers=2),
        })
        model = HieGnnModel(config)
        path = save_checkpoint(tmp_path / "m.npz", model, toy_corpus.vocabulary, toy_corpus.labels)
        restored = load_checkpoint(path)
        assert restored.model.config.doc.layer_type == "gcn"
        graphs = model.build_graphs(toy_corpus.split("test"))
        assert np.array_equal(model.forward(graphs)[0].data, restored.model.forward(graphs)[0].data)

    def test_class_count_mismatch(self, tmp_path, toy_corpus, model_config):
        path = save_checkpoint(tmp_path / "m.npz", HieGnnModel(model_config),
                               toy_corpus.vocabulary, toy_corpus.labels)
        with pytest.raises(CheckpointError, match="C=2.*C=5"):
            load_checkpoint(path, expected_classes=5)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.npz")

    def test_foreign_archive(self, tmp_path):
        path = tmp_path / "other.npz"
        np.savez(path, weights=np.ones(3))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_shape_mismatch(self, tmp_path, toy_corpus, model_config):
        model = HieGnnModel(model_config)
        path = save_checkpoint(tmp_path / "m.npz", model, toy_corpus.vocabulary, toy_corpus.labels)
        with np.load(path) as archive:
            contents = {key: archive[key] for key in archive.files}
        contents["param:M1"] = np.zeros((2, 2))
        np.savez(path, **contents)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestCorpusCache:
    def test_round_trip(self, tmp_path, toy_corpus):
        path = save_corpus(tmp_path / "cache" / "corpus.db", toy_corpus)
        loaded = load_corpus(path)
        assert loaded.name == "toy"
        assert loaded.labels == toy_corpus.labels
        assert loaded.vocabulary.tokens == toy_corpus.vocabulary.tokens
        assert loaded.stats == toy_corpus.stats
        assert loaded.records == toy_corpus.records

    def test_no_temporary_file_left(self, tmp_path, toy_corpus):
        save_corpus(tmp_path / "corpus.db", toy_corpus)
        assert (tmp_path / "corpus.db").is_file()
        assert not [p.name for p in tmp_path.iterdir() if ".tmp" in p.name]

    def test_corpus_info_stores_text_only(self, tmp_path, toy_corpus):
        path = save_corpus(tmp_path / "corpus.db", toy_corpus)
        with sqlite3.connect(path) as connection:
            columns = [row[1] for row in connection.execute("PRAGMA table_info(corpus_info)")]
        assert columns == ["key", "text_value"]

    def test_missing_cache(self, tmp_path):
        with pytest.raises(DataError, match="ingest"):
            load_corpus(tmp_path / "corpus.db")
