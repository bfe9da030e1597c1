import pytest

from hiegnn.core.exceptions import ConfigError
from hiegnn.services.run_config import parse_lambda, read_config_file, resolve_run


def write_ini(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text, encoding="utf-8")
    return path


class TestPresets:
    def test_mr_learning_rate(self):
        run = resolve_run("mr")
        assert run.train.learning_rate == pytest.approx(1e-4)
        assert run.sources["train.learning_rate"].source == "preset"
        assert run.data.split_mode == "punct"

    def test_r8_defaults(self):
        run = resolve_run("r8")
        assert run.train.learning_rate == pytest.approx(1e-3)
        assert run.data.split_mode == "chunk"

    def test_unknown_dataset_keeps_defaults(self):
        run = resolve_run("mystery")
        assert run.sources["train.learning_rate"].source == "default"


class TestLayering:
    def test_file_beats_preset_and_flag_beats_file(self, tmp_path):
        path = write_ini(tmp_path, "[train]\nlearning_rate = 0.01\nbatch_size = 8\n"
                                   "[model.doc]\nheads = 2\n")
        run = resolve_run("mr", read_config_file(path), {"train.batch_size": 16})
        assert run.train.learning_rate == pytest.approx(0.01)
        assert run.sources["train.learning_rate"].source == "file"
        assert run.train.batch_size == 16
        assert run.sources["train.batch_size"].source == "flag"
        assert run.model_values["doc"]["heads"] == 2
        assert run.model_values["doc"]["layers"] == 3

    def test_file_values_are_stored_validated(self, tmp_path):
        path = write_ini(tmp_path, "[model]\ndropout = 0.25\n[model.word]\nlayers = 2\n"
                                   "layer_type = gcn\n[train]\npatience = 4\nlambda = 1,0,0\n")
        run = resolve_run(None, read_config_file(path))
        assert run.model_values["word"]["layers"] == 2
        assert run.model_values["word"]["layer_type"] == "gcn"
        assert run.model_values["dropout"] == 0.25
        assert run.sources["model.word.layers"].value == 2
        assert run.sources["model.word.layers"].source == "file"
        assert run.sources["train.patience"].value == 4
        assert run.sources["train.lambda"].value == (1.0, 0.0, 0.0)

    def test_unknown_layer_type(self):
        with pytest.raises(ConfigError):
            resolve_run(None, {"model.doc.layer_type": "rnn"})

    def test_seed_flag_sets_model_and_train(self):
        run = resolve_run(None, {}, {"seed": 42})
        assert run.train.seed == 42
        assert run.model_values["seed"] == 42

    def test_lambda_flag(self):
        run = resolve_run(None, {}, {"train.lambda": "1,0,0"})
        assert run.train.lambda_override == (1.0, 0.0, 0.0)

    def test_levels_in_file(self, tmp_path):
        path = write_ini(tmp_path, "[train]\nlevels = s,w\n")
        assert resolve_run(None, read_config_file(path)).train.active_levels == ("s", "w")

    def test_model_config_for_corpus(self, toy_corpus):
        config = resolve_run(None).model_config_for(toy_corpus)
        assert config.num_classes == 2
        assert config.vocab_size == toy_corpus.vocabulary.size


class TestErrors:
    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError, match="section"):
            read_config_file(write_ini(tmp_path, "[optimizer]\nlr = 1\n"))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="learning"):
            read_config_file(write_ini(tmp_path, "[train]\nlearning = 1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config_file(tmp_path / "absent.ini")

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            resolve_run(None, {"model.dropout": "1.5"})

    def test_sentence_level_depth(self):
        with pytest.raises(ConfigError):
            resolve_run(None, {"model.sen.layers": "2"})

    @pytest.mark.parametrize("text", ["1,0", "a,b,c", "0.5,0.5,0.5"])
    def test_bad_lambda(self, text):
        with pytest.raises(ConfigError):
            resolve_run(None, {}, {"train.lambda": text})

    def test_parse_lambda(self):
        assert parse_lambda("0.5, 0.25, 0.25") == (0.5, 0.25, 0.25)
