import json

import pytest

from hiegnn.cli import main
from hiegnn.core.database import session_scope
from hiegnn.core.config import settings
from hiegnn.models.runs import TrainingRun
from hiegnn.services.checkpoint import save_checkpoint
from hiegnn.services.hiegnn_model import HieGnnModel
from tests.conftest import small_config

FAST = ["--embedding-dim", "4", "--epochs", "2", "--batch-size", "8", "--dropout", "0",
        "--seed", "1", "--quiet"]


@pytest.fixture
def cache(tmp_path, corpus_files, isolated_settings):
    meta, text = corpus_files
    out = tmp_path / "cache"
    assert main(["ingest", str(meta), str(text), "--out", str(out), "--dataset", "toy"]) == 0
    return out / "corpus.db"


def test_ingest_reports_stats(tmp_path, corpus_files, isolated_settings, capsys):
    meta, text = corpus_files
    out = tmp_path / "cache"
    assert main(["ingest", str(meta), str(text), "--out", str(out), "--dataset", "toy"]) == 0
    assert (out / "corpus.db").is_file()
    assert "docs: 20" in capsys.readouterr().out


def test_ingest_writes_manifest(cache):
    manifest = json.loads((cache.parent / "manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert manifest["corpus"] == "toy"
    assert manifest["paths"]["meta"].endswith("toy.meta")
    assert manifest["paths"]["cache"] == str(cache)
    assert manifest["model"] is None


def test_ingest_manifest_precedes_reading(tmp_path, isolated_settings):
    out = tmp_path / "cache"
    assert main(["ingest", str(tmp_path / "a.meta"), str(tmp_path / "a.txt"), "--out", str(out)]) == 2
    assert json.loads((out / "manifest.json").read_text())["command"] == "ingest"


def test_ingest_bad_chunk_size(corpus_files, isolated_settings, capsys):
    meta, text = corpus_files
    code = main(["ingest", str(meta), str(text), "--split-mode", "chunk", "--chunk-size", "0"])
    assert code == 1
    assert "chunk_size" in capsys.readouterr().err


def test_ingest_missing_file(tmp_path, isolated_settings, capsys):
    out = tmp_path / "cache"
    code = main(["ingest", str(tmp_path / "a.meta"), str(tmp_path / "a.txt"), "--out", str(out)])
    assert code == 2
    assert "not found" in capsys.readouterr().err
    assert not (out / "corpus.db").exists()


def test_ingest_empty_corpus(tmp_path, isolated_settings, capsys):
    (tmp_path / "e.meta").write_text("")
    (tmp_path / "e.txt").write_text("")
    assert main(["ingest", str(tmp_path / "e.meta"), str(tmp_path / "e.txt")]) == 2
    assert "line 0" in capsys.readouterr().err


def test_stats_json(cache, capsys):
    capsys.readouterr()
    assert main(["stats", str(cache), "--json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["classes"] == 2 and stats["train"] == 16


class TestTrain:
    def test_writes_manifest_report_checkpoint_and_registry_row(self, tmp_path, cache, capsys):
        out = tmp_path / "run"
        capsys.readouterr()
        assert main(["train", "--cache", str(cache), "--out", str(out), "--json", *FAST]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["seed"] == 1 and len(report["epochs"]) <= 2

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "train"
        assert manifest["model"]["embedding_dim"] == 4
        assert manifest["sources"]["model.embedding_dim"]["source"] == "flag"
        assert manifest["sources"]["train.patience"]["source"] == "default"
        assert (out / "train.npz").is_file()
        assert (out / "train.txt").is_file() and (out / "train.json").is_file()

        with session_scope(settings.database_url) as db:
            rows = db.query(TrainingRun).all()
            assert [(r.command, r.corpus, r.seed) for r in rows] == [("train", "toy", 1)]

    def test_lambda_override(self, tmp_path, cache):
        out = tmp_path / "run"
        assert main(["train", "--cache", str(cache), "--out", str(out), "--lambda", "1,0,0", *FAST]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["train"]["lambda_override"] == [1.0, 0.0, 0.0]

    def test_multiple_seeds(self, tmp_path, cache, capsys):
        out = tmp_path / "run"
        capsys.readouterr()
        args = ["train", "--cache", str(cache), "--out", str(out), "--seeds", "3,4", "--json", *FAST]
        assert main(args) == 0
        summary = json.loads(capsys.readouterr().out)
        assert sorted(summary["accuracies"]) == ["3", "4"]
        assert (out / "train-seed3.npz").is_file() and (out / "seeds.json").is_file()

    def test_config_file(self, tmp_path, cache):
        ini = tmp_path / "run.ini"
        ini.write_text("[train]\npatience = 1\n[model.doc]\nlayers = 1\n")
        out = tmp_path / "run"
        assert main(["train", "--cache", str(cache), "--out", str(out), "--config", str(ini), *FAST]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["train"]["patience"] == 1
        assert manifest["sources"]["model.doc.layers"]["source"] == "file"

    def test_missing_config_file(self, tmp_path, cache):
        assert main(["train", "--cache", str(cache), "--config", str(tmp_path / "x.ini"), *FAST]) == 1

    def test_no_corpus(self, isolated_settings):
        assert main(["train", *FAST]) == 1

    def test_usage_error(self, isolated_settings):
        with pytest.raises(SystemExit) as info:
            main(["train", "--epochs", "many"])
        assert info.value.code == 1


class TestEval:
    @pytest.fixture
    def checkpoint(self, tmp_path, cache):
        out = tmp_path / "run"
        assert main(["train", "--cache", str(cache), "--out", str(out), *FAST]) == 0
        return out / "train.npz"

    def test_prints_accuracy_and_counts(self, cache, checkpoint, capsys):
        capsys.readouterr()
        assert main(["eval", "--cache", str(cache), "--checkpoint", str(checkpoint), "--json"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert 0.0 <= result["accuracy"] <= 1.0
        assert result["total"] == 4

    def test_train_split(self, cache, checkpoint, capsys):
        capsys.readouterr()
        assert main(["eval", "--cache", str(cache), "--checkpoint", str(checkpoint),
                     "--split", "train"]) == 0
        assert "samples: 16" in capsys.readouterr().out

    def test_class_count_mismatch(self, tmp_path, cache, toy_corpus, capsys):
        model = HieGnnModel(small_config(toy_corpus.vocabulary.size, num_classes=3))
        path = save_checkpoint(tmp_path / "three.npz", model, toy_corpus.vocabulary, ["a", "b", "c"])
        assert main(["eval", "--cache", str(cache), "--checkpoint", str(path)]) == 2
        err = capsys.readouterr().err
        assert "C=3" in err and "C=2" in err

    def test_writes_manifest_and_report(self, tmp_path, cache, checkpoint):
        out = tmp_path / "eval"
        assert main(["eval", "--cache", str(cache), "--checkpoint", str(checkpoint),
                     "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "eval"
        assert manifest["split"] == "test"
        assert manifest["seed"] == 1
        assert manifest["paths"]["checkpoint"] == str(checkpoint)
        assert manifest["model"]["embedding_dim"] == 4
        assert (out / "eval.json").is_file() and (out / "eval.txt").is_file()

    def test_raw_files_are_encoded_with_checkpoint_vocabulary(self, tmp_path, corpus_files, cache,
                                                              checkpoint, capsys):
        meta, text = corpus_files
        reordered = tmp_path / "reordered"
        reordered.mkdir()
        for source in (meta, text):
            lines = source.read_text(encoding="utf-8").splitlines()
            (reordered / source.name).write_text("\n".join(reversed(lines)) + "\n", encoding="utf-8")

        capsys.readouterr()
        assert main(["eval", "--cache", str(cache), "--checkpoint", str(checkpoint), "--json"]) == 0
        expected = json.loads(capsys.readouterr().out)
        assert main(["eval", "--meta", str(reordered / meta.name), "--text", str(reordered / text.name),
                     "--checkpoint", str(checkpoint), "--json"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["accuracy"] == expected["accuracy"]
        assert result["per_class"] == expected["per_class"]

    def test_cache_with_other_vocabulary(self, tmp_path, corpus_files, checkpoint, capsys):
        meta, text = corpus_files
        reordered = tmp_path / "reordered"
        reordered.mkdir()
        for source in (meta, text):
            lines = source.read_text(encoding="utf-8").splitlines()
            (reordered / source.name).write_text("\n".join(reversed(lines)) + "\n", encoding="utf-8")
        other = tmp_path / "other"
        assert main(["ingest", str(reordered / meta.name), str(reordered / text.name),
                     "--out", str(other)]) == 0
        capsys.readouterr()
        assert main(["eval", "--cache", str(other / "corpus.db"), "--checkpoint", str(checkpoint)]) == 2
        assert "vocabulary differs" in capsys.readouterr().err

    def test_raw_files_with_unknown_label(self, tmp_path, corpus_files, checkpoint, capsys):
        meta, text = corpus_files
        bad = tmp_path / "bad.meta"
        bad.write_text(meta.read_text(encoding="utf-8").replace("\tneg", "\tmixed", 1), encoding="utf-8")
        assert main(["eval", "--meta", str(bad), "--text", str(text),
                     "--checkpoint", str(checkpoint)]) == 2
        assert "mixed" in capsys.readouterr().err


class TestAblate:
    def test_unknown_row(self, cache, capsys):
        assert main(["ablate", "--cache", str(cache), "--rows", "d_only,bogus", *FAST]) == 1
        assert "hiegat" in capsys.readouterr().err

    def test_single_row(self, tmp_path, cache, capsys):
        out = tmp_path / "abl"
        capsys.readouterr()
        assert main(["ablate", "--cache", str(cache), "--out", str(out), "--rows", "d_only", *FAST]) == 0
        assert "λ_d = 1" in capsys.readouterr().out
        assert (out / "ablation.json").is_file() and (out / "manifest.json").is_file()


def test_gradcheck(capsys):
    assert main(["gradcheck", "--seed", "0"]) == 0
    assert "status: ok" in capsys.readouterr().out


def test_dump_graphs(cache, capsys):
    capsys.readouterr()
    assert main(["dump-graphs", "--cache", str(cache), "--doc-id", "p0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "# p0"
    assert "word:1 0 0" in lines and "sen 0 1" in lines


def test_predict(tmp_path, toy_corpus, isolated_settings, capsys):
    model = HieGnnModel(small_config(toy_corpus.vocabulary.size))
    path = save_checkpoint(tmp_path / "m.npz", model, toy_corpus.vocabulary, toy_corpus.labels)
    assert main(["predict", "--checkpoint", str(path), "--input", "a good movie. great fun.",
                 "--json"]) == 0
    prediction = json.loads(capsys.readouterr().out)
    assert prediction["label"] in ("neg", "pos")
    assert prediction["sentence_count"] == 2
