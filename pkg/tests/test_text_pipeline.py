import pytest

from hiegnn.core.exceptions import ConfigError, CorpusFormatError, DataError
from hiegnn.core.config import CorpusTargets
from hiegnn.schemas.corpus import UNK_ID, UNK_TOKEN, CorpusStats, Vocabulary
from hiegnn.services.text_pipeline import (
    check_stats,
    ingest_corpus,
    segment,
    split_sentences,
    stats_report,
    tokenize,
)


class TestTokenize:
    def test_punctuation_and_case(self):
        assert tokenize("Good, movie!") == ["good", "movie"]

    def test_empty(self):
        assert tokenize("") == []

    def test_internal_hyphens_kept(self):
        assert tokenize("state-of-the-art") == ["state-of-the-art"]


class TestSplitSentences:
    def test_punct(self):
        assert split_sentences("good movie. bad ending.") == ["good movie", "bad ending"]

    def test_no_split_point(self):
        assert split_sentences("no punctuation here") == ["no punctuation here"]

    def test_chunk(self):
        text = " ".join(f"w{i}" for i in range(30))
        chunks = split_sentences(text, "chunk", 12)
        assert [len(c.split()) for c in chunks] == [12, 12, 6]

    def test_punctuation_only_sentences_dropped(self):
        assert segment("fine. !!! ; ok") == [["fine"], ["ok"]]

    @pytest.mark.parametrize("chunk_size", [0, -3])
    def test_chunk_size_below_one(self, chunk_size):
        with pytest.raises(ConfigError, match="chunk_size"):
            split_sentences("a b c", "chunk", chunk_size)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError, match="lines"):
            split_sentences("a b c", "lines")


class TestIngest:
    def test_toy_corpus(self, toy_corpus):
        stats = toy_corpus.stats
        assert (stats.docs, stats.train, stats.test, stats.classes) == (20, 16, 4, 2)
        assert toy_corpus.labels == ["neg", "pos"]
        assert toy_corpus.vocabulary.tokens[0] == UNK_TOKEN
        assert toy_corpus.vocabulary.tokens[1:4] == ["a", "good", "movie"]

    def test_test_only_tokens_map_to_unk(self, toy_corpus):
        vocab = toy_corpus.vocabulary
        assert vocab.id_of("unseen") == UNK_ID
        last = toy_corpus.split("test")[-1]
        assert last.tokens.count(UNK_ID) == 2
        assert toy_corpus.stats.unk_rate_test > 0

    def test_sentence_spans(self, toy_corpus):
        first = toy_corpus.records[0]
        assert first.sentence_spans == [(0, 3), (3, 9)]
        assert toy_corpus.vocabulary.decode(first.sentences()[0]) == ["a", "good", "movie"]

    def test_empty_document_dropped(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_text("a\ttrain\tx\nb\ttrain\ty\nc\ttest\tx\n")
        text.write_text("one two\n...\nthree\n")
        corpus = ingest_corpus(meta, text)
        assert corpus.stats.dropped == 1
        assert [r.doc_id for r in corpus.records] == ["a", "c"]
        assert corpus.labels == ["x", "y"]

    def test_empty_text_file(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_text("")
        text.write_text("")
        with pytest.raises(CorpusFormatError, match="line 0"):
            ingest_corpus(meta, text)

    def test_misaligned_files(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_text("a\ttrain\tx\n")
        text.write_text("one\ntwo\n")
        with pytest.raises(CorpusFormatError):
            ingest_corpus(meta, text)

    def test_bad_metadata_line(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_text("a\ttrain\tx\nb train y\n")
        text.write_text("one\ntwo\n")
        with pytest.raises(CorpusFormatError, match="line 2"):
            ingest_corpus(meta, text)

    def test_only_newline_ends_a_document(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_text("a\ttrain\tx\nb\ttest\ty\n", encoding="utf-8")
        text.write_text("header part\x0cbody part\nsecond doc\n", encoding="utf-8")
        corpus = ingest_corpus(meta, text)
        assert corpus.stats.docs == 2
        assert corpus.vocabulary.decode(corpus.records[0].tokens) == ["header", "part", "body", "part"]

    def test_windows_line_endings(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_bytes(b"a\ttrain\tx\r\nb\ttrain\ty\r\n")
        text.write_bytes(b"one two\r\nthree\r\n")
        corpus = ingest_corpus(meta, text)
        assert corpus.labels == ["x", "y"]
        assert corpus.vocabulary.tokens[1:] == ["one", "two", "three"]

    def test_given_vocabulary_and_labels(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_text("a\ttrain\ty\nb\ttest\tx\n", encoding="utf-8")
        text.write_text("new words\nold words\n", encoding="utf-8")
        vocabulary = Vocabulary.from_tokens(["old", "words"])
        corpus = ingest_corpus(meta, text, vocabulary=vocabulary, labels=["y", "x"])
        assert corpus.vocabulary.tokens == vocabulary.tokens
        assert [r.label_id for r in corpus.records] == [0, 1]
        assert corpus.records[0].tokens == [UNK_ID, vocabulary.id_of("words")]

    def test_label_outside_given_labels(self, tmp_path):
        meta = tmp_path / "m"
        text = tmp_path / "t"
        meta.write_text("a\ttrain\tx\nb\ttest\tz\n", encoding="utf-8")
        text.write_text("one\ntwo\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="line 2"):
            ingest_corpus(meta, text, labels=["x", "y"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ingest_corpus(tmp_path / "nope.meta", tmp_path / "nope.txt")


def test_check_stats_flags_mismatches():
    stats = CorpusStats(docs=10, train=7, test=3, vocab_size=50, classes=2,
                        avg_length=20.0, avg_sentences=1.2)
    targets = CorpusTargets(docs=10, train=7, test=3, words=60, classes=2,
                            avg_length=20.3, avg_sentences=1.19)
    checks = {c.name: c.ok for c in check_stats(stats, targets)}
    assert checks["docs"] and checks["avg_length"] and checks["vocab_size"]
    bad = check_stats(stats.model_copy(update={"avg_length": 25.0}), targets)
    assert not {c.name: c.ok for c in bad}["avg_length"]
    assert "MISMATCH" in stats_report(stats, bad)
