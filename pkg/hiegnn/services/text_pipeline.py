"""
Corpus ingestion: tokenization, sentence segmentation, vocabulary building
and validation against published dataset statistics.

Input layout (one record per line, aligned by line number):
    meta file:   doc_id<TAB>split<TAB>label
    corpus file: the document text
"""

import logging
import re
import string
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Tuple

from hiegnn.core.config import CorpusTargets, get_preset
from hiegnn.core.exceptions import ConfigError, CorpusFormatError, DataError
from hiegnn.schemas.corpus import (
    UNK_ID,
    Corpus,
    CorpusStats,
    DocumentRecord,
    StatsCheck,
    Vocabulary,
)

logger = logging.getLogger(__name__)

SplitMode = Literal["punct", "chunk"]

DEFAULT_CHUNK_SIZE = 12

_SENTENCE_BOUNDARY = re.compile(r"[.!?;]+")
_SPLIT_ALIASES = {"train": "train", "training": "train", "test": "test"}

# Relative tolerance on average length; counts must match exactly
AVG_LENGTH_TOLERANCE = 0.02


def tokenize(text: str) -> List[str]:
    """Lowercase, split on whitespace and strip punctuation from token edges."""
    tokens = (raw.strip(string.punctuation) for raw in text.lower().split())
    return [token for token in tokens if token]


def split_sentences(text: str, mode: SplitMode = "punct",
                    chunk_size: int = DEFAULT_CHUNK_SIZE) -> List[str]:
    """
    Split a document into sentence strings.

    `punct` cuts at terminal punctuation (. ! ? ;). `chunk` is for corpora
    whose punctuation was stripped upstream and cuts every `chunk_size`
    whitespace tokens. Text without a split point comes back whole.
    """
    if mode == "punct":
        pieces = [piece.strip() for piece in _SENTENCE_BOUNDARY.split(text)]
        sentences = [piece for piece in pieces if piece]
    elif mode == "chunk":
        if chunk_size < 1:
            raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
        words = text.split()
        sentences = [" ".join(words[i:i + chunk_size]) for i in range(0, len(words), chunk_size)]
    else:
        raise ConfigError(f"unknown sentence split mode {mode!r}")
    return sentences or ([text.strip()] if text.strip() else [])


def segment(text: str, mode: SplitMode = "punct",
            chunk_size: int = DEFAULT_CHUNK_SIZE) -> List[List[str]]:
    """Tokenized sentences of `text`; sentences that tokenize to nothing are dropped."""
    sentences = (tokenize(sentence) for sentence in split_sentences(text, mode, chunk_size))
    return [sentence for sentence in sentences if sentence]


def encode_document(doc_id: str, split: str, label_id: int, sentences: List[List[str]],
                    vocabulary: Vocabulary) -> DocumentRecord:
    """Turn tokenized sentences into a DocumentRecord with contiguous spans."""
    tokens: List[int] = []
    spans: List[Tuple[int, int]] = []
    for sentence in sentences:
        start = len(tokens)
        tokens.extend(vocabulary.encode(sentence))
        spans.append((start, len(tokens)))
    return DocumentRecord(doc_id=doc_id, split=split, label_id=label_id,
                          tokens=tokens, sentence_spans=spans)


def _read_lines(path: Path) -> List[str]:
    if not path.is_file():
        raise DataError(f"corpus file {path} not found")
    # Only \n (optionally preceded by \r) ends a line; form feeds and other
    # Unicode separators are document text
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return [line.rstrip("\r\n") for line in handle]


def _parse_meta(lines: List[str]) -> List[Tuple[str, str, str]]:
    rows = []
    for number, line in enumerate(lines, start=1):
        fields = line.split("\t")
        if len(fields) != 3:
            raise CorpusFormatError("metadata lines need exactly two TAB separators", line=number)
        doc_id, split, label = (field.strip() for field in fields)
        if split.lower() not in _SPLIT_ALIASES:
            raise CorpusFormatError(f"unknown split token {split!r}", line=number)
        rows.append((doc_id, _SPLIT_ALIASES[split.lower()], label))
    return rows


def build_vocabulary(train_sentences: Iterable[List[List[str]]]) -> Vocabulary:
    """Vocabulary over training tokens, ids by first appearance."""
    seen: Dict[str, None] = {}
    for sentences in train_sentences:
        for sentence in sentences:
            for token in sentence:
                seen.setdefault(token, None)
    return Vocabulary.from_tokens(list(seen))


def compute_stats(records: List[DocumentRecord], vocabulary: Vocabulary, num_classes: int,
                  dropped: int = 0) -> CorpusStats:
    train = sum(1 for r in records if r.split == "train")
    test_tokens = [t for r in records if r.split == "test" for t in r.tokens]
    docs = len(records)
    return CorpusStats(
        docs=docs,
        train=train,
        test=docs - train,
        vocab_size=vocabulary.size - 1,
        classes=num_classes,
        avg_length=sum(len(r.tokens) for r in records) / docs if docs else 0.0,
        avg_sentences=sum(r.sentence_count for r in records) / docs if docs else 0.0,
        dropped=dropped,
        unk_rate_test=(sum(1 for t in test_tokens if t == UNK_ID) / len(test_tokens)
                       if test_tokens else 0.0),
    )


def check_stats(stats: CorpusStats, targets: CorpusTargets) -> List[StatsCheck]:
    """Compare counts exactly and the average length within 2%."""
    checks = [
        StatsCheck(name=name, observed=observed, expected=expected, ok=observed == expected)
        for name, observed, expected in (
            ("docs", stats.docs, targets.docs),
            ("train", stats.train, targets.train),
            ("test", stats.test, targets.test),
            ("classes", stats.classes, targets.classes),
        )
    ]
    length_ok = abs(stats.avg_length - targets.avg_length) <= AVG_LENGTH_TOLERANCE * targets.avg_length
    checks.append(StatsCheck(name="avg_length", observed=stats.avg_length,
                             expected=targets.avg_length, ok=length_ok))
    # Informational: vocabulary and sentence counts depend on upstream cleaning
    checks.append(StatsCheck(name="vocab_size", observed=stats.vocab_size,
                             expected=targets.words, ok=True))
    checks.append(StatsCheck(name="avg_sentences", observed=stats.avg_sentences,
                             expected=targets.avg_sentences, ok=True))
    for check in checks:
        if not check.ok:
            logger.warning(f"Corpus statistic {check.name}: observed {check.observed}, "
                           f"published {check.expected}")
    return checks


def ingest_corpus(meta_path: Path, text_path: Path, *, mode: Optional[SplitMode] = None,
                  chunk_size: int = DEFAULT_CHUNK_SIZE, dataset: Optional[str] = None,
                  vocabulary: Optional[Vocabulary] = None,
                  labels: Optional[List[str]] = None) -> Corpus:
    """
    Read the two-file corpus layout into DocumentRecords.

    The vocabulary comes from the train split only; test-only tokens map to
    UNK. Documents that tokenize to nothing are dropped and counted. When
    `dataset` names a benchmark preset its split mode is the default and the
    resulting statistics are checked against the published ones.

    Passing `vocabulary` and `labels` (those of a trained checkpoint) encodes
    the documents with them instead of building new ones.

    Raises:
        CorpusFormatError: misaligned files, bad metadata lines, an empty
            corpus or a label missing from `labels`
    """
    meta_path, text_path = Path(meta_path), Path(text_path)
    preset = get_preset(dataset)
    mode = mode or (preset.split_mode if preset else "punct")

    meta = _parse_meta(_read_lines(meta_path))
    texts = _read_lines(text_path)
    if not texts:
        raise CorpusFormatError(f"corpus file {text_path} is empty", line=0)
    if len(meta) != len(texts):
        raise CorpusFormatError(
            f"{meta_path.name} has {len(meta)} lines but {text_path.name} has {len(texts)}"
        )

    if labels is None:
        labels = sorted({label for _, _, label in meta})
    label_ids = {label: i for i, label in enumerate(labels)}

    segmented = []
    dropped = 0
    for number, ((doc_id, split, label), text) in enumerate(zip(meta, texts), start=1):
        if label not in label_ids:
            raise CorpusFormatError(f"label {label!r} is not one of {labels}", line=number)
        sentences = segment(text, mode, chunk_size)
        if not sentences:
            logger.warning(f"Dropping document {doc_id!r}: empty after cleaning")
            dropped += 1
            continue
        segmented.append((doc_id, split, label_ids[label], sentences))

    if vocabulary is None:
        vocabulary = build_vocabulary(s for _, split, _, s in segmented if split == "train")
    records = [encode_document(doc_id, split, label_id, sentences, vocabulary)
               for doc_id, split, label_id, sentences in segmented]

    stats = compute_stats(records, vocabulary, len(labels), dropped)
    checks = check_stats(stats, preset.targets) if preset else []
    logger.info(f"Ingested {stats.docs} documents ({stats.train} train / {stats.test} test), "
                f"{stats.vocab_size} words, {stats.classes} classes, {dropped} dropped")
    return Corpus(name=preset.name if preset else dataset, records=records,
                  vocabulary=vocabulary, labels=labels, stats=stats, checks=checks)


def stats_report(stats: CorpusStats, checks: Optional[List[StatsCheck]] = None) -> str:
    """Flat key-value text block."""
    lines = [f"{key}: {value:.2f}" if isinstance(value, float) else f"{key}: {value}"
             for key, value in stats.model_dump().items()]
    for check in checks or []:
        status = "ok" if check.ok else "MISMATCH"
        lines.append(f"check.{check.name}: {check.observed:g} vs {check.expected:g} {status}")
    return "\n".join(lines) + "\n"
