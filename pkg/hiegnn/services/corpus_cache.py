"""
SQLite cache of an ingested corpus.

The cache is written to a temporary file and moved into place only after
the transaction commits, so a failed ingest never leaves a partial cache.
"""

import json
import logging
import os
from pathlib import Path

from hiegnn.core.database import dispose_engine, session_scope, sqlite_url
from hiegnn.core.exceptions import DataError
from hiegnn.models.corpus import CachedDocument, CorpusInfo, LabelEntry, VocabularyEntry
from hiegnn.schemas.corpus import Corpus, CorpusStats, DocumentRecord, StatsCheck, Vocabulary

logger = logging.getLogger(__name__)

CACHE_FILENAME = "corpus.db"


def _encode_spans(spans) -> str:
    return " ".join(f"{start}:{end}" for start, end in spans)


def _decode_spans(text: str):
    return [tuple(int(x) for x in pair.split(":")) for pair in text.split()]


def save_corpus(path: Path, corpus: Corpus) -> Path:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    if tmp.exists():
        tmp.unlink()
    url = sqlite_url(tmp)
    try:
        with session_scope(url) as db:
            db.add_all(VocabularyEntry(token_id=i, token=token)
                       for i, token in enumerate(corpus.vocabulary.tokens))
            db.add_all(LabelEntry(label_id=i, name=name) for i, name in enumerate(corpus.labels))
            db.add_all(
                CachedDocument(position=i, doc_id=r.doc_id, split=r.split, label_id=r.label_id,
                               tokens=" ".join(map(str, r.tokens)), spans=_encode_spans(r.sentence_spans))
                for i, r in enumerate(corpus.records)
            )
            db.add(CorpusInfo(key="name", text_value=corpus.name))
            db.add(CorpusInfo(key="stats", text_value=corpus.stats.model_dump_json()))
            db.add(CorpusInfo(key="checks",
                              text_value=json.dumps([c.model_dump() for c in corpus.checks])))
    except Exception:
        dispose_engine(url)
        tmp.unlink(missing_ok=True)
        raise
    dispose_engine(url)
    os.replace(tmp, path)
    logger.info(f"Cached {len(corpus.records)} documents in {path}")
    return path


def load_corpus(path: Path) -> Corpus:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"corpus cache {path} not found; run `ingest` first")
    url = sqlite_url(path)
    try:
        with session_scope(url) as db:
            tokens = [e.token for e in db.query(VocabularyEntry).order_by(VocabularyEntry.token_id)]
            labels = [e.name for e in db.query(LabelEntry).order_by(LabelEntry.label_id)]
            records = [
                DocumentRecord(doc_id=d.doc_id, split=d.split, label_id=d.label_id,
                               tokens=[int(t) for t in d.tokens.split()],
                               sentence_spans=_decode_spans(d.spans))
                for d in db.query(CachedDocument).order_by(CachedDocument.position)
            ]
            info = {row.key: row.text_value for row in db.query(CorpusInfo)}
    finally:
        dispose_engine(url)
    if "stats" not in info:
        raise DataError(f"corpus cache {path} is incomplete")
    return Corpus(
        name=info.get("name"),
        records=records,
        vocabulary=Vocabulary(tokens=tokens),
        labels=labels,
        stats=CorpusStats.model_validate_json(info["stats"]),
        checks=[StatsCheck(**c) for c in json.loads(info.get("checks") or "[]")],
    )
