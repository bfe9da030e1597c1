"""
Corpus cache tables: tokenized documents, vocabulary, labels and stats.
"""

from sqlalchemy import Column, Integer, String, Text

from hiegnn.core.database import Base


# ============================
# Documents
# ============================
class CachedDocument(Base):
    __tablename__ = "documents"

    position = Column(Integer, primary_key=True)
    doc_id = Column(String, nullable=False)
    split = Column(String(5), nullable=False)
    label_id = Column(Integer, nullable=False)
    # space-separated token ids
    tokens = Column(Text, nullable=False)
    # space-separated start:end pairs
    spans = Column(Text, nullable=False)


# ============================
# Vocabulary and labels
# ============================
class VocabularyEntry(Base):
    __tablename__ = "vocabulary"

    token_id = Column(Integer, primary_key=True)
    token = Column(String, nullable=False, unique=True)


class LabelEntry(Base):
    __tablename__ = "labels"

    label_id = Column(Integer, primary_key=True)
    name = Column(String, nullable=False, unique=True)


# ============================
# Corpus-level values
# ============================
class CorpusInfo(Base):
    __tablename__ = "corpus_info"

    key = Column(String, primary_key=True)
    text_value = Column(Text)
