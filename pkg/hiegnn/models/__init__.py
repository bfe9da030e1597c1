"""SQLAlchemy models for the corpus cache and the run registry."""

from hiegnn.models.corpus import CachedDocument, CorpusInfo, LabelEntry, VocabularyEntry
from hiegnn.models.runs import TrainingRun

__all__ = ["CachedDocument", "CorpusInfo", "LabelEntry", "VocabularyEntry", "TrainingRun"]
