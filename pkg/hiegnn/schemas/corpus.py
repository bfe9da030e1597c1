"""
Corpus schemas: documents, vocabulary and corpus statistics.
"""

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator

UNK_TOKEN = "<unk>"
UNK_ID = 0


class BaseSchema(BaseModel):
    """Base schema for corpus objects."""
    model_config = ConfigDict(from_attributes=True)


class DocumentRecord(BaseSchema):
    """One labeled sample with its token and sentence segmentation."""

    doc_id: str
    split: Literal["train", "test"]
    label_id: int
    tokens: List[int]
    sentence_spans: List[Tuple[int, int]]

    @field_validator("label_id")
    @classmethod
    def check_label(cls, v: int) -> int:
        if v < 0:
            raise ValueError("label_id must be non-negative")
        return v

    @model_validator(mode="after")
    def check_spans(self) -> "DocumentRecord":
        """Spans must be non-empty, contiguous and cover every token."""
        if not self.sentence_spans:
            raise ValueError("a document needs at least one sentence")
        cursor = 0
        for start, end in self.sentence_spans:
            if start != cursor or end <= start:
                raise ValueError(f"sentence spans {self.sentence_spans} do not partition the tokens")
            cursor = end
        if cursor != len(self.tokens):
            raise ValueError(f"sentence spans cover {cursor} of {len(self.tokens)} tokens")
        return self

    @property
    def sentence_count(self) -> int:
        return len(self.sentence_spans)

    def sentences(self) -> List[List[int]]:
        return [self.tokens[start:end] for start, end in self.sentence_spans]


class Vocabulary(BaseSchema):
    """Token ↔ id bijection; id 0 is the UNK token."""

    tokens: List[str]
    _index: Dict[str, int] = PrivateAttr(default_factory=dict)

    @field_validator("tokens")
    @classmethod
    def check_tokens(cls, v: List[str]) -> List[str]:
        if not v or v[0] != UNK_TOKEN:
            raise ValueError(f"vocabulary must start with {UNK_TOKEN!r}")
        if len(set(v)) != len(v):
            raise ValueError("vocabulary tokens must be unique")
        return v

    def model_post_init(self, __context) -> None:
        self._index = {token: i for i, token in enumerate(self.tokens)}

    @classmethod
    def from_tokens(cls, words: List[str]) -> "Vocabulary":
        return cls(tokens=[UNK_TOKEN] + list(words))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def encode(self, tokens: List[str]) -> List[int]:
        return [self._index.get(token, UNK_ID) for token in tokens]

    def decode(self, ids: List[int]) -> List[str]:
        return [self.tokens[i] for i in ids]


class CorpusStats(BaseSchema):
    """Corpus-level counts, comparable with the published dataset table."""

    docs: int
    train: int
    test: int
    vocab_size: int
    classes: int
    avg_length: float
    avg_sentences: float
    dropped: int = 0
    unk_rate_test: float = 0.0

    @model_validator(mode="after")
    def check_counts(self) -> "CorpusStats":
        if self.docs != self.train + self.test:
            raise ValueError("doc count must equal train + test")
        if self.docs and (self.avg_length < 1 or self.avg_sentences < 1):
            raise ValueError("averages must be >= 1")
        return self


class StatsCheck(BaseSchema):
    """One comparison between an observed and a published statistic."""

    name: str
    observed: float
    expected: float
    ok: bool


class Corpus(BaseSchema):
    """Everything ingestion produces."""

    name: Optional[str] = None
    records: List[DocumentRecord]
    vocabulary: Vocabulary
    labels: List[str]
    stats: CorpusStats
    checks: List[StatsCheck] = []

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def split(self, name: str) -> List[DocumentRecord]:
        return [r for r in self.records if r.split == name]
