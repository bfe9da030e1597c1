"""
The three-level hierarchical GAT classifier.

Word level: one graph per sentence over its tokens (embeddings from M1),
read out to one vector r_i per sentence, averaged into R_w.
Sentence level: one graph per sample over its sentences, node features r_i,
one GAT layer (W_s, b), averaged into R_s.
Document level: one graph per sample over all tokens (embeddings from M2),
a GAT stack, averaged into R_d.
Each R_t is projected to C classes and log-softmaxed; the three
log-probability vectors are fused with sentence-count-driven weights.
Any level can swap its GAT layers for GCN layers (`layer_type`).
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from hiegnn.core.exceptions import DimensionError, InvalidInputError
from hiegnn.nn import tensor as T
from hiegnn.nn.gat import GatLayer, GatStack, segment_readout
from hiegnn.nn.gcn import GcnLayer
from hiegnn.nn.parameters import Parameter, ParameterRegistry, glorot_uniform, uniform
from hiegnn.nn.tensor import Tensor
from hiegnn.schemas.config import HieGnnConfig, LambdaPolicy
from hiegnn.schemas.corpus import DocumentRecord
from hiegnn.schemas.model import LambdaWeights
from hiegnn.services.graph_builder import LevelGraph, SampleGraphs, batch_graphs, build_sample_graphs

logger = logging.getLogger(__name__)

LEVELS = ("d", "s", "w")

SentenceLayer = Union[GatLayer, GcnLayer]


# ----------------------------------------------------------------------
# Level weights
# ----------------------------------------------------------------------

def compute_lambda(x_s: float) -> LambdaWeights:
    """
    λ_d = 1 / (ln x_s + 1), λ_s = 2/3 (1 - λ_d), λ_w = 1/3 (1 - λ_d).

    More sentences shift weight from the document level towards the
    sentence and word levels.
    """
    if not x_s >= 1:
        raise InvalidInputError(f"sentence count must be >= 1, got {x_s}")
    lambda_d = 1.0 / (math.log(x_s) + 1.0)
    lambda_w = (1.0 - lambda_d) / 3.0
    return LambdaWeights(lambda_d=lambda_d, lambda_s=2.0 * lambda_w, lambda_w=lambda_w,
                         source_xs=float(x_s))


def lambda_matrix(sentence_counts: Sequence[float]) -> np.ndarray:
    """compute_lambda for many sentence counts: rows of (λ_d, λ_s, λ_w)."""
    counts = np.asarray(sentence_counts, dtype=np.float64)
    if counts.size == 0 or np.any(counts < 1):
        raise InvalidInputError("sentence counts must all be >= 1")
    lambda_d = 1.0 / (np.log(counts) + 1.0)
    lambda_w = (1.0 - lambda_d) / 3.0
    return np.stack([lambda_d, 2.0 * lambda_w, lambda_w], axis=1)


def resolve_lambdas(sentence_counts: Sequence[int], policy: LambdaPolicy = "per_sample",
                    fixed: Optional[Tuple[float, float, float]] = None,
                    active_levels: Optional[Sequence[str]] = None) -> np.ndarray:
    """
    Level weights for a batch as a [B × 3] array ordered (d, s, w).

    `fixed` gives every sample the same triple. `active_levels` zeroes the
    other levels and renormalizes the survivors; when only s and w survive
    their fixed 2:1 ratio is used, which stays defined at x_s = 1.
    """
    counts = np.asarray(sentence_counts, dtype=np.float64)
    if fixed is not None:
        return np.tile(np.asarray(fixed, dtype=np.float64), (counts.shape[0], 1))
    if policy == "batch_mean":
        weights = np.tile(lambda_matrix([counts.mean()]), (counts.shape[0], 1))
    elif policy == "per_sample":
        weights = lambda_matrix(counts)
    else:
        raise InvalidInputError(f"unknown lambda policy {policy!r}")
    if active_levels is None or set(active_levels) == set(LEVELS):
        return weights

    mask = np.array([level in active_levels for level in LEVELS], dtype=np.float64)
    if mask[0] == 0 and mask[1] and mask[2]:
        return np.tile(np.array([0.0, 2.0 / 3.0, 1.0 / 3.0]), (counts.shape[0], 1))
    weights = weights * mask
    totals = weights.sum(axis=1, keepdims=True)
    if np.any(totals == 0):
        # A single surviving level with zero weight at x_s = 1: give it everything
        weights = np.where(totals == 0, mask / mask.sum(), weights)
        totals = weights.sum(axis=1, keepdims=True)
    return weights / totals


# ----------------------------------------------------------------------
# Model pieces
# ----------------------------------------------------------------------

@dataclass
class EmbeddingTable:
    """Trainable [N × n] word embedding matrix."""

    matrix: Parameter
    role: Literal["M1_word_level", "M2_doc_level"]

    @property
    def vocab_size(self) -> int:
        return self.matrix.shape[0]

    def lookup(self, token_ids: np.ndarray) -> Tensor:
        return T.gather_rows(self.matrix, token_ids)


@dataclass
class LevelOutputs:
    """Per-level log-probabilities [B × C]; a level skipped in the forward pass is None."""

    R_d: Optional[Tensor]
    R_s: Optional[Tensor]
    R_w: Optional[Tensor]

    def get(self, level: str) -> Optional[Tensor]:
        return {"d": self.R_d, "s": self.R_s, "w": self.R_w}[level]


@dataclass
class _Dropout:
    rate: float = 0.0
    training: bool = False
    rng: Optional[np.random.Generator] = None


def word_level_forward(samples: Sequence[SampleGraphs], M1: EmbeddingTable, word_gat: GatStack,
                       readout_mode: str = "mean", dropout: Optional[_Dropout] = None
                       ) -> Tuple[Tensor, Tensor]:
    """
    Word-level pass over every sentence of every sample.

    Returns:
        (R_w [B × n], r [total sentences × n]) where r rows follow sample
        order, then sentence order
    """
    dropout = dropout or _Dropout()
    batch = batch_graphs([graph for sample in samples for graph in sample.word_graphs])
    h = word_gat(M1.lookup(batch.node_refs), batch, dropout.rate, dropout.training, dropout.rng)
    r = segment_readout(h, batch.graph_index, batch.num_graphs, readout_mode)
    owner = np.repeat(np.arange(len(samples)), [s.sentence_count for s in samples])
    return T.segment_mean(r, owner, len(samples)), r


def sen_level_forward(r_vectors: Tensor, sen_graphs: Sequence[LevelGraph], sen_gat: SentenceLayer,
                      dropout: Optional[_Dropout] = None) -> Tensor:
    """Sentence-level GAT over the r_i of each sample, averaged per sample: [B × n]."""
    dropout = dropout or _Dropout()
    batch = batch_graphs(list(sen_graphs))
    if r_vectors.shape[0] != batch.num_nodes:
        raise DimensionError(
            f"{r_vectors.shape[0]} sentence vectors for sentence graphs with {batch.num_nodes} nodes"
        )
    s = sen_gat(r_vectors, batch, "elu", dropout.rate, dropout.training, dropout.rng)
    return T.segment_mean(s, batch.graph_index, batch.num_graphs)


def doc_level_forward(doc_graphs: Sequence[LevelGraph], M2: EmbeddingTable, doc_gat: GatStack,
                      dropout: Optional[_Dropout] = None) -> Tensor:
    """Document-level GAT stack over all tokens, averaged per sample: [B × n]."""
    dropout = dropout or _Dropout()
    batch = batch_graphs(list(doc_graphs))
    h = doc_gat(M2.lookup(batch.node_refs), batch, dropout.rate, dropout.training, dropout.rng)
    return T.segment_mean(h, batch.graph_index, batch.num_graphs)


def fuse_and_predict(outputs: LevelOutputs, lambdas: np.ndarray) -> Tensor:
    """
    ŷ = λ_d R'_d + λ_s R'_s + λ_w R'_w, row by row.

    Skipped (None) levels contribute nothing.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.ndim == 1:
        lambdas = lambdas.reshape(1, 3)
    terms = []
    for column, level in enumerate(LEVELS):
        output = outputs.get(level)
        if output is None:
            continue
        if output.ndim == 1:
            output = T.reshape(output, (1, output.shape[0]))
        if output.shape[0] != lambdas.shape[0]:
            raise DimensionError(f"{lambdas.shape[0]} weight rows for {output.shape[0]} samples")
        terms.append(T.mul(output, lambdas[:, column:column + 1]))
    if not terms:
        raise InvalidInputError("no level output to fuse")
    return T.add_all(terms)


class HieGnnModel:
    """
    Embedding tables, per-level GAT stacks and per-level projections.

    The parameter registry holds exactly M1, M2, the word, sentence and
    document GAT parameters and the three projections.
    """

    def __init__(self, config: HieGnnConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        n, C = config.embedding_dim, config.num_classes
        slope = config.negative_slope

        self.registry = ParameterRegistry()
        self.M1 = EmbeddingTable(
            self.registry.create("M1", uniform(rng, (config.vocab_size, n), config.embedding_init)),
            "M1_word_level",
        )
        self.M2 = EmbeddingTable(
            self.registry.create("M2", uniform(rng, (config.vocab_size, n), config.embedding_init)),
            "M2_doc_level",
        )
        self.word_gat = GatStack(self.registry, "word_gat", n, n, config.word.layers,
                                 config.word.heads, slope, "none", rng, config.word.layer_type)
        self.sen_gat: SentenceLayer
        if config.sen.layer_type == "gcn":
            self.sen_gat = GcnLayer(self.registry, "sen_gcn", self.word_gat.output_width, n, rng,
                                    weight_name="W_s", bias_name="b")
        else:
            self.sen_gat = GatLayer(self.registry, "sen_gat", self.word_gat.output_width, n,
                                    config.sen.heads, "mean", slope, rng,
                                    weight_name="W_s", attention_name="b")
        self.doc_gat = GatStack(self.registry, "doc_gat", n, n, config.doc.layers,
                                config.doc.heads, slope, "none", rng, config.doc.layer_type)
        self.projections: Dict[str, Tuple[Parameter, Parameter]] = {}
        widths = {"d": self.doc_gat.output_width, "s": self.sen_gat.output_width,
                  "w": self.word_gat.output_width}
        for level in LEVELS:
            self.projections[level] = (
                self.registry.create(f"proj_{level}.weight", glorot_uniform(rng, (widths[level], C))),
                self.registry.create(f"proj_{level}.bias", np.zeros(C)),
            )

    @property
    def num_classes(self) -> int:
        return self.config.num_classes

    def build_graphs(self, records: Sequence[DocumentRecord]) -> List[SampleGraphs]:
        cfg = self.config
        return [
            build_sample_graphs(record, word_window=cfg.word.window, sen_window=cfg.sen.window,
                                doc_window=cfg.doc.window)
            for record in records
        ]

    def project(self, level: str, pooled: Tensor) -> Tensor:
        """Linear map to C classes followed by log-softmax: [B × C]."""
        weight, bias = self.projections[level]
        return T.log_softmax(T.add(T.matmul(pooled, weight), bias), axis=-1)

    def level_outputs(self, samples: Sequence[SampleGraphs], needed: Sequence[str] = LEVELS,
                      training: bool = False, rng: Optional[np.random.Generator] = None
                      ) -> LevelOutputs:
        """Run the requested levels; unrequested ones are None."""
        if not samples:
            raise InvalidInputError("empty batch")
        drop = _Dropout(self.config.dropout if training else 0.0, training, rng)
        R_d = R_s = R_w = None
        if "d" in needed:
            pooled = doc_level_forward([s.doc_graph for s in samples], self.M2, self.doc_gat, drop)
            R_d = self.project("d", pooled)
        if "w" in needed or "s" in needed:
            pooled_w, r = word_level_forward(samples, self.M1, self.word_gat,
                                             self.config.readout, drop)
            if "w" in needed:
                R_w = self.project("w", pooled_w)
            if "s" in needed:
                pooled_s = sen_level_forward(r, [s.sen_graph for s in samples], self.sen_gat, drop)
                R_s = self.project("s", pooled_s)
        return LevelOutputs(R_d=R_d, R_s=R_s, R_w=R_w)

    def lambdas_for(self, samples: Sequence[SampleGraphs],
                    fixed: Optional[Tuple[float, float, float]] = None,
                    active_levels: Optional[Sequence[str]] = None) -> np.ndarray:
        counts = [sample.sentence_count for sample in samples]
        return resolve_lambdas(counts, self.config.lambda_policy, fixed, active_levels)

    def forward(self, samples: Sequence[SampleGraphs], training: bool = False,
                rng: Optional[np.random.Generator] = None,
                lambdas: Optional[np.ndarray] = None) -> Tuple[Tensor, LevelOutputs, np.ndarray]:
        """
        Fused log-probabilities for a batch.

        Levels whose weight is zero for every sample of the batch are not
        computed.

        Returns:
            (ŷ [B × C], per-level outputs, λ [B × 3])
        """
        if lambdas is None:
            lambdas = self.lambdas_for(samples)
        needed = [level for column, level in enumerate(LEVELS) if np.any(lambdas[:, column] != 0)]
        outputs = self.level_outputs(samples, needed, training, rng)
        return fuse_and_predict(outputs, lambdas), outputs, lambdas

    def predict(self, samples: Sequence[SampleGraphs], lambdas: Optional[np.ndarray] = None) -> np.ndarray:
        """Argmax class per sample, dropout disabled."""
        log_probs, _, _ = self.forward(samples, training=False, lambdas=lambdas)
        return np.argmax(log_probs.data, axis=1)
