"""
Word-, sentence- and document-level graph construction.

All three levels use the same n-gram window rule: nodes i and j are joined
(in both directions) when |i - j| <= window, self-loops included.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from hiegnn.core.exceptions import InvalidInputError
from hiegnn.schemas.corpus import DocumentRecord

Level = Literal["word", "sen", "doc"]


@dataclass(frozen=True)
class LevelGraph:
    """One graph at one semantic level; edges are directed (src, dst) pairs."""

    level: Level
    node_refs: np.ndarray
    src: np.ndarray
    dst: np.ndarray

    @property
    def num_nodes(self) -> int:
        return int(self.node_refs.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def adjacency(self) -> np.ndarray:
        """Dense 0/1 matrix with A[i, j] = 1 for every edge (i, j)."""
        adj = np.zeros((self.num_nodes, self.num_nodes), dtype=np.int64)
        adj[self.src, self.dst] = 1
        return adj


@dataclass(frozen=True)
class SampleGraphs:
    """The three level graphs of one sample."""

    word_graphs: List[LevelGraph]
    sen_graph: LevelGraph
    doc_graph: LevelGraph
    label_id: int = -1
    doc_id: str = ""

    @property
    def sentence_count(self) -> int:
        return len(self.word_graphs)


@dataclass(frozen=True)
class GraphBatch:
    """Disjoint union of several graphs, node indices offset per member."""

    level: Level
    node_refs: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    graph_index: np.ndarray
    num_graphs: int
    offsets: np.ndarray = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return int(self.node_refs.shape[0])


def window_edges(num_nodes: int, window: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Directed edges (i, j) for all |i - j| <= window, including i == j.

    Edges are ordered by source, then destination.
    """
    if num_nodes < 1:
        raise InvalidInputError(f"a graph needs at least one node, got {num_nodes}")
    if window < 1:
        raise InvalidInputError(f"window must be >= 1, got {window}")
    src, dst = [], []
    for i in range(num_nodes):
        lo, hi = max(0, i - window), min(num_nodes - 1, i + window)
        neighbours = np.arange(lo, hi + 1)
        src.append(np.full(neighbours.shape[0], i))
        dst.append(neighbours)
    return np.concatenate(src).astype(np.int64), np.concatenate(dst).astype(np.int64)


def build_window_graph(num_nodes: int, window: int, level: Level = "doc",
                       node_refs: Optional[Sequence[int]] = None) -> LevelGraph:
    """Graph over `num_nodes` positional nodes joined by the window rule."""
    src, dst = window_edges(num_nodes, window)
    refs = np.arange(num_nodes) if node_refs is None else np.asarray(node_refs, dtype=np.int64)
    if refs.shape[0] != num_nodes:
        raise InvalidInputError(f"{refs.shape[0]} node refs for {num_nodes} nodes")
    return LevelGraph(level=level, node_refs=refs.astype(np.int64), src=src, dst=dst)


def build_sample_graphs(doc: DocumentRecord, window: int = 2, *,
                        word_window: Optional[int] = None, sen_window: Optional[int] = None,
                        doc_window: Optional[int] = None) -> SampleGraphs:
    """
    Build the word graphs (one per sentence), the sentence graph and the
    document graph of one sample.

    `window` applies to every level unless a per-level window is given.
    """
    tokens = np.asarray(doc.tokens, dtype=np.int64)
    if tokens.shape[0] < 1 or not doc.sentence_spans:
        raise InvalidInputError(f"document {doc.doc_id!r} has no tokens or sentences")

    word_graphs = [
        build_window_graph(end - start, word_window or window, "word", tokens[start:end])
        for start, end in doc.sentence_spans
    ]
    k = len(word_graphs)
    sen_graph = build_window_graph(k, sen_window or window, "sen", np.arange(k))
    doc_graph = build_window_graph(tokens.shape[0], doc_window or window, "doc", tokens)
    return SampleGraphs(word_graphs=word_graphs, sen_graph=sen_graph, doc_graph=doc_graph,
                        label_id=doc.label_id, doc_id=doc.doc_id)


def batch_graphs(graphs: Sequence[LevelGraph]) -> GraphBatch:
    """Disjoint union of `graphs` in input order."""
    if not graphs:
        raise InvalidInputError("cannot batch an empty list of graphs")
    sizes = np.array([g.num_nodes for g in graphs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    return GraphBatch(
        level=graphs[0].level,
        node_refs=np.concatenate([g.node_refs for g in graphs]),
        src=np.concatenate([g.src + off for g, off in zip(graphs, offsets)]),
        dst=np.concatenate([g.dst + off for g, off in zip(graphs, offsets)]),
        graph_index=np.repeat(np.arange(len(graphs)), sizes),
        num_graphs=len(graphs),
        offsets=offsets,
    )


def dump_graphs(sample: SampleGraphs) -> str:
    """Edge-list text, one `level src dst` line per directed edge."""
    lines = []
    for i, graph in enumerate(sample.word_graphs):
        lines.extend(f"word:{i} {s} {d}" for s, d in graph.edges)
    lines.extend(f"sen {s} {d}" for s, d in sample.sen_graph.edges)
    lines.extend(f"doc {s} {d}" for s, d in sample.doc_graph.edges)
    return "\n".join(lines) + "\n"
