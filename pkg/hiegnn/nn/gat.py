"""
Graph-attention layers and graph readouts.

For every head, node features are projected (z = h W), every edge (j → i)
is scored with LeakyReLU(a · [z_i || z_j]), scores are normalized with a
softmax over the in-neighbourhood of i, and i receives the attention-weighted
sum of its neighbours' z_j.
"""

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Protocol, Union

import numpy as np

from hiegnn.core.exceptions import DimensionError, InvalidInputError
from hiegnn.nn import tensor as T
from hiegnn.nn.gcn import GcnLayer
from hiegnn.nn.parameters import Parameter, ParameterRegistry, glorot_uniform
from hiegnn.nn.tensor import Tensor

logger = logging.getLogger(__name__)

HeadMerge = Literal["concat", "mean"]
Activation = Literal["elu", "none"]
ReadoutMode = Literal["mean", "max", "sum"]
LayerType = Literal["gat", "gcn"]


class EdgeIndexed(Protocol):
    """Anything with a node count and directed src → dst edge arrays."""

    src: np.ndarray
    dst: np.ndarray

    @property
    def num_nodes(self) -> int: ...


@dataclass
class GatLayerParams:
    """Per-head projection W [d_in × d_out] and attention vector a [2·d_out]."""

    weights: List[Parameter]
    attention: List[Parameter]
    head_merge: HeadMerge = "mean"
    negative_slope: float = 0.2

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.attention):
            raise InvalidInputError("every head needs one W and one attention vector")
        shapes = {w.shape for w in self.weights}
        if len(shapes) != 1:
            raise DimensionError(f"heads disagree on W shape: {sorted(shapes)}")
        d_out = self.d_out
        for a in self.attention:
            if a.shape != (2 * d_out,):
                raise DimensionError(f"attention vector shape {a.shape}, expected {(2 * d_out,)}")

    @property
    def num_heads(self) -> int:
        return len(self.weights)

    @property
    def d_in(self) -> int:
        return self.weights[0].shape[0]

    @property
    def d_out(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_width(self) -> int:
        return self.num_heads * self.d_out if self.head_merge == "concat" else self.d_out


def attention_coefficients(z: Tensor, graph: EdgeIndexed, attention: Tensor,
                           negative_slope: float) -> Tensor:
    """α for every edge of `graph`, normalized over each destination's in-edges."""
    d_out = z.shape[1]
    a_dst = T.reshape(T.gather_rows(attention, np.arange(d_out)), (d_out, 1))
    a_src = T.reshape(T.gather_rows(attention, np.arange(d_out, 2 * d_out)), (d_out, 1))
    score_dst = T.reshape(T.matmul(z, a_dst), (graph.num_nodes,))
    score_src = T.reshape(T.matmul(z, a_src), (graph.num_nodes,))
    scores = T.add(T.gather_rows(score_dst, graph.dst), T.gather_rows(score_src, graph.src))
    return T.softmax_over_segments(T.leaky_relu(scores, negative_slope), graph.dst, graph.num_nodes)


def gat_forward(features: Tensor, graph: EdgeIndexed, params: GatLayerParams,
                activation: Activation = "elu") -> Tensor:
    """
    One graph-attention layer.

    Args:
        features: node features [V × d_in]
        graph: edges with self-loops so every node has an in-edge
        params: per-head W and attention vectors
        activation: σ applied to the aggregated messages

    Returns:
        Tensor: [V × heads·d_out] when heads are concatenated, else [V × d_out]
    """
    if features.ndim != 2 or features.shape[0] != graph.num_nodes:
        raise DimensionError(
            f"features of shape {features.shape} do not match a graph of {graph.num_nodes} nodes"
        )
    if features.shape[1] != params.d_in:
        raise DimensionError(f"features have width {features.shape[1]}, layer expects {params.d_in}")

    heads = []
    for weight, attention in zip(params.weights, params.attention):
        z = T.matmul(features, weight)
        alpha = attention_coefficients(z, graph, attention, params.negative_slope)
        messages = T.mul(T.reshape(alpha, (alpha.shape[0], 1)), T.gather_rows(z, graph.src))
        aggregated = T.segment_sum(messages, graph.dst, graph.num_nodes)
        heads.append(T.elu(aggregated) if activation == "elu" else aggregated)

    if len(heads) == 1:
        return heads[0]
    if params.head_merge == "concat":
        return T.concat(heads, axis=1)
    return T.mul(T.add_all(heads), 1.0 / len(heads))


class GatLayer:
    """A registered GAT layer with optional input dropout."""

    def __init__(self, registry: ParameterRegistry, name: str, d_in: int, d_out: int,
                 num_heads: int = 1, head_merge: HeadMerge = "mean", negative_slope: float = 0.2,
                 rng: Optional[np.random.Generator] = None,
                 weight_name: str = "W", attention_name: str = "a"):
        if rng is None:
            raise InvalidInputError(f"layer {name!r} needs a random generator for its initial weights")
        self.name = name
        self.params = GatLayerParams(
            weights=[registry.create(f"{name}.{weight_name}{h}", glorot_uniform(rng, (d_in, d_out)))
                     for h in range(num_heads)],
            attention=[registry.create(f"{name}.{attention_name}{h}", glorot_uniform(rng, (2 * d_out,)))
                       for h in range(num_heads)],
            head_merge=head_merge,
            negative_slope=negative_slope,
        )

    @property
    def output_width(self) -> int:
        return self.params.output_width

    def __call__(self, features: Tensor, graph: EdgeIndexed, activation: Activation = "elu",
                 dropout_rate: float = 0.0, training: bool = False,
                 rng: Optional[np.random.Generator] = None) -> Tensor:
        features = T.dropout(features, dropout_rate, training, rng)
        return gat_forward(features, graph, self.params, activation)


class GatStack:
    """
    Stacked graph layers: hidden layers apply ELU, the last one applies
    `final_activation`. GAT hidden layers concatenate heads and the last
    averages them; GCN layers have no heads.
    """

    def __init__(self, registry: ParameterRegistry, name: str, d_in: int, d_hidden: int,
                 num_layers: int = 1, num_heads: int = 1, negative_slope: float = 0.2,
                 final_activation: Activation = "none",
                 rng: Optional[np.random.Generator] = None, layer_type: LayerType = "gat"):
        if num_layers < 1 or num_heads < 1:
            raise InvalidInputError("a graph stack needs at least one layer and one head")
        if layer_type not in ("gat", "gcn"):
            raise InvalidInputError(f"unknown layer type {layer_type!r}")
        self.final_activation = final_activation
        self.layers: List[Union[GatLayer, GcnLayer]] = []
        width = d_in
        for index in range(num_layers):
            last = index == num_layers - 1
            if layer_type == "gcn":
                layer = GcnLayer(registry, f"{name}.{index}", width, d_hidden, rng)
            else:
                layer = GatLayer(registry, f"{name}.{index}", width, d_hidden, num_heads,
                                 "mean" if last else "concat", negative_slope, rng)
            self.layers.append(layer)
            width = layer.output_width

    @property
    def output_width(self) -> int:
        return self.layers[-1].output_width

    def __call__(self, features: Tensor, graph: EdgeIndexed, dropout_rate: float = 0.0,
                 training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
        h = features
        for index, layer in enumerate(self.layers):
            last = index == len(self.layers) - 1
            h = layer(h, graph, self.final_activation if last else "elu",
                      dropout_rate, training, rng)
        return h


def segment_readout(node_features: Tensor, graph_index: np.ndarray, num_graphs: int,
                    mode: ReadoutMode = "mean") -> Tensor:
    """Readout of every graph in a disjoint union: [num_graphs × d]."""
    if mode == "mean":
        return T.segment_mean(node_features, graph_index, num_graphs)
    if mode == "max":
        return T.segment_max(node_features, graph_index, num_graphs)
    if mode == "sum":
        return T.segment_sum(node_features, graph_index, num_graphs)
    raise InvalidInputError(f"unknown readout mode {mode!r}")


def readout(node_features: Tensor, mode: ReadoutMode = "mean") -> Tensor:
    """Column-wise mean, max or sum over the nodes of one graph."""
    if node_features.ndim != 2 or node_features.shape[0] < 1:
        raise InvalidInputError(f"readout needs at least one node, got shape {node_features.shape}")
    pooled = segment_readout(node_features, np.zeros(node_features.shape[0], dtype=np.int64), 1, mode)
    return T.reshape(pooled, (node_features.shape[1],))
