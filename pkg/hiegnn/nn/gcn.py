"""
Graph-convolution layer on the same edge lists as the GAT layers.

h' = σ(D^-1/2 A D^-1/2 h W + b), where A holds the edges (self-loops
included) and D their in-degrees.
"""

from typing import TYPE_CHECKING, Literal, Optional

import numpy as np

from hiegnn.core.exceptions import DimensionError, InvalidInputError
from hiegnn.nn import tensor as T
from hiegnn.nn.parameters import Parameter, ParameterRegistry, glorot_uniform
from hiegnn.nn.tensor import Tensor

if TYPE_CHECKING:
    from hiegnn.nn.gat import EdgeIndexed


def edge_norms(graph: "EdgeIndexed") -> np.ndarray:
    """1 / sqrt(deg(src) · deg(dst)) per edge, degrees counted over in-edges."""
    degree = np.bincount(graph.dst, minlength=graph.num_nodes).astype(np.float64)
    degree = np.maximum(degree, 1.0)
    return 1.0 / np.sqrt(degree[graph.src] * degree[graph.dst])


def gcn_forward(features: Tensor, graph: "EdgeIndexed", weight: Parameter, bias: Parameter,
                activation: Literal["elu", "none"] = "elu") -> Tensor:
    if features.ndim != 2 or features.shape[0] != graph.num_nodes:
        raise DimensionError(
            f"features of shape {features.shape} do not match a graph of {graph.num_nodes} nodes"
        )
    if features.shape[1] != weight.shape[0]:
        raise DimensionError(f"features have width {features.shape[1]}, layer expects {weight.shape[0]}")
    z = T.matmul(features, weight)
    norms = edge_norms(graph).reshape(-1, 1)
    messages = T.mul(T.gather_rows(z, graph.src), norms)
    aggregated = T.add(T.segment_sum(messages, graph.dst, graph.num_nodes), bias)
    return T.elu(aggregated) if activation == "elu" else aggregated


class GcnLayer:
    """A registered GCN layer; call signature matches GatLayer."""

    def __init__(self, registry: ParameterRegistry, name: str, d_in: int, d_out: int,
                 rng: Optional[np.random.Generator] = None,
                 weight_name: str = "W", bias_name: str = "bias"):
        if rng is None:
            raise InvalidInputError(f"layer {name!r} needs a random generator for its initial weights")
        self.name = name
        self.weight = registry.create(f"{name}.{weight_name}", glorot_uniform(rng, (d_in, d_out)))
        self.bias = registry.create(f"{name}.{bias_name}", np.zeros(d_out))

    @property
    def output_width(self) -> int:
        return self.weight.shape[1]

    def __call__(self, features: Tensor, graph: "EdgeIndexed", activation: Literal["elu", "none"] = "elu",
                 dropout_rate: float = 0.0, training: bool = False,
                 rng: Optional[np.random.Generator] = None) -> Tensor:
        features = T.dropout(features, dropout_rate, training, rng)
        return gcn_forward(features, graph, self.weight, self.bias, activation)
