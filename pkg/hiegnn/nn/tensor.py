"""
Dense float64 tensors with reverse-mode differentiation.

Each operation builds its output eagerly and records, on the output tensor,
its parents and a closure mapping the output gradient to parent gradients.
`backward` walks that graph in reverse topological order.
"""

from __future__ import annotations

import logging
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from hiegnn.core.exceptions import DimensionError, InvalidInputError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """
    Dense row-major array of 64-bit floats.

    Forward values are never mutated after construction; only `grad` is
    written, and only by `backward` or `zero_grad`.
    """

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        parents: Tuple["Tensor", ...] = (),
        backward_fn: Optional[BackwardFn] = None,
        op: str = "",
    ):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents = parents
        self._backward_fn = backward_fn
        self.op = op

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise InvalidInputError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        backward(self)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    __array_priority__ = 1000

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise InvalidInputError("division by a tensor is not supported")
        return mul(self, 1.0 / float(other))

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    """Wrap constants; tensors pass through untouched."""
    return value if isinstance(value, Tensor) else Tensor(value)


def tensor(data: ArrayLike, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def _result(data: np.ndarray, parents: Tuple[Tensor, ...], backward_fn: BackwardFn, op: str) -> Tensor:
    requires_grad = any(p.requires_grad for p in parents)
    if not requires_grad:
        return Tensor(data, op=op)
    return Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum out the axes numpy broadcasting added or stretched."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ----------------------------------------------------------------------
# Elementwise arithmetic
# ----------------------------------------------------------------------

def add(a: Union[Tensor, ArrayLike], b: Union[Tensor, ArrayLike]) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError as exc:
        raise DimensionError(f"cannot add shapes {a.shape} and {b.shape}") from exc

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(out, (a, b), backward_fn, "add")


def neg(a: Tensor) -> Tensor:
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


def add_all(tensors: Sequence[Tensor]) -> Tensor:
    """Left-to-right sum of same-shaped tensors."""
    if not tensors:
        raise InvalidInputError("add_all needs at least one tensor")
    total = as_tensor(tensors[0])
    for t in tensors[1:]:
        total = add(total, t)
    return total


def mul(a: Union[Tensor, ArrayLike], b: Union[Tensor, ArrayLike]) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError as exc:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}") from exc

    def backward_fn(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(out, (a, b), backward_fn, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a [m×k] and b [k×n]."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward_fn(g):
        return g @ b.data.T, a.data.T @ g

    return _result(a.data @ b.data, (a, b), backward_fn, "matmul")


# ----------------------------------------------------------------------
# Shape manipulation
# ----------------------------------------------------------------------

def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {a.shape} to {shape}") from exc
    return _result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise InvalidInputError("concat needs at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise DimensionError(f"cannot concatenate shapes {shapes}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward_fn(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(out, tensors, backward_fn, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise InvalidInputError("stack needs at least one tensor")
    try:
        out = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise DimensionError(f"cannot stack shapes {shapes}") from exc

    def backward_fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _result(out, tensors, backward_fn, "stack")


def gather_rows(a: Tensor, index: ArrayLike) -> Tensor:
    """Rows of `a` selected by `index`; repeated indices are allowed."""
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= a.shape[0]):
        raise DimensionError(f"row index out of range for shape {a.shape}")

    def backward_fn(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)

    return _result(a.data[index], (a,), backward_fn, "gather_rows")


# ----------------------------------------------------------------------
# Reductions
# ----------------------------------------------------------------------

def sum(a: Tensor, axis: Optional[int] = None) -> Tensor:  # noqa: A001
    out = a.data.sum(axis=axis)

    def backward_fn(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _result(out, (a,), backward_fn, "sum")


def mean(a: Tensor, axis: Optional[int] = None) -> Tensor:
    count = a.size if axis is None else a.shape[axis]
    if count == 0:
        raise InvalidInputError("mean of an empty tensor")
    return mul(sum(a, axis=axis), 1.0 / count)


def _check_segments(segments: np.ndarray, rows: int, num_segments: int) -> np.ndarray:
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape != (rows,):
        raise DimensionError(f"segment ids of shape {segments.shape} do not match {rows} rows")
    if rows == 0:
        raise InvalidInputError("segment operation over an empty input")
    if segments.min() < 0 or segments.max() >= num_segments:
        raise InvalidInputError(f"segment ids must lie in [0, {num_segments})")
    return segments


def segment_sum(a: Tensor, segments: ArrayLike, num_segments: int) -> Tensor:
    """out[s] = sum of rows i with segments[i] == s."""
    segments = _check_segments(segments, a.shape[0], num_segments)
    out = np.zeros((num_segments,) + a.shape[1:])
    np.add.at(out, segments, a.data)
    return _result(out, (a,), lambda g: (g[segments],), "segment_sum")


def segment_mean(a: Tensor, segments: ArrayLike, num_segments: int) -> Tensor:
    """
    Row mean per segment, computed as anchor + mean(row - anchor) with the
    segment's first row as anchor so identical rows come back unchanged.
    """
    segments = _check_segments(segments, a.shape[0], num_segments)
    counts = np.bincount(segments, minlength=num_segments).astype(np.float64)
    if np.any(counts == 0):
        raise InvalidInputError("every segment needs at least one row")
    first = np.full(num_segments, a.shape[0], dtype=np.int64)
    np.minimum.at(first, segments, np.arange(a.shape[0]))
    anchor = a.data[first]
    deviation = np.zeros_like(anchor)
    np.add.at(deviation, segments, a.data - anchor[segments])
    scale = counts.reshape((num_segments,) + (1,) * (a.ndim - 1))
    out = anchor + deviation / scale

    def backward_fn(g):
        return ((g / scale)[segments],)

    return _result(out, (a,), backward_fn, "segment_mean")


def segment_max(a: Tensor, segments: ArrayLike, num_segments: int) -> Tensor:
    """Column-wise maximum per segment; ties share the gradient equally."""
    segments = _check_segments(segments, a.shape[0], num_segments)
    out = np.full((num_segments,) + a.shape[1:], -np.inf)
    np.maximum.at(out, segments, a.data)
    if np.any(np.isneginf(out)):
        raise InvalidInputError("every segment needs at least one row")
    winners = (a.data == out[segments]).astype(np.float64)
    ties = np.zeros_like(out)
    np.add.at(ties, segments, winners)

    def backward_fn(g):
        return (winners * (g / ties)[segments],)

    return _result(out, (a,), backward_fn, "segment_max")


# ----------------------------------------------------------------------
# Nonlinearities
# ----------------------------------------------------------------------

def leaky_relu(a: Tensor, negative_slope: float = 0.2) -> Tensor:
    slope = np.where(a.data >= 0, 1.0, negative_slope)
    return _result(a.data * slope, (a,), lambda g: (g * slope,), "leaky_relu")


def elu(a: Tensor) -> Tensor:
    negative = np.minimum(a.data, 0.0)
    out = np.where(a.data >= 0, a.data, np.expm1(negative))
    slope = np.where(a.data >= 0, 1.0, np.exp(negative))
    return _result(out, (a,), lambda g: (g * slope,), "elu")


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    """x - logsumexp(x) along `axis`."""
    if a.ndim == 0 or a.shape[axis] < 1:
        raise InvalidInputError("log_softmax needs at least one class")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    probs = np.exp(out)

    def backward_fn(g):
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return _result(out, (a,), backward_fn, "log_softmax")


def softmax_over_segments(scores: Tensor, segments: ArrayLike,
                          num_segments: Optional[int] = None) -> Tensor:
    """
    Softmax of a 1-D score vector computed independently inside each segment.

    Args:
        scores: one score per entry
        segments: segment id per entry
        num_segments: total segment count; every id below it must occur

    Returns:
        Tensor: positive weights summing to 1 within every segment
    """
    segments = np.asarray(segments, dtype=np.int64)
    if scores.ndim != 1:
        raise DimensionError(f"segment softmax expects a vector, got shape {scores.shape}")
    if scores.size == 0:
        raise InvalidInputError("segment softmax over an empty segment set")
    if num_segments is None:
        num_segments = int(segments.max()) + 1
    segments = _check_segments(segments, scores.shape[0], num_segments)
    if np.any(np.bincount(segments, minlength=num_segments) == 0):
        raise InvalidInputError("every segment needs at least one entry")

    peak = np.full(num_segments, -np.inf)
    np.maximum.at(peak, segments, scores.data)
    exps = np.exp(scores.data - peak[segments])
    totals = np.zeros(num_segments)
    np.add.at(totals, segments, exps)
    out = exps / totals[segments]

    def backward_fn(g):
        weighted = np.zeros(num_segments)
        np.add.at(weighted, segments, g * out)
        return (out * (g - weighted[segments]),)

    return _result(out, (scores,), backward_fn, "segment_softmax")


def dropout(a: Tensor, rate: float, training: bool,
            rng: Optional[np.random.Generator] = None) -> Tensor:
    """
    Inverted dropout: survivors are scaled by 1/(1-rate) at train time so
    evaluation is the identity.
    """
    if not 0.0 <= rate < 1.0:
        raise InvalidInputError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return a
    if rng is None:
        raise InvalidInputError("training-mode dropout needs a seeded generator")
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return mul(a, mask)


# ----------------------------------------------------------------------
# Reverse pass
# ----------------------------------------------------------------------

def _topological_order(root: Tensor) -> List[Tensor]:
    """Iterative post-order DFS over tensors that require gradients."""
    order: List[Tensor] = []
    visited = set()
    stack_: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack_.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack_.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """
    Accumulate d(loss)/d(t) into `t.grad` for every tensor `t` reachable
    from `loss` that requires gradients. Repeated calls add up.
    """
    if loss.size != 1:
        raise InvalidInputError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    pending = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        node.grad = g.copy() if node.grad is None else node.grad + g
        if node._backward_fn is None:
            continue
        for parent, parent_grad in zip(node._parents, node._backward_fn(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = parent_grad if key not in pending else pending[key] + parent_grad
