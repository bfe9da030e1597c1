"""
Trainable parameters and the model's parameter registry.
"""

from collections import OrderedDict
from typing import Dict, Iterator, Tuple

import numpy as np

from hiegnn.core.exceptions import CheckpointError, InvalidInputError
from hiegnn.nn.tensor import ArrayLike, Tensor


class Parameter(Tensor):
    """A named leaf tensor that always requires gradients."""

    def __init__(self, name: str, data: ArrayLike):
        super().__init__(data, requires_grad=True)
        self.name = name

    def assign(self, values: np.ndarray) -> None:
        """Overwrite the values in place, keeping the shape."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.data.shape:
            raise CheckpointError(
                f"parameter {self.name!r}: expected shape {self.data.shape}, got {values.shape}"
            )
        self.data[...] = values

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


class ParameterRegistry:
    """Ordered name → Parameter mapping; a name may be registered once."""

    def __init__(self):
        self._params: "OrderedDict[str, Parameter]" = OrderedDict()

    def create(self, name: str, data: ArrayLike) -> Parameter:
        return self.register(Parameter(name, data))

    def register(self, param: Parameter) -> Parameter:
        if param.name in self._params:
            raise InvalidInputError(f"parameter {param.name!r} registered twice")
        self._params[param.name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> Tuple[str, ...]:
        return tuple(self._params)

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.grad = None

    def grads(self) -> Dict[str, np.ndarray]:
        """Gradient per parameter; untouched parameters report zeros."""
        return {
            name: (p.grad if p.grad is not None else np.zeros_like(p.data))
            for name, p in self._params.items()
        }

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        unexpected = set(state) - set(self._params)
        if missing or unexpected:
            raise CheckpointError(
                f"parameter names differ: missing {sorted(missing)}, unexpected {sorted(unexpected)}"
            )
        for name, values in state.items():
            self._params[name].assign(values)

    def num_values(self) -> int:
        return int(np.sum([p.size for p in self._params.values()]))


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Uniform in ±sqrt(6 / (fan_in + fan_out)); vectors use fan_in = 1."""
    fan_in, fan_out = (shape[0], shape[1]) if len(shape) == 2 else (1, shape[0])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def uniform(rng: np.random.Generator, shape: Tuple[int, ...], scale: float) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)
