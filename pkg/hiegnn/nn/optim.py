"""
First-order optimizers over a ParameterRegistry.
"""

import logging
from typing import Dict

import numpy as np

from hiegnn.core.exceptions import ConfigError
from hiegnn.nn.parameters import ParameterRegistry

logger = logging.getLogger(__name__)


def clip_grad_norm(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Rescale all gradients in place so their global L2 norm is <= max_norm.

    Returns the norm before clipping.
    """
    total = float(np.sqrt(np.sum([np.sum(g * g) for g in grads.values()])))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads.values():
            g *= scale
    return total


class Optimizer:
    def __init__(self, registry: ParameterRegistry, lr: float):
        if lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {lr}")
        self.registry = registry
        self.lr = lr

    def step(self, grads: Dict[str, np.ndarray]) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    """Plain gradient descent."""

    def step(self, grads: Dict[str, np.ndarray]) -> None:
        for param in self.registry:
            param.data -= self.lr * grads[param.name]


class Adam(Optimizer):
    """Adam with bias-corrected first and second moment estimates."""

    def __init__(self, registry: ParameterRegistry, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        super().__init__(registry, lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t

        for param in self.registry:
            g = grads[param.name]
            if param.name not in self.m:
                self.m[param.name] = np.zeros_like(param.data)
                self.v[param.name] = np.zeros_like(param.data)

            m, v = self.m[param.name], self.v[param.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)

            param.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


def make_optimizer(name: str, registry: ParameterRegistry, lr: float) -> Optimizer:
    if name == "adam":
        return Adam(registry, lr)
    if name == "sgd":
        return SGD(registry, lr)
    raise ConfigError(f"unknown optimizer {name!r}; expected 'adam' or 'sgd'")
