"""
Central finite-difference gradient checking.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional

import numpy as np

from hiegnn.nn.tensor import Tensor, backward

logger = logging.getLogger(__name__)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, abs_floor: float = 1e-6) -> np.ndarray:
    """|a - n| / max(|a|, |n|), or 0 where |a - n| is under the absolute floor."""
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(diff <= abs_floor, 0.0, diff / scale)
    return rel


def numeric_gradient(loss_fn: Callable[[], Tensor], target: Tensor, eps: float = 1e-6) -> np.ndarray:
    """d loss / d target by central differences, perturbing `target.data` in place."""
    grad = np.zeros_like(target.data)
    flat = target.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = loss_fn().item()
        flat[i] = original - eps
        minus = loss_fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * eps)
    return grad


@dataclass
class GradCheckResult:
    max_relative_error: float
    per_tensor: Dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def gradient_check(loss_fn: Callable[[], Tensor], targets: Iterable[Tensor], eps: float = 1e-6,
                   tolerance: float = 1e-4, abs_floor: float = 1e-6,
                   names: Optional[Iterable[str]] = None) -> GradCheckResult:
    """
    Compare analytic gradients of `loss_fn()` with central differences for
    every entry of every target tensor.

    `loss_fn` must be deterministic (no dropout) and rebuild its graph on
    each call.
    """
    targets = list(targets)
    names = list(names) if names is not None else [getattr(t, "name", f"t{i}") for i, t in enumerate(targets)]

    for t in targets:
        t.grad = None
    backward(loss_fn())
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in targets]

    per_tensor = {}
    for name, target, grad in zip(names, targets, analytic):
        numeric = numeric_gradient(loss_fn, target, eps)
        err = relative_error(grad, numeric, abs_floor)
        per_tensor[name] = float(err.max()) if err.size else 0.0
        logger.debug(f"gradcheck {name}: max relative error {per_tensor[name]:.3e}")

    worst = max(per_tensor.values(), default=0.0)
    return GradCheckResult(max_relative_error=worst, per_tensor=per_tensor, tolerance=tolerance)
