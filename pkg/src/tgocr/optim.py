"""Fused softmax cross-entropy loss and the Adadelta update rule."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, ShapeError, StateError
from .layers import ParamSet
from .tensor import softmax_rows

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class AdadeltaConfig:
    learning_rate: float = 1.0
    rho: float = 0.95
    epsilon: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.epsilon > 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class LossResult:
    mean_loss: float
    grad_logits: np.ndarray


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> LossResult:
    """Mean categorical cross-entropy of softmax(logits) against one-hot targets.

    The gradient w.r.t. the logits is ``(p - y) / batch``.
    """
    if logits.ndim != 2 or logits.shape != targets.shape:
        raise ShapeError(f"logits {logits.shape} and targets {targets.shape} must match")
    ones = targets == 1
    if not (np.all(ones | (targets == 0)) and np.all(ones.sum(axis=1) == 1)):
        raise DataError("every target row must be one-hot")
    n = logits.shape[0]
    p = softmax_rows(logits)
    true_p = p[ones]
    loss = float(-np.log(np.maximum(true_p, PROB_FLOOR)).mean())
    grad = (p - targets) / p.dtype.type(n)
    return LossResult(loss, grad)


def adadelta_step(params: ParamSet, config: AdadeltaConfig = AdadeltaConfig()) -> None:
    """Apply one in-place Adadelta update to ``params`` and clear its gradients."""
    if not params.grads_ready:
        raise StateError("adadelta_step called before gradients were populated")
    rho, eps, lr = config.rho, config.epsilon, config.learning_rate
    for name, value, grad in (
        ("weights", params.weights, params.grad_weights),
        ("bias", params.bias, params.grad_bias),
    ):
        if name not in params.opt_state:
            params.opt_state[name] = (np.zeros_like(value), np.zeros_like(value))
        acc_g, acc_d = params.opt_state[name]
        acc_g *= rho
        acc_g += (1 - rho) * grad * grad
        delta = -np.sqrt(acc_d + eps) / np.sqrt(acc_g + eps) * grad
        acc_d *= rho
        acc_d += (1 - rho) * delta * delta
        value += lr * delta
    params.grads_ready = False
