"""Finite-difference verification of the hand-written backward passes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import one_hot_batch
from .errors import ConfigError
from .optim import softmax_cross_entropy


def relative_error(analytic, numeric, floor=1e-6) -> float:
    """Largest elementwise ``|a - n| / max(|a|, |n|, floor)``."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def numeric_gradient(f, x: np.ndarray, step=1e-3) -> np.ndarray:
    """Central differences of the scalar function ``f()`` w.r.t. ``x``, perturbed in place."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        up = f()
        flat[i] = old - step
        down = f()
        flat[i] = old
        g[i] = (up - down) / (2 * step)
    return grad


@dataclass
class GradcheckReport:
    tolerance: float
    errors: dict[str, float] = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def lines(self):
        for name, err in self.errors.items():
            mark = "ok" if err < self.tolerance else "FAIL"
            yield f"{name:<24} max rel err {err:.3e}  {mark}"


def gradcheck(model_builder, tolerance=1e-4, batch=4, seed=0, step=1e-5, x=None, targets=None):
    """Compare analytic parameter gradients of the full loss with central differences.

    ``model_builder(seed, dtype)`` must return a model whose dropout layers have
    rate 0. The check runs in 64-bit.
    """
    model = model_builder(seed, np.float64)
    if model.dtype != np.float64:
        raise ConfigError("gradcheck requires a 64-bit model")
    if any(getattr(l, "rate", 0.0) > 0 for l in model.layers):
        raise ConfigError("gradcheck requires dropout to be disabled")
    rng = np.random.default_rng(seed + 1)
    if x is None:
        x = rng.normal(size=(batch, *model.input_shape))
    if targets is None:
        targets = one_hot_batch(rng.integers(0, model.num_classes, size=len(x)), dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)

    def loss():
        return softmax_cross_entropy(model.logits(x, train=True), targets).mean_loss

    result = softmax_cross_entropy(model.logits(x, train=True), targets)
    model.backward(result.grad_logits)
    analytic = {
        id(layer): (layer.params.grad_weights.copy(), layer.params.grad_bias.copy())
        for layer in model.param_layers()
    }

    report = GradcheckReport(tolerance)
    for i, layer in enumerate(model.layers):
        if layer.params is None:
            continue
        gw, gb = analytic[id(layer)]
        err = max(
            relative_error(gw, numeric_gradient(loss, layer.params.weights, step)),
            relative_error(gb, numeric_gradient(loss, layer.params.bias, step)),
        )
        report.errors[f"{i}:{layer.kind}"] = err
    return report
