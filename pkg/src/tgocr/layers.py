"""Differentiable layers with hand-written backward passes.

Every layer follows the same contract::

    out = layer.forward(x, train=True)    # caches what backward needs
    grad_x = layer.backward(grad_out)     # fills layer.params grads, if any

Inputs always carry a leading batch axis. In eval mode (``train=False``)
forward is a pure function and no state is touched, so ``backward`` is only
legal after a train-mode forward.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError, StateError


@dataclass
class ParamSet:
    """Trainable tensors of one layer plus their gradients and optimizer state.

    ``opt_state`` maps ``"weights"``/``"bias"`` to the Adadelta accumulator
    pair ``(mean squared gradient, mean squared update)``; it is created lazily
    by the optimizer.
    """

    weights: np.ndarray
    bias: np.ndarray
    grad_weights: np.ndarray = field(init=False)
    grad_bias: np.ndarray = field(init=False)
    grads_ready: bool = field(init=False, default=False)
    opt_state: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)

    def set_grads(self, grad_weights, grad_bias):
        if grad_weights.shape != self.weights.shape or grad_bias.shape != self.bias.shape:
            raise ShapeError("gradient shapes must match parameter shapes")
        self.grad_weights[...] = grad_weights
        self.grad_bias[...] = grad_bias
        self.grads_ready = True

    def tensors(self):
        return [("weights", self.weights), ("bias", self.bias)]

    def count(self) -> int:
        return int(self.weights.size + self.bias.size)


def glorot_uniform(rng: np.random.Generator, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    kind = "layer"
    params: ParamSet | None = None

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, grad_output):
        raise NotImplementedError

    def output_shape(self, input_shape):
        """Per-sample output shape for a per-sample ``input_shape``."""
        return tuple(input_shape)

    def param_count(self) -> int:
        return self.params.count() if self.params is not None else 0

    def config(self) -> dict:
        return {"kind": self.kind}

    def _cached(self, name):
        value = getattr(self, name, None)
        if value is None:
            raise StateError(f"{self.kind}: backward called without a train-mode forward")
        return value

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.config().items() if k != "kind")
        return f"{type(self).__name__}({args})"


class Dense(Layer):
    """Fully connected layer; weights are stored as (n_out, n_in)."""

    kind = "dense"

    def __init__(self, n_in, n_out, rng=None, dtype=np.float32):
        self.n_in, self.n_out = int(n_in), int(n_out)
        rng = rng if rng is not None else np.random.default_rng(0)
        w = glorot_uniform(rng, (self.n_out, self.n_in), self.n_in, self.n_out, dtype)
        self.params = ParamSet(w, np.zeros(self.n_out, dtype=dtype))
        self._x = None

    def forward(self, x, train=False):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"dense expects (batch, {self.n_in}), got {x.shape}")
        if train:
            self._x = x
        return x @ self.params.weights.T + self.params.bias

    def backward(self, grad_output):
        x = self._cached("_x")
        self.params.set_grads(grad_output.T @ x, grad_output.sum(axis=0))
        return grad_output @ self.params.weights

    def output_shape(self, input_shape):
        if tuple(input_shape) != (self.n_in,):
            raise ShapeError(f"dense expects input ({self.n_in},), got {tuple(input_shape)}")
        return (self.n_out,)

    def config(self):
        return {"kind": self.kind, "n_in": self.n_in, "n_out": self.n_out}


class Conv2D(Layer):
    kind = "conv"

    def __init__(self, in_channels, out_channels, kernel_size, rng=None, dtype=np.float32):
        self.in_channels, self.out_channels = int(in_channels), int(out_channels)
        self.kernel_size = int(kernel_size)
        k = self.kernel_size
        rng = rng if rng is not None else np.random.default_rng(0)
        shape = (self.out_channels, self.in_channels, k, k)
        w = glorot_uniform(rng, shape, self.in_channels * k * k, self.out_channels * k * k, dtype)
        self.params = ParamSet(w, np.zeros(self.out_channels, dtype=dtype))
        self._x = None

    def forward(self, x, train=False):
        if x.ndim != 4:
            raise ShapeError(f"conv expects (batch, C, H, W), got {x.shape}")
        if train:
            self._x = x
        return T.conv2d_valid(x, self.params.weights, self.params.bias)

    def backward(self, grad_output):
        x = self._cached("_x")
        gx, gw, gb = T.conv2d_valid_backward(x, self.params.weights, grad_output)
        self.params.set_grads(gw, gb)
        return gx

    def output_shape(self, input_shape):
        if len(input_shape) != 3 or input_shape[0] != self.in_channels:
            raise ShapeError(
                f"conv expects ({self.in_channels}, H, W), got {tuple(input_shape)}"
            )
        _, h, w = input_shape
        k = self.kernel_size
        if k > h or k > w:
            raise ShapeError(f"kernel {k}x{k} larger than input {h}x{w}")
        return (self.out_channels, h - k + 1, w - k + 1)

    def config(self):
        return {
            "kind": self.kind,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
        }


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        self._x = None

    def forward(self, x, train=False):
        if train:
            self._x = x
        return T.relu(x)

    def backward(self, grad_output):
        return T.relu_backward(self._cached("_x"), grad_output)


class MaxPool2x2(Layer):
    kind = "maxpool"

    def __init__(self):
        self._argmax = None

    def forward(self, x, train=False):
        out, argmax = T.maxpool2x2(x)
        if train:
            self._argmax = argmax
        return out

    def backward(self, grad_output):
        return T.maxpool2x2_backward(self._cached("_argmax"), grad_output)

    def output_shape(self, input_shape):
        *lead, h, w = input_shape
        if h % 2 or w % 2:
            raise ShapeError(f"maxpool2x2 needs even H and W, got {h}x{w}")
        return (*lead, h // 2, w // 2)


class Dropout(Layer):
    """Inverted dropout driven by its own seeded random stream."""

    kind = "dropout"

    def __init__(self, rate, seed=0):
        rate = float(rate)
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self._mask = None

    def forward(self, x, train=False):
        if not train:
            return x
        if self.rate == 0.0:
            self._mask = np.ones_like(x)
            return x
        keep = self.rng.random(x.shape) >= self.rate
        self._mask = keep.astype(x.dtype) / x.dtype.type(1.0 - self.rate)
        return x * self._mask

    def backward(self, grad_output):
        return grad_output * self._cached("_mask")

    def config(self):
        return {"kind": self.kind, "rate": self.rate, "seed": self.seed}


class Flatten(Layer):
    kind = "flatten"

    def __init__(self):
        self._shape = None

    def forward(self, x, train=False):
        if train:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_output):
        return grad_output.reshape(self._cached("_shape"))

    def output_shape(self, input_shape):
        return (T.prod(input_shape),)


class Softmax(Layer):
    """Row-wise softmax output layer.

    Training skips this layer and feeds the logits to the fused softmax
    cross-entropy loss; ``backward`` is provided for completeness.
    """

    kind = "softmax"

    def __init__(self):
        self._p = None

    def forward(self, x, train=False):
        p = T.softmax_rows(x)
        if train:
            self._p = p
        return p

    def backward(self, grad_output):
        p = self._cached("_p")
        return p * (grad_output - (grad_output * p).sum(axis=1, keepdims=True))


LAYER_TYPES = {cls.kind: cls for cls in (Dense, Conv2D, ReLU, MaxPool2x2, Dropout, Flatten, Softmax)}


def layer_from_config(cfg: dict, dtype=np.float32) -> Layer:
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    if kind not in LAYER_TYPES:
        raise ConfigError(f"unknown layer kind {kind!r}")
    cls = LAYER_TYPES[kind]
    if kind in ("dense", "conv"):
        return cls(**cfg, dtype=dtype)
    return cls(**cfg)


def layer_param_count(layer: Layer) -> int:
    return layer.param_count()
