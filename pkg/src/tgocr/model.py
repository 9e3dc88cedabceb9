"""Sequential models, the MLP and CNN builders, training and evaluation."""
from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import data as D
from .errors import ConfigError, DataError, OutputError, ShapeError
from .layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2x2, ReLU, Softmax
from .optim import AdadeltaConfig, adadelta_step, softmax_cross_entropy

log = logging.getLogger(__name__)

INPUT_SHAPE = (1, D.IMAGE_SIZE, D.IMAGE_SIZE)

# sum of in*out+out over the dense layers 1024-512-128-10; the paper prints 591745
MLP_PARAM_COUNT = 591_754
PAPER_MLP_PARAM_COUNT = 591_745
CNN_PARAM_COUNT = 75_383


class SequentialModel:
    """An ordered stack of layers ending in a softmax output layer."""

    def __init__(self, layers: list[Layer], architecture: str, input_shape=INPUT_SHAPE,
                 num_classes=D.NUM_CLASSES, seed=None):
        if not layers or not isinstance(layers[-1], Softmax):
            raise ConfigError("the last layer must be a softmax output layer")
        self.layers = list(layers)
        self.architecture = architecture
        self.input_shape = tuple(input_shape)
        self.num_classes = int(num_classes)
        self.seed = seed
        self.shapes = []
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            try:
                shape = tuple(layer.output_shape(shape))
            except ShapeError as exc:
                raise ShapeError(f"layer {i} ({layer.kind}): {exc}") from exc
            self.shapes.append(shape)
        if shape != (self.num_classes,):
            raise ShapeError(f"model output {shape} does not match {self.num_classes} classes")

    @property
    def dtype(self):
        for layer in self.param_layers():
            return layer.params.weights.dtype
        return np.dtype(np.float32)

    def param_layers(self):
        return [layer for layer in self.layers if layer.params is not None]

    def param_count(self) -> int:
        return sum(layer.param_count() for layer in self.layers)

    def _prepare(self, x):
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] == self.input_shape:
            return x
        if x.ndim == 2 and x.shape[1] == np.prod(self.input_shape):
            return x.reshape(-1, *self.input_shape)
        raise ShapeError(f"expected inputs of shape (batch, {self.input_shape}), got {x.shape}")

    def logits(self, x, train=False):
        out = self._prepare(x)
        for layer in self.layers[:-1]:
            out = layer.forward(out, train=train)
        return out

    def forward(self, x, train=False):
        """Class probabilities, one row per sample."""
        return self.layers[-1].forward(self.logits(x, train=train), train=train)

    predict_proba = forward

    def backward(self, grad_logits):
        """Backpropagate a gradient w.r.t. the logits through every hidden layer."""
        grad = grad_logits
        for layer in reversed(self.layers[:-1]):
            grad = layer.backward(grad)
        return grad

    def summary(self):
        """Rows of ``(kind, output shape, parameter count)``."""
        return [(l.kind, s, l.param_count()) for l, s in zip(self.layers, self.shapes)]

    def __repr__(self):
        return f"SequentialModel({self.architecture!r}, {len(self.layers)} layers, {self.param_count()} params)"


def _dropout_seed(seed, index):
    return int(np.random.SeedSequence([int(seed), index]).generate_state(1)[0])


def build_mlp(seed=0, dtype=np.float32) -> SequentialModel:
    rng = np.random.default_rng(seed)
    layers = [
        Flatten(),
        Dense(1024, 512, rng, dtype),
        ReLU(),
        Dropout(0.25, _dropout_seed(seed, 3)),
        Dense(512, 128, rng, dtype),
        ReLU(),
        Dropout(0.25, _dropout_seed(seed, 6)),
        Dense(128, 10, rng, dtype),
        Softmax(),
    ]
    return SequentialModel(layers, "mlp", seed=seed)


def build_cnn(seed=0, dtype=np.float32) -> SequentialModel:
    rng = np.random.default_rng(seed)
    layers = [
        Conv2D(1, 30, 5, rng, dtype),
        ReLU(),
        MaxPool2x2(),
        Conv2D(30, 15, 3, rng, dtype),
        ReLU(),
        MaxPool2x2(),
        Dropout(0.25, _dropout_seed(seed, 6)),
        Flatten(),
        Dense(540, 128, rng, dtype),
        ReLU(),
        Dropout(0.50, _dropout_seed(seed, 10)),
        Dense(128, 10, rng, dtype),
        Softmax(),
    ]
    return SequentialModel(layers, "cnn", seed=seed)


def build_small_cnn(seed=0, dtype=np.float64) -> SequentialModel:
    """Down-scaled CNN on 8x8 inputs for gradient checking (dropout rate 0)."""
    rng = np.random.default_rng(seed)
    layers = [
        Conv2D(1, 2, 3, rng, dtype),    # 2x6x6
        ReLU(),
        MaxPool2x2(),                   # 2x3x3
        Conv2D(2, 3, 2, rng, dtype),    # 3x2x2
        ReLU(),
        MaxPool2x2(),                   # 3x1x1
        Dropout(0.0),
        Flatten(),
        Dense(3, 12, rng, dtype),
        ReLU(),
        Dropout(0.0),
        Dense(12, 10, rng, dtype),
        Softmax(),
    ]
    return SequentialModel(layers, "small_cnn", input_shape=(1, 8, 8), seed=seed)


def build_small_mlp(seed=0, dtype=np.float64) -> SequentialModel:
    rng = np.random.default_rng(seed)
    layers = [
        Flatten(),
        Dense(64, 12, rng, dtype),
        ReLU(),
        Dropout(0.0),
        Dense(12, 10, rng, dtype),
        Softmax(),
    ]
    return SequentialModel(layers, "small_mlp", input_shape=(1, 8, 8), seed=seed)


BUILDERS = {"mlp": build_mlp, "cnn": build_cnn, "small_cnn": build_small_cnn, "small_mlp": build_small_mlp}


def build_model(architecture: str, seed=0, dtype=None) -> SequentialModel:
    if architecture not in BUILDERS:
        raise ConfigError(f"unknown architecture {architecture!r}")
    builder = BUILDERS[architecture]
    return builder(seed) if dtype is None else builder(seed, dtype)


@dataclass
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 128
    seed: int = 42
    adadelta: AdadeltaConfig = field(default_factory=AdadeltaConfig)
    metrics_path: str | None = None
    checkpoint_path: str | None = None
    checkpoint_every: int = 50
    record_time: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float
    seconds: float


METRICS_HEADER = "epoch,train_loss,train_acc,test_acc,seconds"


def format_metrics_row(m: EpochMetrics) -> str:
    return f"{m.epoch},{m.train_loss:.6f},{m.train_acc:.6f},{m.test_acc:.6f},{m.seconds:.6f}"


def deterministic_mode() -> bool:
    """True when ``TGOCR_THREADS=1``: outputs must then be byte-reproducible."""
    return os.environ.get("TGOCR_THREADS", "").strip() == "1"


def _as_arrays(samples):
    if isinstance(samples, tuple):
        x, y = samples
        return np.asarray(x), np.asarray(y)
    return D.stack(samples)


def train_epoch(model, x, y, config: TrainConfig, epoch: int) -> float:
    """One pass over ``(x, y)``; returns the sample-weighted mean training loss."""
    total, count = 0.0, 0
    for xb, tb in D.batches((x, y), config.batch_size, epoch_seed=[config.seed, epoch]):
        result = softmax_cross_entropy(model.logits(xb, train=True), tb)
        model.backward(result.grad_logits)
        for layer in model.param_layers():
            adadelta_step(layer.params, config.adadelta)
        total += result.mean_loss * len(xb)
        count += len(xb)
    return total / count


def train(model: SequentialModel, dataset, config: TrainConfig, on_epoch=None) -> list[EpochMetrics]:
    """Train with Adadelta and categorical cross-entropy, evaluating every epoch.

    ``dataset`` is a :class:`~tgocr.data.SplitDataset` or a ``(train, test)``
    pair of sample lists / ``(images, labels)`` tuples. Metrics are appended to
    ``config.metrics_path`` after each epoch; a checkpoint is written every
    ``config.checkpoint_every`` epochs and at the end.
    """
    from .checkpoint import save_checkpoint

    train_split, test_split = (
        (dataset.train, dataset.test) if isinstance(dataset, D.SplitDataset) else dataset
    )
    x_train, y_train = _as_arrays(train_split)
    x_test, y_test = _as_arrays(test_split)
    x_train = x_train.astype(model.dtype, copy=False)
    record_time = config.record_time and not deterministic_mode()

    if config.metrics_path:
        try:
            with open(config.metrics_path, "w") as fh:
                fh.write(METRICS_HEADER + "\n")
        except OSError as exc:
            raise OutputError(f"cannot write metrics to {config.metrics_path}: {exc}") from exc

    history = []
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        loss = train_epoch(model, x_train, y_train, config, epoch)
        train_acc, _ = evaluate(model, (x_train, y_train))
        test_acc = evaluate(model, (x_test, y_test))[0] if len(y_test) else 0.0
        elapsed = time.perf_counter() - start
        m = EpochMetrics(epoch, loss, train_acc, test_acc, elapsed if record_time else 0.0)
        history.append(m)
        log.info("epoch %d loss=%.4f train=%.4f test=%.4f (%.1fs)", epoch, loss, train_acc, test_acc, elapsed)
        if config.metrics_path:
            try:
                with open(config.metrics_path, "a") as fh:
                    fh.write(format_metrics_row(m) + "\n")
                    fh.flush()
            except OSError as exc:
                raise OutputError(f"cannot append metrics to {config.metrics_path}: {exc}") from exc
        if config.checkpoint_path and (
            epoch == config.epochs or (config.checkpoint_every > 0 and epoch % config.checkpoint_every == 0)
        ):
            save_checkpoint(model, config.checkpoint_path)
        if on_epoch is not None:
            on_epoch(m)
    return history


def evaluate(model: SequentialModel, samples, batch_size=500):
    """Eval-mode accuracy and confusion matrix ``[true][predicted]``."""
    x, y = _as_arrays(samples) if (isinstance(samples, tuple) or len(samples)) else (None, [])
    if x is None or len(y) == 0:
        raise DataError("cannot evaluate on an empty sample list")
    confusion = np.zeros((model.num_classes, model.num_classes), dtype=np.int64)
    for start in range(0, len(y), batch_size):
        probs = model.forward(x[start : start + batch_size])
        pred = probs.argmax(axis=1)  # ties resolve to the lowest index
        np.add.at(confusion, (y[start : start + batch_size], pred), 1)
    return float(np.trace(confusion) / confusion.sum()), confusion
