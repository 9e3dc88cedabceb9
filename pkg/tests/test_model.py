import numpy as np
import pytest

from tgocr import data as D
from tgocr.errors import ConfigError, DataError, OutputError, ShapeError
from tgocr.gradcheck import gradcheck, relative_error
from tgocr.layers import Dense, Softmax
from tgocr.model import (
    SequentialModel,
    TrainConfig,
    build_cnn,
    build_mlp,
    build_small_cnn,
    build_small_mlp,
    evaluate,
    train,
)


def test_mlp_structure():
    model = build_mlp(0)
    assert [l.kind for l in model.layers] == [
        "flatten", "dense", "relu", "dropout", "dense", "relu", "dropout", "dense", "softmax",
    ]
    assert [l.rate for l in model.layers if l.kind == "dropout"] == [0.25, 0.25]
    assert model.param_count() == 524_800 + 65_664 + 1_290 == 591_754


def test_cnn_structure():
    model = build_cnn(0)
    assert [s for k, s, _ in model.summary() if k in ("conv", "maxpool", "flatten")] == [
        (30, 28, 28), (30, 14, 14), (15, 12, 12), (15, 6, 6), (540,),
    ]
    assert [c for _, _, c in model.summary() if c] == [780, 4_065, 69_248, 1_290]
    assert model.param_count() == 75_383
    assert [l.rate for l in model.layers if l.kind == "dropout"] == [0.25, 0.5]


@pytest.mark.parametrize("builder", [build_mlp, build_cnn])
def test_builders_are_seeded(builder):
    a, b, c = builder(3), builder(3), builder(4)
    for la, lb, lc in zip(a.param_layers(), b.param_layers(), c.param_layers()):
        np.testing.assert_array_equal(la.params.weights, lb.params.weights)
        assert not np.array_equal(la.params.weights, lc.params.weights)
        assert not la.params.bias.any()


def test_glorot_limits():
    model = build_cnn(0)
    conv1 = model.layers[0].params.weights
    assert np.abs(conv1).max() <= np.sqrt(6 / (25 + 750))
    dense = model.layers[8].params.weights
    assert np.abs(dense).max() <= np.sqrt(6 / (540 + 128))


def test_incompatible_layers_rejected():
    with pytest.raises(ShapeError):
        SequentialModel([Dense(5, 10), Softmax()], "bad", input_shape=(4,))
    with pytest.raises(ConfigError):
        SequentialModel([Dense(4, 10)], "bad", input_shape=(4,))


def test_eval_outputs_are_distributions(rng):
    model = build_cnn(1)
    x = rng.random((6, 1, 32, 32))
    p = model.forward(x)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
    assert (p > 0).all()
    np.testing.assert_array_equal(p, model.forward(x))


def test_mlp_accepts_flat_inputs(rng):
    model = build_mlp(0)
    x = rng.random((3, 1, 32, 32)).astype(np.float32)
    np.testing.assert_array_equal(model.forward(x), model.forward(x.reshape(3, 1024)))


class Oracle(SequentialModel):
    """Predicts the label encoded in pixel [0, 0, 0]."""

    def __init__(self):
        super().__init__([Dense(4, 10), Softmax()], "stub", input_shape=(4,))

    def forward(self, x, train=False):
        x = np.asarray(x)
        out = np.zeros((len(x), 10))
        out[np.arange(len(x)), x[:, 0].astype(int)] = 1.0
        return out


def test_evaluate_perfect_model():
    y = np.arange(30) % 10
    x = np.zeros((30, 4))
    x[:, 0] = y
    acc, cm = evaluate(Oracle(), (x, y))
    assert acc == 1.0
    np.testing.assert_array_equal(cm, np.diag(np.full(10, 3)))


def test_evaluate_confusion_and_ties():
    model = SequentialModel([Dense(4, 10, dtype=np.float64), Softmax()], "tie", input_shape=(4,))
    model.layers[0].params.weights[...] = 0.0  # uniform output, argmax -> class 0
    y = np.array([0, 1, 2, 2])
    acc, cm = evaluate(model, (np.ones((4, 4)), y))
    assert acc == 0.25
    assert cm.sum() == 4 and cm[:, 0].sum() == 4


def test_evaluate_empty():
    with pytest.raises(DataError):
        evaluate(build_cnn(0), [])


def test_train_metrics_and_checkpoints(synthetic_root, tmp_path):
    ds = D.load_dataset(synthetic_root)
    metrics = tmp_path / "m.csv"
    ckpt = tmp_path / "c.ckpt"
    seen = []
    history = train(
        build_mlp(0),
        ds,
        TrainConfig(epochs=5, batch_size=64, seed=1, metrics_path=str(metrics),
                    checkpoint_path=str(ckpt), checkpoint_every=2),
        on_epoch=lambda m: seen.append(m.epoch),
    )
    assert [m.epoch for m in history] == seen == [1, 2, 3, 4, 5]
    lines = metrics.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,train_acc,test_acc,seconds"
    assert len(lines) == 6
    assert all(len(f.split(".")[1]) == 6 for f in lines[1].split(",")[1:])
    assert ckpt.exists()
    for m in history:
        assert 0 <= m.train_acc <= 1 and 0 <= m.test_acc <= 1 and m.train_loss >= 0
    assert history[-1].train_loss < history[0].train_loss


def test_train_unwritable_metrics(synthetic_root, tmp_path):
    ds = D.load_dataset(synthetic_root)
    with pytest.raises(OutputError):
        train(build_mlp(0), ds, TrainConfig(epochs=1, metrics_path=str(tmp_path / "no" / "m.csv")))


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)


def test_relative_error_helper():
    assert relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_error([1.0], [1.1]) == pytest.approx(0.1 / 1.1)
    assert relative_error([0.0], [1e-9]) == pytest.approx(1e-3)


@pytest.mark.parametrize("builder", [build_small_cnn, build_small_mlp])
@pytest.mark.parametrize("seed", range(3))
def test_gradcheck_small_models(builder, seed):
    report = gradcheck(builder, tolerance=1e-4, seed=seed)
    assert report.passed, list(report.lines())
    assert len(report.errors) == len(builder(seed).param_layers())


def test_gradcheck_rejects_zero_targets():
    with pytest.raises(DataError):
        gradcheck(build_small_cnn, x=np.zeros((4, 1, 8, 8)), targets=np.zeros((4, 10)))


def test_gradcheck_rejects_dropout_and_32bit():
    with pytest.raises(ConfigError):
        gradcheck(lambda seed, dtype: build_cnn(seed, dtype))
    with pytest.raises(ConfigError):
        gradcheck(lambda seed, dtype: build_small_cnn(seed, np.float32))
