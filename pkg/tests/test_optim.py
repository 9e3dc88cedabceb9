import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tgocr.errors import ConfigError, DataError, StateError
from tgocr.layers import ParamSet
from tgocr.optim import AdadeltaConfig, adadelta_step, softmax_cross_entropy

from oracles import central_diff, max_rel_err


def onehot(labels, k=10):
    out = np.zeros((len(labels), k))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def test_confident_correct_prediction_has_zero_loss():
    logits = np.full((1, 10), -1e4)
    logits[0, 3] = 1e4
    assert softmax_cross_entropy(logits, onehot([3])).mean_loss == 0.0


def test_uniform_logits_loss_is_ln10():
    assert softmax_cross_entropy(np.zeros((4, 10)), onehot([0, 1, 2, 3])).mean_loss == pytest.approx(
        2.302585092994046, abs=1e-12
    )


def test_half_probability_loss_is_ln2():
    logits = np.full((1, 10), -np.inf)
    logits[0, :2] = 0.0
    logits = np.where(np.isinf(logits), -1e3, logits)
    assert softmax_cross_entropy(logits, onehot([1])).mean_loss == pytest.approx(0.6931471805599453, abs=1e-12)


def test_probability_floor_keeps_loss_finite():
    logits = np.zeros((1, 10))
    logits[0, 0] = 1e4
    loss = softmax_cross_entropy(logits, onehot([5])).mean_loss
    assert loss == pytest.approx(-math.log(1e-12))


def test_non_one_hot_target_is_rejected():
    with pytest.raises(DataError):
        softmax_cross_entropy(np.zeros((2, 10)), np.zeros((2, 10)))
    bad = onehot([1, 2])
    bad[0, 0] = 0.5
    with pytest.raises(DataError):
        softmax_cross_entropy(np.zeros((2, 10)), bad)


@pytest.mark.parametrize("seed", range(10))
def test_loss_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    batch = int(rng.integers(1, 6))
    logits = rng.normal(size=(batch, 10))
    targets = onehot(rng.integers(0, 10, size=batch))
    grad = softmax_cross_entropy(logits, targets).grad_logits
    numeric = central_diff(lambda z: softmax_cross_entropy(z, targets).mean_loss, logits)
    assert max_rel_err(grad, numeric) < 1e-4


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), batch=st.integers(1, 16), scale=st.sampled_from([0.1, 1.0, 20.0]))
def test_loss_properties(seed, batch, scale):
    rng = np.random.default_rng(seed)
    logits = rng.normal(size=(batch, 10)) * scale
    result = softmax_cross_entropy(logits, onehot(rng.integers(0, 10, size=batch)))
    assert result.mean_loss > 0
    assert np.all(np.abs(result.grad_logits.sum(axis=1)) <= 1e-9)


def test_config_validation():
    with pytest.raises(ConfigError):
        AdadeltaConfig(rho=1.0)
    with pytest.raises(ConfigError):
        AdadeltaConfig(epsilon=0.0)


def scalar_params(value=0.0):
    return ParamSet(np.array([value]), np.array([0.0]))


def test_adadelta_requires_gradients():
    with pytest.raises(StateError):
        adadelta_step(scalar_params())


def test_adadelta_first_step_hand_trace():
    ps = scalar_params()
    ps.set_grads(np.array([1.0]), np.array([0.0]))
    adadelta_step(ps)
    assert ps.weights[0] == pytest.approx(-0.004472091234310838, rel=1e-12)
    acc_g, acc_d = ps.opt_state["weights"]
    assert acc_g[0] == pytest.approx(0.05)
    assert acc_d[0] == pytest.approx(9.999800003999919e-07, rel=1e-12)
    # second step with the same gradient, traced by hand from the recurrences
    ps.set_grads(np.array([1.0]), np.array([0.0]))
    adadelta_step(ps)
    assert ps.weights[0] == pytest.approx(-0.004472091234310838 - 0.004529062265533207, rel=1e-12)


def test_adadelta_zero_gradient_only_decays_accumulators(rng):
    ps = ParamSet(rng.normal(size=(3, 4)), rng.normal(size=3))
    ps.set_grads(rng.normal(size=(3, 4)), rng.normal(size=3))
    adadelta_step(ps)
    w = ps.weights.copy()
    acc_g, acc_d = (a.copy() for a in ps.opt_state["weights"])
    ps.set_grads(np.zeros((3, 4)), np.zeros(3))
    adadelta_step(ps)
    np.testing.assert_array_equal(ps.weights, w)
    np.testing.assert_allclose(ps.opt_state["weights"][0], 0.95 * acc_g)
    np.testing.assert_allclose(ps.opt_state["weights"][1], 0.95 * acc_d)


def test_adadelta_first_step_opposes_gradient(rng):
    w0 = rng.normal(size=50)
    ps = ParamSet(w0.copy(), np.zeros(1))
    g = rng.normal(size=50)
    ps.set_grads(g, np.zeros(1))
    adadelta_step(ps)
    assert np.all(np.sign(ps.weights - w0) == -np.sign(g))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), steps=st.integers(1, 30))
def test_adadelta_accumulators_nonnegative(seed, steps):
    rng = np.random.default_rng(seed)
    ps = ParamSet(rng.normal(size=5), rng.normal(size=2))
    for _ in range(steps):
        ps.set_grads(rng.normal(size=5) * 10, rng.normal(size=2))
        adadelta_step(ps)
    for acc_g, acc_d in ps.opt_state.values():
        assert (acc_g >= 0).all() and (acc_d >= 0).all()


def test_adadelta_quadratic_proxy_converges():
    ps = scalar_params(5.0)
    history = []
    for _ in range(400):
        ps.set_grads(ps.weights.copy(), np.zeros(1))
        adadelta_step(ps)
        history.append(abs(ps.weights[0]))
    tail = np.array(history[10:])
    assert np.all(np.diff(tail) <= 0)
    assert tail[-1] < history[0]
