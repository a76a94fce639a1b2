"""AdamW update rule and global-norm clipping against closed forms."""

import numpy as np
import pytest

from bort.model.autodiff import Tensor
from bort.training.optim import AdamW, clip_grads, global_grad_norm


def _param(values):
    return Tensor(np.asarray(values, dtype=np.float64), needs_grad=True)


def test_single_step_matches_closed_form():
    w = _param([1.0, -2.0])
    w.grad = np.array([0.5, -0.25])
    opt = AdamW({"w": w}, lr=0.1, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0)
    opt.step()

    g = np.array([0.5, -0.25])
    m = 0.1 * g
    v = 0.001 * np.square(g)
    m_hat = m / (1 - 0.9)
    v_hat = v / (1 - 0.999)
    expected = np.array([1.0, -2.0]) - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
    np.testing.assert_allclose(w.data, expected, rtol=0, atol=1e-15)


def test_two_steps_use_running_bias_correction():
    w = _param([0.3])
    opt = AdamW({"w": w}, lr=0.01, weight_decay=0.0)
    m = v = 0.0
    x = 0.3
    for t, g in enumerate([0.2, -0.7], start=1):
        w.grad = np.array([g])
        opt.step()
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        x -= 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    assert w.data[0] == pytest.approx(x, abs=1e-15)


def test_decay_is_decoupled_from_gradient():
    w = _param([2.0])
    w.grad = None
    opt = AdamW({"w": w}, lr=0.1, weight_decay=0.01)
    opt.step()
    # no gradient: the only movement is the multiplicative decay
    assert w.data[0] == pytest.approx(2.0 * (1 - 0.1 * 0.01), abs=1e-16)


def test_decay_applies_before_adam_term():
    w = _param([2.0])
    w.grad = np.array([1.0])
    opt = AdamW({"w": w}, lr=0.1, weight_decay=0.5)
    opt.step()
    adam_term = 0.1 * 1.0 / (1.0 + 1e-8)  # m_hat/sqrt(v_hat) = g/|g| at t=1
    assert w.data[0] == pytest.approx(2.0 * 0.95 - adam_term, abs=1e-12)


def test_zero_grad_clears_all():
    a, b = _param([1.0]), _param([2.0])
    a.grad = np.array([3.0])
    opt = AdamW({"a": a, "b": b})
    opt.zero_grad()
    assert a.grad is None and b.grad is None


def test_global_norm_spans_tensors():
    a, b = _param([3.0]), _param([0.0, 4.0])
    a.grad = np.array([3.0])
    b.grad = np.array([0.0, 4.0])
    assert global_grad_norm({"a": a, "b": b}) == pytest.approx(5.0)


def test_clip_rescales_jointly():
    a, b = _param([0.0]), _param([0.0, 0.0])
    a.grad = np.array([3.0])
    b.grad = np.array([0.0, 4.0])
    returned = clip_grads({"a": a, "b": b}, max_norm=2.5)
    assert returned == pytest.approx(5.0)
    np.testing.assert_allclose(a.grad, [1.5])
    np.testing.assert_allclose(b.grad, [0.0, 2.0])
    assert global_grad_norm({"a": a, "b": b}) == pytest.approx(2.5)


def test_clip_leaves_small_gradients_alone():
    a = _param([0.0])
    a.grad = np.array([0.25])
    clip_grads({"a": a}, max_norm=5.0)
    assert a.grad[0] == 0.25


def test_missing_grad_treated_as_zero_in_norm():
    a = _param([1.0])
    a.grad = None
    assert global_grad_norm({"a": a}) == 0.0
    clip_grads({"a": a}, max_norm=1.0)
    assert a.grad is None


def test_invalid_lr_rejected():
    with pytest.raises(ValueError):
        AdamW({"w": _param([1.0])}, lr=0.0)


def test_steps_are_deterministic():
    def run():
        w = _param([[0.5, -0.5], [1.5, 0.25]])
        opt = AdamW({"w": w}, lr=0.02, weight_decay=0.01)
        for i in range(5):
            w.grad = np.full((2, 2), 0.1 * (i + 1))
            clip_grads({"w": w}, 5.0)
            opt.step()
        return w.data.copy()

    np.testing.assert_array_equal(run(), run())
