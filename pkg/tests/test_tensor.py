"""Tests for the reverse-mode Tensor: forward values against numpy, gradients
against finite differences, and graph bookkeeping."""

import numpy as np
import numpy.testing as npt
import pytest

from preictal.autodiff.gradcheck import gradcheck
from preictal.autodiff.tensor import (
    Tensor,
    causal_conv1d,
    concat,
    conv2d,
    conv_transpose2d,
    maxpool2d,
    mse_loss,
    no_grad,
    softmax_probs,
    weighted_cross_entropy,
)
from preictal.errors import ValidationError

rng = np.random.default_rng(99)


def rand(*shape):
    return rng.standard_normal(shape)


def check(fn, arrays, tol=1e-6):
    err = gradcheck(fn, arrays, rng=np.random.default_rng(0))
    assert err < tol, f"gradcheck error {err:.3e}"


# ---- forward values ----


def test_arithmetic_matches_numpy():
    a, b = rand(3, 4), rand(3, 4)
    npt.assert_allclose((Tensor(a) + Tensor(b)).data, a + b)
    npt.assert_allclose((Tensor(a) * Tensor(b)).data, a * b)
    npt.assert_allclose((Tensor(a) - Tensor(b)).data, a - b)
    npt.assert_allclose((Tensor(a) / Tensor(np.abs(b) + 1)).data, a / (np.abs(b) + 1))
    npt.assert_allclose((Tensor(a) ** 3).data, a**3)
    npt.assert_allclose((-Tensor(a)).data, -a)
    npt.assert_allclose((2.0 + Tensor(a)).data, 2.0 + a)
    npt.assert_allclose((2.0 * Tensor(a)).data, 2.0 * a)


def test_matmul_and_reductions():
    a, b = rand(3, 4), rand(4, 5)
    npt.assert_allclose((Tensor(a) @ Tensor(b)).data, a @ b, rtol=1e-12)
    npt.assert_allclose(Tensor(a).sum().data, a.sum())
    npt.assert_allclose(Tensor(a).sum(axis=1).data, a.sum(axis=1))
    npt.assert_allclose(Tensor(a).mean(axis=0).data, a.mean(axis=0))
    npt.assert_allclose(Tensor(a).reshape(2, 6).data, a.reshape(2, 6))
    npt.assert_allclose(Tensor(a).transpose(1, 0).data, a.T)


def test_elementwise_nonlinearities():
    a = rand(4, 7)
    npt.assert_allclose(Tensor(a).relu().data, np.maximum(a, 0))
    npt.assert_allclose(Tensor(a).exp().data, np.exp(a))
    npt.assert_allclose(Tensor(np.abs(a) + 0.1).log().data, np.log(np.abs(a) + 0.1))
    npt.assert_allclose(Tensor(a).tanh().data, np.tanh(a))
    npt.assert_allclose(Tensor(a).sigmoid().data, 1 / (1 + np.exp(-a)), rtol=1e-12)


def test_sigmoid_extreme_inputs_stay_finite():
    out = Tensor(np.array([-1000.0, 1000.0])).sigmoid()
    npt.assert_allclose(out.data, [0.0, 1.0], atol=1e-12)
    assert np.isfinite(out.data).all()


def test_getitem_and_concat():
    a = rand(5, 4)
    npt.assert_allclose(Tensor(a)[1:3].data, a[1:3])
    parts = [rand(2, 3), rand(2, 3)]
    npt.assert_allclose(concat([Tensor(p) for p in parts], axis=0).data, np.concatenate(parts))


# ---- gradients ----


def test_grad_broadcast_add():
    check(lambda ts: ts[0] + ts[1], [rand(3, 4), rand(4)])
    check(lambda ts: ts[0] + ts[1], [rand(2, 3, 4), rand(1, 4)])


def test_grad_broadcast_mul_div():
    check(lambda ts: ts[0] * ts[1], [rand(3, 4), rand(3, 1)])
    check(lambda ts: ts[0] / (ts[1] * ts[1] + 1.0), [rand(3, 4), rand(4)])


def test_grad_matmul():
    check(lambda ts: ts[0] @ ts[1], [rand(3, 4), rand(4, 5)])


def test_grad_reductions_and_shape_ops():
    check(lambda ts: ts[0].sum(axis=1), [rand(3, 5)])
    check(lambda ts: ts[0].mean(), [rand(4, 4)])
    check(lambda ts: ts[0].reshape(6, 2), [rand(3, 4)])
    check(lambda ts: ts[0].transpose(2, 0, 1), [rand(2, 3, 4)])
    check(lambda ts: ts[0][1:3, ::2], [rand(4, 6)])


def test_grad_nonlinearities():
    x = rand(3, 4) + np.sign(rand(3, 4)) * 0.2  # keep away from relu kink
    check(lambda ts: ts[0].relu(), [x])
    check(lambda ts: ts[0].exp(), [rand(3, 4)])
    check(lambda ts: ts[0].log(), [np.abs(rand(3, 4)) + 0.5])
    check(lambda ts: ts[0].tanh(), [rand(3, 4)])
    check(lambda ts: ts[0].sigmoid(), [rand(3, 4)])


def test_grad_concat_and_getitem():
    check(lambda ts: concat(ts, axis=1), [rand(2, 3), rand(2, 2)])


def test_grad_reused_node_accumulates():
    # y = x*x + x: dy/dx = 2x + 1, exercised via two paths to the same node
    x = Tensor(np.array([3.0, -2.0]), requires_grad=True)
    y = (x * x + x).sum()
    y.backward()
    npt.assert_allclose(x.grad, 2 * x.data + 1)


def test_grad_diamond_graph():
    x = Tensor(np.array(2.0), requires_grad=True)
    a = x * 3.0
    b = x * 4.0
    (a * b).backward()  # d(12 x^2)/dx = 24 x
    npt.assert_allclose(x.grad, 48.0)


def test_backward_requires_scalar():
    x = Tensor(rand(3), requires_grad=True)
    with pytest.raises(ValidationError):
        (x * 2.0).backward()


def test_no_grad_suppresses_graph():
    x = Tensor(rand(3), requires_grad=True)
    with no_grad():
        y = (x * 2.0).sum()
    assert y.requires_grad is False
    y2 = (x * 2.0).sum()
    assert y2.requires_grad is True


# ---- conv2d ----


def naive_conv2d(x, w, b, stride, padding):
    n, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wd + 2 * padding - kw) // stride + 1
    out = np.zeros((n, o, ho, wo))
    for i in range(ho):
        for j in range(wo):
            patch = xp[:, :, i * stride : i * stride + kh, j * stride : j * stride + kw]
            out[:, :, i, j] = np.einsum("ncuv,ocuv->no", patch, w)
    return out + b[None, :, None, None]


@pytest.mark.parametrize("stride,padding", [(1, 0), (2, 1), (1, 2), (3, 0)])
def test_conv2d_matches_naive(stride, padding):
    x, w, b = rand(2, 3, 11, 9), rand(4, 3, 3, 3), rand(4)
    out = conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding)
    npt.assert_allclose(out.data, naive_conv2d(x, w, b, stride, padding), atol=1e-10)
    check(
        lambda ts: conv2d(ts[0], ts[1], ts[2], stride=stride, padding=padding),
        [x, w, b],
    )


def test_conv2d_shape_errors():
    with pytest.raises(ValidationError):
        conv2d(Tensor(rand(2, 3, 8, 8)), Tensor(rand(4, 2, 3, 3)))
    with pytest.raises(ValidationError):
        conv2d(Tensor(rand(2, 3, 2, 2)), Tensor(rand(4, 3, 5, 5)))


# ---- conv_transpose2d ----


def naive_conv_transpose2d(x, w, b, stride, padding, output_padding):
    n, cin, h, wd = x.shape
    _, cout, kh, kw = w.shape
    ho = (h - 1) * stride - 2 * padding + kh + output_padding
    wo = (wd - 1) * stride - 2 * padding + kw + output_padding
    out = np.zeros((n, cout, ho + 2 * padding, wo + 2 * padding))
    for i in range(h):
        for j in range(wd):
            contrib = np.einsum("nc,couv->nouv", x[:, :, i, j], w)
            out[:, :, i * stride : i * stride + kh, j * stride : j * stride + kw] += contrib
    if padding:
        out = out[:, :, padding:-padding, padding:-padding]
    return out + b[None, :, None, None]


@pytest.mark.parametrize("stride,padding,outpad", [(1, 0, 0), (2, 1, 1), (2, 0, 0), (3, 1, 2)])
def test_conv_transpose2d_matches_naive(stride, padding, outpad):
    x, w, b = rand(2, 3, 5, 4), rand(3, 2, 3, 3), rand(2)
    out = conv_transpose2d(
        Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding, output_padding=outpad
    )
    ref = naive_conv_transpose2d(x, w, b, stride, padding, outpad)
    npt.assert_allclose(out.data, ref, atol=1e-10)
    check(
        lambda ts: conv_transpose2d(
            ts[0], ts[1], ts[2], stride=stride, padding=padding, output_padding=outpad
        ),
        [x, w, b],
    )


def test_conv_transpose2d_inverts_conv_shape():
    x = Tensor(rand(1, 4, 16, 16))
    w_down = Tensor(rand(8, 4, 3, 3))
    down = conv2d(x, w_down, stride=2, padding=1)
    w_up = Tensor(rand(8, 4, 3, 3))
    up = conv_transpose2d(down, w_up, stride=2, padding=1, output_padding=1)
    assert up.shape == x.shape


def test_conv_transpose2d_output_padding_limit():
    with pytest.raises(ValidationError):
        conv_transpose2d(Tensor(rand(1, 2, 4, 4)), Tensor(rand(2, 2, 3, 3)), stride=2, output_padding=2)


# ---- causal conv1d ----


def naive_causal_conv1d(x, w, b, dilation):
    n, cin, t = x.shape
    cout, _, k = w.shape
    pad = (k - 1) * dilation
    xp = np.pad(x, ((0, 0), (0, 0), (pad, 0)))
    out = np.zeros((n, cout, t))
    for s in range(t):
        for tap in range(k):
            out[:, :, s] += np.einsum("nc,oc->no", xp[:, :, s + tap * dilation], w[:, :, tap])
    return out + b[None, :, None]


@pytest.mark.parametrize("dilation", [1, 2, 4])
def test_causal_conv1d_matches_naive(dilation):
    x, w, b = rand(2, 3, 12), rand(4, 3, 5), rand(4)
    out = causal_conv1d(Tensor(x), Tensor(w), Tensor(b), dilation=dilation)
    npt.assert_allclose(out.data, naive_causal_conv1d(x, w, b, dilation), atol=1e-10)
    check(lambda ts: causal_conv1d(ts[0], ts[1], ts[2], dilation=dilation), [x, w, b])


def test_causal_conv1d_no_future_leak():
    # zeroing inputs after time t never changes outputs at or before t
    x = rand(1, 2, 16)
    w, b = rand(3, 2, 4), rand(3)
    full = causal_conv1d(Tensor(x), Tensor(w), Tensor(b), dilation=2).data
    cut = x.copy()
    cut[:, :, 9:] = 0.0
    partial = causal_conv1d(Tensor(cut), Tensor(w), Tensor(b), dilation=2).data
    npt.assert_array_equal(full[:, :, :9], partial[:, :, :9])


# ---- maxpool ----


def test_maxpool_matches_naive():
    x = rand(2, 3, 8, 10)
    out = maxpool2d(Tensor(x), size=2)
    ref = x.reshape(2, 3, 4, 2, 5, 2).max(axis=(3, 5))
    npt.assert_allclose(out.data, ref)


def test_maxpool_requires_divisible_dims():
    with pytest.raises(ValidationError):
        maxpool2d(Tensor(rand(1, 1, 5, 7)), size=2)


def test_maxpool_grad_flows_to_argmax_only():
    x = np.array([[[[1.0, 2.0], [4.0, 3.0]]]])
    t = Tensor(x, requires_grad=True)
    maxpool2d(t, size=2).sum().backward()
    npt.assert_array_equal(t.grad, [[[[0.0, 0.0], [1.0, 0.0]]]])


def test_maxpool_tie_goes_to_first_row_major():
    x = np.full((1, 1, 2, 2), 5.0)
    t = Tensor(x, requires_grad=True)
    maxpool2d(t, size=2).sum().backward()
    npt.assert_array_equal(t.grad, [[[[1.0, 0.0], [0.0, 0.0]]]])


def test_maxpool_gradcheck():
    # distinct values so the argmax is stable under the probe step
    x = np.arange(2 * 2 * 6 * 6, dtype=np.float64).reshape(2, 2, 6, 6)
    x = x + rand(2, 2, 6, 6) * 0.01
    check(lambda ts: maxpool2d(ts[0], size=2), [x])


# ---- losses ----


def test_mse_loss_value_and_grad():
    pred, target = rand(4, 3), rand(4, 3)
    loss = mse_loss(Tensor(pred), Tensor(target))
    npt.assert_allclose(loss.data, ((pred - target) ** 2).mean(), rtol=1e-12)
    check(lambda ts: mse_loss(ts[0], Tensor(target)), [pred])


def test_cross_entropy_uniform_logits():
    # equal logits over 2 classes: loss is ln 2 regardless of labels/weights
    logits = np.zeros((6, 2))
    labels = np.array([0, 1, 1, 0, 1, 0])
    loss = weighted_cross_entropy(Tensor(logits), labels, np.array([0.6, 5.0]))
    npt.assert_allclose(loss.data, np.log(2.0), rtol=1e-12)


def test_cross_entropy_matches_manual():
    logits = rand(5, 2)
    labels = np.array([0, 1, 1, 0, 1])
    class_w = np.array([0.75, 2.5])
    loss = weighted_cross_entropy(Tensor(logits), labels, class_w)
    p = np.exp(logits - logits.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    sample_w = class_w[labels]
    manual = -(sample_w * np.log(p[np.arange(5), labels])).sum() / sample_w.sum()
    npt.assert_allclose(loss.data, manual, rtol=1e-12)


def test_cross_entropy_grad():
    logits = rand(5, 2)
    labels = np.array([0, 1, 1, 0, 1])
    check(lambda ts: weighted_cross_entropy(ts[0], labels, np.array([0.7, 3.0])), [logits])


def test_cross_entropy_unit_weights_match_plain_mean():
    logits = rand(6, 2)
    labels = np.array([0, 1, 0, 1, 1, 0])
    loss = weighted_cross_entropy(Tensor(logits), labels, np.ones(2))
    p = np.exp(logits - logits.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    npt.assert_allclose(loss.data, -np.log(p[np.arange(6), labels]).mean(), rtol=1e-12)


def test_cross_entropy_extreme_logits_finite():
    logits = np.array([[1000.0, -1000.0], [-1000.0, 1000.0]])
    loss = weighted_cross_entropy(Tensor(logits), np.array([0, 1]), np.ones(2))
    assert np.isfinite(loss.data)
    npt.assert_allclose(loss.data, 0.0, atol=1e-9)


def test_softmax_probs_rows_sum_to_one():
    logits = rand(7, 2) * 50
    p = softmax_probs(logits)
    npt.assert_allclose(p.sum(axis=1), 1.0, rtol=1e-12)
    assert (p >= 0).all()
    assert np.isfinite(softmax_probs(np.array([[1e4, -1e4]]))).all()


def test_float32_inputs_keep_float32():
    x = Tensor(rand(2, 3, 8, 8).astype(np.float32))
    w = Tensor(rand(4, 3, 3, 3).astype(np.float32))
    out = conv2d(x, w)
    assert out.data.dtype == np.float32
