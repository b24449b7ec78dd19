"""Reverse-mode autodiff over numpy arrays.

Every op records a backward closure onto the output tensor; Tensor.backward()
runs them in reverse topological order. Broadcasting follows numpy semantics,
with gradients summed back down to the input shape. Convolutions are computed
as a loop over kernel taps, each tap a strided-slice tensordot, which keeps
peak memory far below an im2col buffer at the same arithmetic cost.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from preictal.errors import ValidationError

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference paths)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev")

    def __init__(self, data, requires_grad: bool = False, _prev: tuple = ()):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad and _grad_enabled
        self._backward = None
        self._prev = _prev if self.requires_grad else ()

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def _accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self):
        if self.data.size != 1:
            raise ValidationError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._prev:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # ---- helpers ----

    @staticmethod
    def _lift(value) -> "Tensor":
        if isinstance(value, Tensor):
            return value
        return Tensor(np.asarray(value))

    def _make(self, data: np.ndarray, parents: tuple, backward) -> "Tensor":
        req = _grad_enabled and any(p.requires_grad for p in parents)
        out = Tensor(data, requires_grad=req, _prev=parents if req else ())
        if req:
            out._backward = backward
        return out

    # ---- arithmetic ----

    def __add__(self, other):
        other = self._lift(other)
        out_data = self.data + other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g, other.data.shape))

        return self._make(out_data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        def backward(g):
            if self.requires_grad:
                self._accumulate(-g)

        return self._make(-self.data, (self,), backward)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        out_data = self.data * other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g * self.data, other.data.shape))

        return self._make(out_data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        return self * other ** -1.0

    def __rtruediv__(self, other):
        return self._lift(other) * self ** -1.0

    def __pow__(self, exponent: float):
        if isinstance(exponent, Tensor):
            raise ValidationError("only scalar exponents are supported")
        out_data = self.data**exponent

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * exponent * self.data ** (exponent - 1.0))

        return self._make(out_data, (self,), backward)

    def __matmul__(self, other):
        other = self._lift(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ValidationError("matmul expects 2-D operands")
        out_data = self.data @ other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(g @ other.data.T)
            if other.requires_grad:
                other._accumulate(self.data.T @ g)

        return self._make(out_data, (self, other), backward)

    # ---- reductions and shape ----

    def sum(self, axis=None, keepdims: bool = False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            if not self.requires_grad:
                return
            if axis is None:
                self._accumulate(np.broadcast_to(g, self.data.shape).copy())
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.data.shape).copy())

        return self._make(out_data, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in np.atleast_1d(axis)]
        )
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(count))

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out_data = self.data.reshape(shape)
        in_shape = self.data.shape

        def backward(g):
            if self.requires_grad:
                self._accumulate(g.reshape(in_shape))

        return self._make(out_data, (self,), backward)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.data.ndim)))
        inverse = tuple(np.argsort(axes))

        def backward(g):
            if self.requires_grad:
                self._accumulate(g.transpose(inverse))

        return self._make(self.data.transpose(axes), (self,), backward)

    def __getitem__(self, key):
        out_data = self.data[key]
        in_shape = self.data.shape

        def backward(g):
            if self.requires_grad:
                full = np.zeros(in_shape, dtype=g.dtype)
                np.add.at(full, key, g)
                self._accumulate(full)

        return self._make(out_data, (self,), backward)

    # ---- elementwise nonlinearities ----

    def relu(self):
        mask = self.data > 0

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * mask)

        return self._make(self.data * mask, (self,), backward)

    def exp(self):
        out_data = np.exp(self.data)

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * out_data)

        return self._make(out_data, (self,), backward)

    def log(self):
        def backward(g):
            if self.requires_grad:
                self._accumulate(g / self.data)

        return self._make(np.log(self.data), (self,), backward)

    def tanh(self):
        out_data = np.tanh(self.data)

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * (1.0 - out_data * out_data))

        return self._make(out_data, (self,), backward)

    def sigmoid(self):
        x = self.data
        out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        out_data = out_data.astype(x.dtype)

        def backward(g):
            if self.requires_grad:
                self._accumulate(g * out_data * (1.0 - out_data))

        return self._make(out_data, (self,), backward)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    tensors = [Tensor._lift(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        pieces = np.split(g, splits, axis=axis)
        for t, piece in zip(tensors, pieces):
            if t.requires_grad:
                t._accumulate(piece)

    return tensors[0]._make(out_data, tuple(tensors), backward)


# ---- convolution family ----


def _pad2d(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation. x: (N, Cin, H, W), w: (Cout, Cin, KH, KW)."""
    if x.ndim != 4 or w.ndim != 4:
        raise ValidationError("conv2d expects 4-D input and weight")
    if x.shape[1] != w.shape[1]:
        raise ValidationError(f"channel mismatch: input {x.shape[1]}, weight {w.shape[1]}")
    n, _, h, wid = x.shape
    cout, cin, kh, kw = w.shape
    xp = _pad2d(x.data, padding)
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wid + 2 * padding - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ValidationError(f"kernel {kh}x{kw} does not fit input {h}x{wid} with padding {padding}")

    # im2col: one contiguous patch matrix turns the whole conv (and both
    # gradients) into single GEMM calls, which is far faster than looping
    # over kernel taps with a tiny contraction dimension
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # (N, Cin, Ho, Wo, KH, KW)
    col = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * ho * wo, cin * kh * kw
    )
    w2 = w.data.reshape(cout, cin * kh * kw)
    out_data = (col @ w2.T).reshape(n, ho, wo, cout).transpose(0, 3, 1, 2)
    if b is not None:
        out_data = out_data + b.data[None, :, None, None]
    else:
        out_data = np.ascontiguousarray(out_data)

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gt = g.transpose(0, 2, 3, 1).reshape(n * ho * wo, cout)
        if x.requires_grad:
            dwin = (gt @ w2).reshape(n, ho, wo, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
            gxp = np.zeros_like(xp)
            for u in range(kh):
                for v in range(kw):
                    gxp[:, :, u : u + stride * ho : stride, v : v + stride * wo : stride] += dwin[
                        :, :, :, :, u, v
                    ]
            if padding:
                gxp = gxp[:, :, padding:-padding, padding:-padding]
            x._accumulate(gxp)
        if w.requires_grad:
            w._accumulate((gt.T @ col).reshape(w.shape))
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=(0, 2, 3)))

    return x._make(out_data, parents, backward)


def conv_transpose2d(
    x: Tensor,
    w: Tensor,
    b: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
    output_padding: int = 0,
) -> Tensor:
    """Transposed 2-D convolution (the gradient of conv2d with the same
    geometry). x: (N, Cin, H, W), w: (Cin, Cout, KH, KW).
    Output spatial size: (H-1)*stride - 2*padding + KH + output_padding."""
    if x.ndim != 4 or w.ndim != 4:
        raise ValidationError("conv_transpose2d expects 4-D input and weight")
    if x.shape[1] != w.shape[0]:
        raise ValidationError(f"channel mismatch: input {x.shape[1]}, weight {w.shape[0]}")
    if output_padding >= stride:
        raise ValidationError("output_padding must be smaller than stride")
    n, cin, h, wid = x.shape
    _, cout, kh, kw = w.shape
    ho = (h - 1) * stride - 2 * padding + kh + output_padding
    wo = (wid - 1) * stride - 2 * padding + kw + output_padding
    if ho < 1 or wo < 1:
        raise ValidationError("transposed convolution output size would be empty")

    big_h = (h - 1) * stride + kh + output_padding
    big_w = (wid - 1) * stride + kw + output_padding
    big = np.zeros((n, cout, big_h, big_w), dtype=np.result_type(x.dtype, w.dtype))
    for u in range(kh):
        for v in range(kw):
            contrib = np.tensordot(x.data, w.data[:, :, u, v], axes=([1], [0]))  # (N,H,W,Cout)
            big[:, :, u : u + stride * h : stride, v : v + stride * wid : stride] += contrib.transpose(0, 3, 1, 2)
    out_data = big[:, :, padding : padding + ho, padding : padding + wo]
    if b is not None:
        out_data = out_data + b.data[None, :, None, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gbig = np.zeros((n, cout, big_h, big_w), dtype=g.dtype)
        gbig[:, :, padding : padding + ho, padding : padding + wo] = g
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for u in range(kh):
                for v in range(kw):
                    gs = gbig[:, :, u : u + stride * h : stride, v : v + stride * wid : stride]
                    gx += np.tensordot(gs, w.data[:, :, u, v], axes=([1], [1])).transpose(0, 3, 1, 2)
            x._accumulate(gx)
        if w.requires_grad:
            gw = np.zeros_like(w.data)
            for u in range(kh):
                for v in range(kw):
                    gs = gbig[:, :, u : u + stride * h : stride, v : v + stride * wid : stride]
                    gw[:, :, u, v] = np.tensordot(x.data, gs, axes=([0, 2, 3], [0, 2, 3]))
            w._accumulate(gw)
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=(0, 2, 3)))

    return x._make(out_data, parents, backward)


def causal_conv1d(x: Tensor, w: Tensor, b: Tensor | None = None, dilation: int = 1) -> Tensor:
    """Dilated 1-D convolution with left zero padding so that output t depends
    only on inputs <= t. x: (N, Cin, T), w: (Cout, Cin, K). Output is (N, Cout, T)."""
    if x.ndim != 3 or w.ndim != 3:
        raise ValidationError("causal_conv1d expects 3-D input and weight")
    if x.shape[1] != w.shape[1]:
        raise ValidationError(f"channel mismatch: input {x.shape[1]}, weight {w.shape[1]}")
    n, cin, t = x.shape
    cout, _, k = w.shape
    pad = (k - 1) * dilation
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, 0)))

    acc = np.zeros((n, t, cout), dtype=np.result_type(x.dtype, w.dtype))
    for tap in range(k):
        xs = xp[:, :, tap * dilation : tap * dilation + t]
        acc += np.tensordot(xs, w.data[:, :, tap], axes=([1], [1]))
    out_data = acc.transpose(0, 2, 1)
    if b is not None:
        out_data = out_data + b.data[None, :, None]

    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        gt = g.transpose(0, 2, 1)  # (N, T, Cout)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for tap in range(k):
                gxp[:, :, tap * dilation : tap * dilation + t] += np.tensordot(
                    gt, w.data[:, :, tap], axes=([2], [0])
                ).transpose(0, 2, 1)
            x._accumulate(gxp[:, :, pad:])
        if w.requires_grad:
            gw = np.zeros_like(w.data)
            for tap in range(k):
                xs = xp[:, :, tap * dilation : tap * dilation + t]
                gw[:, :, tap] = np.tensordot(gt, xs, axes=([0, 1], [0, 2]))
            w._accumulate(gw)
        if b is not None and b.requires_grad:
            b._accumulate(g.sum(axis=(0, 2)))

    return x._make(out_data, parents, backward)


def maxpool2d(x: Tensor, size: int = 2) -> Tensor:
    """Non-overlapping max pooling; spatial dims must divide by `size`.
    Gradient flows to the first maximum in row-major order within each window."""
    if x.ndim != 4:
        raise ValidationError("maxpool2d expects 4-D input")
    n, c, h, w = x.shape
    if h % size or w % size:
        raise ValidationError(f"input {h}x{w} not divisible by pool size {size}")
    ho, wo = h // size, w // size
    windows = (
        x.data.reshape(n, c, ho, size, wo, size)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, ho, wo, size * size)
    )
    idx = windows.argmax(axis=-1)
    out_data = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]

    def backward(g):
        if not x.requires_grad:
            return
        flat = np.zeros((n, c, ho, wo, size * size), dtype=g.dtype)
        np.put_along_axis(flat, idx[..., None], g[..., None], axis=-1)
        gx = (
            flat.reshape(n, c, ho, wo, size, size)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h, w)
        )
        x._accumulate(gx)

    return x._make(out_data, (x,), backward)


# ---- losses ----


def mse_loss(pred: Tensor, target: Tensor | np.ndarray) -> Tensor:
    """Mean squared error over all elements."""
    target = Tensor._lift(target)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: pred {pred.shape}, target {target.shape}")
    diff = pred - target
    return (diff * diff).mean()


def weighted_cross_entropy(logits: Tensor, targets: np.ndarray, class_weights: np.ndarray) -> Tensor:
    """Softmax cross entropy with per-class weights, normalized by the sum of
    the sample weights. logits: (N, C); targets: int array (N,)."""
    targets = np.asarray(targets)
    if logits.ndim != 2:
        raise ValidationError("logits must be 2-D (batch, classes)")
    if targets.ndim != 1 or targets.shape[0] != logits.shape[0]:
        raise ValidationError("targets must be 1-D and match the batch size")
    n, c = logits.shape
    if targets.min() < 0 or targets.max() >= c:
        raise ValidationError(f"target labels must lie in [0, {c})")
    weights = np.asarray(class_weights, dtype=logits.dtype.type)
    if weights.shape != (c,):
        raise ValidationError(f"class_weights must have shape ({c},)")

    z = logits.data
    m = z.max(axis=1, keepdims=True)
    ez = np.exp(z - m)
    denom = ez.sum(axis=1, keepdims=True)
    logp = (z - m) - np.log(denom)
    sample_w = weights[targets]
    w_sum = sample_w.sum()
    loss = -(sample_w * logp[np.arange(n), targets]).sum() / w_sum

    def backward(g):
        if not logits.requires_grad:
            return
        p = ez / denom
        onehot = np.zeros_like(p)
        onehot[np.arange(n), targets] = 1.0
        glogits = (p - onehot) * (sample_w / w_sum)[:, None] * g
        logits._accumulate(glogits.astype(logits.dtype))

    return logits._make(np.asarray(loss, dtype=z.dtype), (logits,), backward)


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax on raw arrays (for scoring, no grad)."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
