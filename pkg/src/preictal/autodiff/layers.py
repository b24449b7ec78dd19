"""Neural network layers built on the Tensor engine."""

from __future__ import annotations

import numpy as np

from preictal.autodiff import tensor as T
from preictal.autodiff.tensor import Tensor
from preictal.errors import ValidationError


class Parameter(Tensor):
    def __init__(self, data):
        super().__init__(np.asarray(data, dtype=np.float32), requires_grad=True)


def _he_uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class Module:
    """Base class: tracks sub-modules and parameters by attribute name."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}
        self._modules: dict[str, Module] = {}
        self.training = True

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self.__dict__.setdefault("_params", {})[name] = value
        elif isinstance(value, Module):
            self.__dict__.setdefault("_modules", {})[name] = value
        object.__setattr__(self, name, value)

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_parameters(self, prefix: str = "") -> list[tuple[str, Parameter]]:
        out = [(prefix + name, p) for name, p in self._params.items()]
        for name, mod in self._modules.items():
            out.extend(mod.named_parameters(prefix + name + "."))
        return out

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def train(self):
        self.training = True
        for mod in self._modules.values():
            mod.train()
        return self

    def eval(self):
        self.training = False
        for mod in self._modules.values():
            mod.eval()
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        unexpected = set(state) - set(own)
        if missing or unexpected:
            raise ValidationError(
                f"state dict mismatch: missing {sorted(missing)}, unexpected {sorted(unexpected)}"
            )
        for name, p in own.items():
            if p.data.shape != state[name].shape:
                raise ValidationError(
                    f"shape mismatch for {name}: model {p.data.shape}, saved {state[name].shape}"
                )
            p.data = state[name].astype(np.float32).copy()

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Sequential(Module):
    def __init__(self, *layers: Module):
        super().__init__()
        self.layers = list(layers)
        for i, layer in enumerate(layers):
            setattr(self, f"layer{i}", layer)

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


class ReLU(Module):
    def forward(self, x: Tensor) -> Tensor:
        return x.relu()


class MaxPool2d(Module):
    def __init__(self, size: int = 2):
        super().__init__()
        self.size = size

    def forward(self, x: Tensor) -> Tensor:
        return T.maxpool2d(x, self.size)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.weight = Parameter(_he_uniform(rng, (in_features, out_features), in_features))
        self.bias = Parameter(np.zeros(out_features, dtype=np.float32)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = x @ self.weight
        if self.bias is not None:
            out = out + self.bias
        return out


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(
            _he_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))
        self.stride = stride
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ConvTranspose2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
        output_padding: int = 0,
    ):
        super().__init__()
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(
            _he_uniform(rng, (in_channels, out_channels, kernel_size, kernel_size), fan_in)
        )
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))
        self.stride = stride
        self.padding = padding
        self.output_padding = output_padding

    def forward(self, x: Tensor) -> Tensor:
        return T.conv_transpose2d(
            x,
            self.weight,
            self.bias,
            stride=self.stride,
            padding=self.padding,
            output_padding=self.output_padding,
        )


class CausalConv1d(Module):
    """Dilated causal convolution, optionally weight-normalized.

    With weight_norm=True the effective kernel is g * v / ||v||, where the
    norm is taken per output channel over all taps and input channels."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        dilation: int = 1,
        weight_norm: bool = False,
    ):
        super().__init__()
        fan_in = in_channels * kernel_size
        w0 = _he_uniform(rng, (out_channels, in_channels, kernel_size), fan_in)
        self.dilation = dilation
        self.weight_norm = weight_norm
        if weight_norm:
            norms = np.sqrt((w0.astype(np.float64) ** 2).sum(axis=(1, 2), keepdims=True))
            self.weight_v = Parameter(w0)
            self.weight_g = Parameter(norms.astype(np.float32))
        else:
            self.weight = Parameter(w0)
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def effective_weight(self) -> Tensor:
        if not self.weight_norm:
            return self.weight
        norm = ((self.weight_v * self.weight_v).sum(axis=(1, 2), keepdims=True) + 1e-12) ** 0.5
        return self.weight_v * (self.weight_g / norm)

    def forward(self, x: Tensor) -> Tensor:
        return T.causal_conv1d(x, self.effective_weight(), self.bias, dilation=self.dilation)


class Conv1d(Module):
    """Pointwise (kernel 1) or unpadded 1-D convolution."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: np.random.Generator):
        super().__init__()
        fan_in = in_channels * kernel_size
        self.weight = Parameter(_he_uniform(rng, (out_channels, in_channels, kernel_size), fan_in))
        self.bias = Parameter(np.zeros(out_channels, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        # causal_conv1d with dilation 1 and kernel 1 is an unpadded pointwise
        # conv; larger kernels here would left-pad, so restrict to k == 1
        if self.weight.shape[2] != 1:
            raise ValidationError("Conv1d only supports kernel size 1")
        return T.causal_conv1d(x, self.weight, self.bias, dilation=1)


class Dropout(Module):
    """Inverted dropout driven by an explicit generator for reproducibility."""

    def __init__(self, p: float, rng: np.random.Generator):
        super().__init__()
        if not 0 <= p < 1:
            raise ValidationError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        if not self.training or self.p == 0:
            return x
        keep = 1.0 - self.p
        mask = (self.rng.random(x.shape) < keep).astype(x.data.dtype) / keep
        return x * Tensor(mask)


class LSTM(Module):
    """Multi-layer LSTM. Input (N, T, D); returns (outputs, (h, c)) where
    outputs is a list of per-step hidden Tensors (N, H) from the last layer.

    Gate order is input, forget, cell, output; the forget gate bias starts
    at 1 so early training does not flush the cell state."""

    def __init__(self, input_size: int, hidden_size: int, num_layers: int, rng: np.random.Generator):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        bound = 1.0 / np.sqrt(hidden_size)
        for layer in range(num_layers):
            d = input_size if layer == 0 else hidden_size
            wx = rng.uniform(-bound, bound, size=(d, 4 * hidden_size)).astype(np.float32)
            wh = rng.uniform(-bound, bound, size=(hidden_size, 4 * hidden_size)).astype(np.float32)
            b = np.zeros(4 * hidden_size, dtype=np.float32)
            b[hidden_size : 2 * hidden_size] = 1.0
            setattr(self, f"wx{layer}", Parameter(wx))
            setattr(self, f"wh{layer}", Parameter(wh))
            setattr(self, f"b{layer}", Parameter(b))

    def forward(self, steps: list[Tensor]):
        if not steps:
            raise ValidationError("LSTM needs at least one time step")
        n = steps[0].shape[0]
        hsz = self.hidden_size
        outputs = steps
        final_h, final_c = [], []
        for layer in range(self.num_layers):
            wx = getattr(self, f"wx{layer}")
            wh = getattr(self, f"wh{layer}")
            b = getattr(self, f"b{layer}")
            h = Tensor(np.zeros((n, hsz), dtype=np.float32))
            c = Tensor(np.zeros((n, hsz), dtype=np.float32))
            layer_out = []
            for x_t in outputs:
                gates = x_t @ wx + h @ wh + b
                i = gates[:, 0:hsz].sigmoid()
                f = gates[:, hsz : 2 * hsz].sigmoid()
                g = gates[:, 2 * hsz : 3 * hsz].tanh()
                o = gates[:, 3 * hsz : 4 * hsz].sigmoid()
                c = f * c + i * g
                h = o * c.tanh()
                layer_out.append(h)
            outputs = layer_out
            final_h.append(h)
            final_c.append(c)
        return outputs, (final_h, final_c)
