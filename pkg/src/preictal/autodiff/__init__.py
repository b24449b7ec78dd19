"""Small reverse-mode autodiff engine on numpy arrays.

Tensor holds an ndarray plus a gradient and a backward closure; ops build the
graph dynamically and backward() walks it in reverse topological order. Only
what the models in this package need is implemented, but every op carries a
real vector-Jacobian product verified by finite differences.
"""

from preictal.autodiff.tensor import (
    Tensor,
    no_grad,
    concat,
    conv2d,
    conv_transpose2d,
    causal_conv1d,
    maxpool2d,
    mse_loss,
    weighted_cross_entropy,
)
from preictal.autodiff.layers import (
    Module,
    Parameter,
    Linear,
    Conv2d,
    ConvTranspose2d,
    CausalConv1d,
    LSTM,
    Dropout,
    Sequential,
    ReLU,
    MaxPool2d,
)
from preictal.autodiff.optim import Adam
from preictal.autodiff.checkpoint import save_checkpoint, load_checkpoint
from preictal.autodiff.gradcheck import gradcheck

__all__ = [
    "Tensor",
    "no_grad",
    "concat",
    "conv2d",
    "conv_transpose2d",
    "causal_conv1d",
    "maxpool2d",
    "mse_loss",
    "weighted_cross_entropy",
    "Module",
    "Parameter",
    "Linear",
    "Conv2d",
    "ConvTranspose2d",
    "CausalConv1d",
    "LSTM",
    "Dropout",
    "Sequential",
    "ReLU",
    "MaxPool2d",
    "Adam",
    "save_checkpoint",
    "load_checkpoint",
    "gradcheck",
]
