"""The six architectures: three supervised classifiers (CNN, CNN-LSTM, TCN)
and their autoencoder counterparts for anomaly scoring.

Classifiers emit (N, 2) logits; autoencoders reconstruct their input and are
scored by per-sample mean squared reconstruction error. All expect inputs
prepared by the matching pipeline: 128x128 log-spectrogram images for the
CNN, sequences of 64x64 sub-images for the CNN-LSTM, and standardized
4x-downsampled raw sequences for the TCN.
"""

from __future__ import annotations

import numpy as np

from preictal.autodiff import tensor as T
from preictal.autodiff.layers import (
    LSTM,
    CausalConv1d,
    Conv1d,
    Conv2d,
    ConvTranspose2d,
    Dropout,
    Linear,
    Module,
)
from preictal.autodiff.tensor import Tensor
from preictal.errors import ValidationError

ARCHITECTURES = ("cnn", "cnn_lstm", "tcn", "cnn_ae", "cnn_lstm_ae", "tcn_ae")

CNN_IMAGE_SIZE = 128
SUB_IMAGE_SIZE = 64
EMBEDDING_SIZE = 64
TCN_CHANNELS = 32
TCN_BLOCKS = 6
TCN_KERNEL = 5
TCN_AE_CHANNELS = 16
TCN_AE_BLOCKS = 3


def _conv_block(cin: int, cout: int, rng) -> Conv2d:
    return Conv2d(cin, cout, 5, rng, padding=2)


class Cnn(Module):
    """Three conv blocks (8, 16, 32 filters, kernel 5, 2x2 max pooling), then
    FC 128 -> FC 64 -> FC 2 with ReLU and dropout 0.5 between the FC layers."""

    def __init__(self, in_channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv1 = _conv_block(in_channels, 8, rng)
        self.conv2 = _conv_block(8, 16, rng)
        self.conv3 = _conv_block(16, 32, rng)
        flat = 32 * (CNN_IMAGE_SIZE // 8) ** 2
        self.fc1 = Linear(flat, 128, rng)
        self.fc2 = Linear(128, 64, rng)
        self.fc3 = Linear(64, 2, rng)
        self.drop1 = Dropout(0.5, rng)
        self.drop2 = Dropout(0.5, rng)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[2] != CNN_IMAGE_SIZE or x.shape[3] != CNN_IMAGE_SIZE:
            raise ValidationError(f"expected (N, C, 128, 128) images, got {x.shape}")
        h = T.maxpool2d(self.conv1(x).relu())
        h = T.maxpool2d(self.conv2(h).relu())
        h = T.maxpool2d(self.conv3(h).relu())
        h = h.reshape(h.shape[0], -1)
        h = self.drop1(self.fc1(h).relu())
        h = self.drop2(self.fc2(h).relu())
        return self.fc3(h)


class _SubImageEncoder(Module):
    """Two conv blocks (8, 16 filters) on a 64x64 sub-image, flattened to a
    32-dim feature vector."""

    def __init__(self, in_channels: int, rng: np.random.Generator, feature_size: int = 32):
        super().__init__()
        self.conv1 = _conv_block(in_channels, 8, rng)
        self.conv2 = _conv_block(8, 16, rng)
        flat = 16 * (SUB_IMAGE_SIZE // 4) ** 2
        self.fc = Linear(flat, feature_size, rng)

    def forward(self, x: Tensor) -> Tensor:
        h = T.maxpool2d(self.conv1(x).relu())
        h = T.maxpool2d(self.conv2(h).relu())
        return self.fc(h.reshape(h.shape[0], -1)).relu()


class CnnLstm(Module):
    """A shared CNN encoder turns each sub-image into a 32-dim feature; the
    sequence of features runs through a 2-layer LSTM (hidden 16) and the last
    output feeds FC 96 -> FC 2."""

    def __init__(self, in_channels: int, rng: np.random.Generator):
        super().__init__()
        self.encoder = _SubImageEncoder(in_channels, rng)
        self.lstm = LSTM(32, 16, num_layers=2, rng=rng)
        self.fc1 = Linear(16, 96, rng)
        self.fc2 = Linear(96, 2, rng)
        self.drop = Dropout(0.5, rng)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 5 or x.shape[3] != SUB_IMAGE_SIZE or x.shape[4] != SUB_IMAGE_SIZE:
            raise ValidationError(f"expected (N, n, C, 64, 64) sub-images, got {x.shape}")
        n_batch, n_steps = x.shape[0], x.shape[1]
        if n_steps < 1:
            raise ValidationError("need at least one sub-image per window")
        feats = self.encoder(x.reshape(n_batch * n_steps, x.shape[2], SUB_IMAGE_SIZE, SUB_IMAGE_SIZE))
        feats = feats.reshape(n_batch, n_steps, 32)
        steps = [feats[:, t, :] for t in range(n_steps)]
        outputs, _ = self.lstm(steps)
        h = self.drop(self.fc1(outputs[-1]).relu())
        return self.fc2(h)


class TcnBlock(Module):
    """Residual block of two weight-normalized causal dilated conv sub-blocks
    (conv -> ReLU -> dropout); a 1x1 conv aligns the skip path when the
    channel count changes."""

    def __init__(
        self,
        cin: int,
        cout: int,
        dilation: int,
        rng: np.random.Generator,
        dropout: float = 0.2,
        final_relu: bool = True,
    ):
        super().__init__()
        self.conv1 = CausalConv1d(cin, cout, TCN_KERNEL, rng, dilation=dilation, weight_norm=True)
        self.conv2 = CausalConv1d(cout, cout, TCN_KERNEL, rng, dilation=dilation, weight_norm=True)
        self.drop1 = Dropout(dropout, rng)
        self.drop2 = Dropout(dropout, rng)
        self.skip = Conv1d(cin, cout, 1, rng) if cin != cout else None
        self.final_relu = final_relu

    def forward(self, x: Tensor) -> Tensor:
        h = self.drop1(self.conv1(x).relu())
        h = self.drop2(self.conv2(h).relu())
        res = self.skip(x) if self.skip is not None else x
        out = h + res
        return out.relu() if self.final_relu else out


class Tcn(Module):
    """Six residual TCN blocks of 32 channels, dilation doubling per block
    (1..32), then a pointwise conv, global average over time, FC 64 -> FC 2."""

    def __init__(self, in_channels: int, rng: np.random.Generator):
        super().__init__()
        cin = in_channels
        for n in range(TCN_BLOCKS):
            setattr(self, f"block{n}", TcnBlock(cin, TCN_CHANNELS, 2**n, rng))
            cin = TCN_CHANNELS
        self.head_conv = Conv1d(TCN_CHANNELS, TCN_CHANNELS, 1, rng)
        self.fc1 = Linear(TCN_CHANNELS, 64, rng)
        self.fc2 = Linear(64, 2, rng)

    def features(self, x: Tensor) -> Tensor:
        """Per-step features after the residual stack: (N, 32, T). Output at
        time t depends on inputs in (t-504, t] only."""
        if x.ndim != 3:
            raise ValidationError(f"expected (N, C, T) sequences, got {x.shape}")
        if x.shape[2] < 1:
            raise ValidationError("sequence must have at least one step")
        h = x
        for n in range(TCN_BLOCKS):
            h = getattr(self, f"block{n}")(h)
        return self.head_conv(h).relu()

    def forward(self, x: Tensor) -> Tensor:
        h = self.features(x).mean(axis=2)
        return self.fc2(self.fc1(h).relu())


class CnnAe(Module):
    """Autoencoder over 128x128 images: the CNN's three conv blocks, a
    64-dim embedding, and a transposed-conv mirror back to input shape."""

    def __init__(self, in_channels: int, rng: np.random.Generator):
        super().__init__()
        self.conv1 = _conv_block(in_channels, 8, rng)
        self.conv2 = _conv_block(8, 16, rng)
        self.conv3 = _conv_block(16, 32, rng)
        self._flat = 32 * (CNN_IMAGE_SIZE // 8) ** 2
        self.fc_enc = Linear(self._flat, EMBEDDING_SIZE, rng)
        self.fc_dec = Linear(EMBEDDING_SIZE, self._flat, rng)
        self.deconv1 = ConvTranspose2d(32, 16, 5, rng, stride=2, padding=2, output_padding=1)
        self.deconv2 = ConvTranspose2d(16, 8, 5, rng, stride=2, padding=2, output_padding=1)
        self.deconv3 = ConvTranspose2d(8, in_channels, 5, rng, stride=2, padding=2, output_padding=1)

    def encode(self, x: Tensor) -> Tensor:
        h = T.maxpool2d(self.conv1(x).relu())
        h = T.maxpool2d(self.conv2(h).relu())
        h = T.maxpool2d(self.conv3(h).relu())
        return self.fc_enc(h.reshape(h.shape[0], -1))

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[2] != CNN_IMAGE_SIZE or x.shape[3] != CNN_IMAGE_SIZE:
            raise ValidationError(f"expected (N, C, 128, 128) images, got {x.shape}")
        z = self.encode(x)
        h = self.fc_dec(z).relu()
        side = CNN_IMAGE_SIZE // 8
        h = h.reshape(h.shape[0], 32, side, side)
        h = self.deconv1(h).relu()
        h = self.deconv2(h).relu()
        return self.deconv3(h)


class CnnLstmAe(Module):
    """Per-sub-image CNN encoders feed an LSTM whose last hidden state is the
    64-dim embedding; the decoder LSTM re-expands it into one vector per
    sub-image, each decoded by a transposed-conv mirror."""

    def __init__(self, in_channels: int, rng: np.random.Generator):
        super().__init__()
        self.encoder = _SubImageEncoder(in_channels, rng)
        self.enc_lstm = LSTM(32, EMBEDDING_SIZE, num_layers=1, rng=rng)
        self.dec_lstm = LSTM(EMBEDDING_SIZE, EMBEDDING_SIZE, num_layers=1, rng=rng)
        self.fc_feat = Linear(EMBEDDING_SIZE, 32, rng)
        flat = 16 * (SUB_IMAGE_SIZE // 4) ** 2
        self.fc_dec = Linear(32, flat, rng)
        self.deconv1 = ConvTranspose2d(16, 8, 5, rng, stride=2, padding=2, output_padding=1)
        self.deconv2 = ConvTranspose2d(8, in_channels, 5, rng, stride=2, padding=2, output_padding=1)

    def encode(self, x: Tensor) -> Tensor:
        n_batch, n_steps = x.shape[0], x.shape[1]
        feats = self.encoder(x.reshape(n_batch * n_steps, x.shape[2], SUB_IMAGE_SIZE, SUB_IMAGE_SIZE))
        feats = feats.reshape(n_batch, n_steps, 32)
        outputs, _ = self.enc_lstm([feats[:, t, :] for t in range(n_steps)])
        return outputs[-1]

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 5 or x.shape[3] != SUB_IMAGE_SIZE or x.shape[4] != SUB_IMAGE_SIZE:
            raise ValidationError(f"expected (N, n, C, 64, 64) sub-images, got {x.shape}")
        n_batch, n_steps, channels = x.shape[0], x.shape[1], x.shape[2]
        if n_steps < 1:
            raise ValidationError("need at least one sub-image per window")
        z = self.encode(x)
        outputs, _ = self.dec_lstm([z] * n_steps)
        side = SUB_IMAGE_SIZE // 4
        recon_steps = []
        for h in outputs:
            f = self.fc_feat(h).relu()
            g = self.fc_dec(f).relu().reshape(n_batch, 16, side, side)
            g = self.deconv1(g).relu()
            recon_steps.append(self.deconv2(g).reshape(n_batch, 1, channels, SUB_IMAGE_SIZE, SUB_IMAGE_SIZE))
        return T.concat(recon_steps, axis=1)


class TcnAe(Module):
    """Sequence autoencoder: three 16-channel TCN blocks (dilations 1, 2, 4),
    a pointwise conv, and a flatten -> FC 64 embedding; the decoder mirrors
    the stack with dilations reversed and projects back to the input channels.
    The sequence length is fixed at construction by the flatten."""

    def __init__(self, in_channels: int, seq_len: int, rng: np.random.Generator):
        super().__init__()
        if seq_len < 1:
            raise ValidationError(f"sequence length must be positive, got {seq_len}")
        self.seq_len = seq_len
        self.in_channels = in_channels
        cin = in_channels
        for n in range(TCN_AE_BLOCKS):
            setattr(self, f"enc{n}", TcnBlock(cin, TCN_AE_CHANNELS, 2**n, rng))
            cin = TCN_AE_CHANNELS
        self.enc_conv = Conv1d(TCN_AE_CHANNELS, TCN_AE_CHANNELS, 1, rng)
        flat = TCN_AE_CHANNELS * seq_len
        self.fc_enc = Linear(flat, EMBEDDING_SIZE, rng)
        self.fc_dec = Linear(EMBEDDING_SIZE, flat, rng)
        self.dec_conv = Conv1d(TCN_AE_CHANNELS, TCN_AE_CHANNELS, 1, rng)
        for n in range(TCN_AE_BLOCKS):
            last = n == TCN_AE_BLOCKS - 1
            cout = in_channels if last else TCN_AE_CHANNELS
            dilation = 2 ** (TCN_AE_BLOCKS - 1 - n)
            # the last block emits the reconstruction, which must be able to
            # go negative (inputs are standardized), so it skips the ReLU
            setattr(self, f"dec{n}", TcnBlock(TCN_AE_CHANNELS, cout, dilation, rng, final_relu=not last))

    def encode(self, x: Tensor) -> Tensor:
        h = x
        for n in range(TCN_AE_BLOCKS):
            h = getattr(self, f"enc{n}")(h)
        h = self.enc_conv(h).relu()
        return self.fc_enc(h.reshape(h.shape[0], -1))

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 3:
            raise ValidationError(f"expected (N, C, T) sequences, got {x.shape}")
        if x.shape[2] != self.seq_len:
            raise ValidationError(f"model built for length {self.seq_len}, got {x.shape[2]}")
        z = self.encode(x)
        h = self.fc_dec(z).relu().reshape(x.shape[0], TCN_AE_CHANNELS, self.seq_len)
        h = self.dec_conv(h).relu()
        for n in range(TCN_AE_BLOCKS):
            h = getattr(self, f"dec{n}")(h)
        return h


def build_model(
    arch: str, in_channels: int, rng: np.random.Generator, seq_len: int | None = None
) -> Module:
    if arch == "cnn":
        return Cnn(in_channels, rng)
    if arch == "cnn_lstm":
        return CnnLstm(in_channels, rng)
    if arch == "tcn":
        return Tcn(in_channels, rng)
    if arch == "cnn_ae":
        return CnnAe(in_channels, rng)
    if arch == "cnn_lstm_ae":
        return CnnLstmAe(in_channels, rng)
    if arch == "tcn_ae":
        if seq_len is None:
            raise ValidationError("tcn_ae needs the sequence length at build time")
        return TcnAe(in_channels, seq_len, rng)
    raise ValidationError(f"unknown architecture {arch!r}, expected one of {ARCHITECTURES}")


def is_autoencoder(arch: str) -> bool:
    return arch.endswith("_ae")


def save_model(model: Module, arch: str) -> bytes:
    """Serialize parameters with the architecture tag for load-time checks."""
    from preictal.autodiff.checkpoint import save_checkpoint

    return save_checkpoint(model.state_dict(), metadata={"architecture": arch})


def load_model_state(data: bytes, expected_arch: str | None = None) -> tuple[dict, dict]:
    """Read a checkpoint back; raises if the stored architecture tag does not
    match the expected one. Returns (arrays, metadata)."""
    from preictal.autodiff.checkpoint import load_checkpoint

    arrays, metadata = load_checkpoint(data)
    arch = metadata.get("architecture")
    if expected_arch is not None and arch != expected_arch:
        raise ValidationError(
            f"checkpoint holds architecture {arch!r}, expected {expected_arch!r}"
        )
    return arrays, metadata


def anomaly_scores(model: Module, x: np.ndarray, batch_size: int = 128) -> np.ndarray:
    """Per-sample mean squared reconstruction error, eval mode, no gradients."""
    model.eval()
    scores = []
    with T.no_grad():
        for i in range(0, x.shape[0], batch_size):
            batch = Tensor(x[i : i + batch_size])
            recon = model(batch).data
            if recon.shape != batch.data.shape:
                raise ValidationError(
                    f"reconstruction shape {recon.shape} != input {batch.data.shape}"
                )
            diff = (recon - batch.data).reshape(recon.shape[0], -1)
            scores.append(np.mean(diff * diff, axis=1))
    return np.concatenate(scores).astype(np.float64)
