"""Training loops and scoring.

Supervised models minimize class-weighted cross entropy with weights
N_total / (2 * N_class) computed from the training labels. Autoencoders
minimize plain MSE and must see interictal windows only; a preictal or
held-out window anywhere in the training input is a hard LeakageError.
Everything is seeded: batch order, dropout, and initialization all flow from
explicit generators, so one (seed, config, data) triple gives one result.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from preictal.autodiff import tensor as T
from preictal.autodiff.layers import Module
from preictal.autodiff.optim import Adam
from preictal.autodiff.tensor import Tensor, mse_loss, softmax_probs, weighted_cross_entropy
from preictal.errors import LeakageError, ValidationError
from preictal.models import is_autoencoder
from preictal.segmentation import INTERICTAL, LabeledWindow

SUPERVISED_DEFAULTS = {"epochs": 100, "batch_size": 128, "learning_rate": 1e-4}
UNSUPERVISED_DEFAULTS = {"epochs": 500, "batch_size": 128, "learning_rate": 5e-4}


@dataclass(frozen=True)
class TrainConfig:
    architecture: str
    mode: str = "supervised"  # or "unsupervised"
    epochs: int | None = None
    batch_size: int | None = None
    learning_rate: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("supervised", "unsupervised"):
            raise ValidationError(f"mode must be supervised or unsupervised, got {self.mode!r}")
        if self.mode == "unsupervised" and not is_autoencoder(self.architecture):
            raise ValidationError(f"{self.architecture!r} is not an autoencoder")
        if self.mode == "supervised" and is_autoencoder(self.architecture):
            raise ValidationError(f"{self.architecture!r} has no supervised head")

    def resolved(self) -> "TrainConfig":
        defaults = SUPERVISED_DEFAULTS if self.mode == "supervised" else UNSUPERVISED_DEFAULTS
        return replace(
            self,
            epochs=self.epochs if self.epochs is not None else defaults["epochs"],
            batch_size=self.batch_size if self.batch_size is not None else defaults["batch_size"],
            learning_rate=self.learning_rate
            if self.learning_rate is not None
            else defaults["learning_rate"],
        )


def class_weights(labels: np.ndarray, n_classes: int = 2) -> np.ndarray:
    """w_c = N_total / (n_classes * N_c)."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
    if np.any(counts == 0):
        raise ValidationError(f"training set is missing a class (counts {counts.tolist()})")
    return labels.size / (n_classes * counts)


def _guard_no_holdout(windows: list[LabeledWindow], context: str):
    if any(w.held_out for w in windows):
        raise LeakageError(f"held-out test windows reached {context}")


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for i in range(0, n, batch_size):
        yield order[i : i + batch_size]


def train_supervised(
    model: Module,
    x: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    windows: list[LabeledWindow] | None = None,
) -> list[float]:
    """Train in place; returns mean training loss per epoch."""
    config = config.resolved()
    labels = np.asarray(labels, dtype=np.int64)
    if x.shape[0] != labels.shape[0]:
        raise ValidationError("inputs and labels disagree on sample count")
    if windows is not None:
        _guard_no_holdout(windows, "supervised training")
    weights = class_weights(labels)

    model.train()
    opt = Adam(model.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    trace = []
    for _ in range(config.epochs):
        total, seen = 0.0, 0
        for idx in _epoch_batches(x.shape[0], config.batch_size, rng):
            loss = weighted_cross_entropy(model(Tensor(x[idx])), labels[idx], weights)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * idx.size
            seen += idx.size
        trace.append(total / seen)
    return trace


def train_autoencoder(
    model: Module,
    x: np.ndarray,
    config: TrainConfig,
    windows: list[LabeledWindow],
) -> list[float]:
    """Train an autoencoder on interictal-only data; returns loss per epoch."""
    config = config.resolved()
    if len(windows) != x.shape[0]:
        raise ValidationError("window metadata and input array disagree on sample count")
    _guard_no_holdout(windows, "autoencoder training")
    bad = [w for w in windows if w.label != INTERICTAL]
    if bad:
        raise LeakageError(
            f"{len(bad)} non-interictal window(s) in autoencoder training input"
        )

    model.train()
    opt = Adam(model.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    trace = []
    for _ in range(config.epochs):
        total, seen = 0.0, 0
        for idx in _epoch_batches(x.shape[0], config.batch_size, rng):
            batch = Tensor(x[idx])
            loss = mse_loss(model(batch), batch.data)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * idx.size
            seen += idx.size
        trace.append(total / seen)
    return trace


def score_windows(model: Module, arch: str, x: np.ndarray, batch_size: int = 128) -> np.ndarray:
    """Per-window score, higher = more preictal. Supervised models return the
    preictal softmax probability; autoencoders the reconstruction error."""
    from preictal.models import anomaly_scores

    if is_autoencoder(arch):
        return anomaly_scores(model, x, batch_size)
    model.eval()
    probs = []
    with T.no_grad():
        for i in range(0, x.shape[0], batch_size):
            logits = model(Tensor(x[i : i + batch_size])).data
            probs.append(softmax_probs(logits)[:, 1])
    return np.concatenate(probs).astype(np.float64)
