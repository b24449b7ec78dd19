"""Tests for training loops, class weighting, leakage guards, and scoring."""

import numpy as np
import numpy.testing as npt
import pytest

from preictal.errors import LeakageError, ValidationError
from preictal.models import build_model
from preictal.segmentation import INTERICTAL, PREICTAL, LabeledWindow
from preictal.training import (
    SUPERVISED_DEFAULTS,
    UNSUPERVISED_DEFAULTS,
    TrainConfig,
    class_weights,
    score_windows,
    train_autoencoder,
    train_supervised,
)

rng = np.random.default_rng(11)


def window(label=INTERICTAL, held_out=False):
    return LabeledWindow(data=None, label=label, seizure_index=0, start_s=0.0, held_out=held_out)


# ---- config ----


def test_defaults_resolved_per_mode():
    sup = TrainConfig(architecture="tcn").resolved()
    assert (sup.epochs, sup.batch_size, sup.learning_rate) == (100, 128, 1e-4)
    unsup = TrainConfig(architecture="tcn_ae", mode="unsupervised").resolved()
    assert (unsup.epochs, unsup.batch_size, unsup.learning_rate) == (500, 128, 5e-4)
    assert SUPERVISED_DEFAULTS["learning_rate"] == 1e-4
    assert UNSUPERVISED_DEFAULTS["learning_rate"] == 5e-4


def test_explicit_values_beat_defaults():
    config = TrainConfig(architecture="tcn", epochs=7, learning_rate=0.5).resolved()
    assert config.epochs == 7
    assert config.learning_rate == 0.5
    assert config.batch_size == 128


def test_mode_architecture_compatibility():
    with pytest.raises(ValidationError):
        TrainConfig(architecture="cnn", mode="unsupervised")
    with pytest.raises(ValidationError):
        TrainConfig(architecture="cnn_ae", mode="supervised")
    with pytest.raises(ValidationError):
        TrainConfig(architecture="tcn", mode="both")


# ---- class weights ----


def test_class_weights_pinned_example():
    labels = np.array([0] * 900 + [1] * 100)
    npt.assert_allclose(class_weights(labels), [1000 / 1800, 1000 / 200])
    npt.assert_allclose(class_weights(labels), [5 / 9, 5.0])


def test_class_weights_balanced_are_unit():
    npt.assert_allclose(class_weights(np.array([0, 1, 0, 1])), [1.0, 1.0])


def test_class_weights_missing_class():
    with pytest.raises(ValidationError):
        class_weights(np.array([0, 0, 0]))


# ---- supervised loop ----


def separable_sequences(n=40, t=64):
    labels = np.arange(n) % 2
    x = rng.standard_normal((n, 2, t)).astype(np.float32) * 0.1
    x[labels == 1] += 2.0
    return x, labels.astype(np.int64)


def test_supervised_loss_decreases_and_trace_length():
    x, labels = separable_sequences()
    model = build_model("tcn", 2, np.random.default_rng(0))
    config = TrainConfig(architecture="tcn", epochs=12, batch_size=16, learning_rate=1e-3)
    trace = train_supervised(model, x, labels, config)
    assert len(trace) == 12
    assert trace[-1] < 0.5 * trace[0]


def test_supervised_deterministic_given_seed():
    x, labels = separable_sequences(n=20)
    traces = []
    for _ in range(2):
        model = build_model("tcn", 2, np.random.default_rng(5))
        config = TrainConfig(architecture="tcn", epochs=3, batch_size=8, seed=9)
        traces.append(train_supervised(model, x, labels, config))
    assert traces[0] == traces[1]


def test_supervised_seed_changes_batch_order():
    x, labels = separable_sequences(n=20)
    traces = []
    for seed in (0, 1):
        model = build_model("tcn", 2, np.random.default_rng(5))
        config = TrainConfig(architecture="tcn", epochs=3, batch_size=8, seed=seed)
        traces.append(train_supervised(model, x, labels, config))
    assert traces[0] != traces[1]


def test_supervised_rejects_held_out_windows():
    x, labels = separable_sequences(n=4)
    model = build_model("tcn", 2, np.random.default_rng(0))
    config = TrainConfig(architecture="tcn", epochs=1)
    ws = [window(), window(), window(held_out=True), window()]
    with pytest.raises(LeakageError):
        train_supervised(model, x, labels, config, windows=ws)


def test_supervised_shape_mismatch():
    model = build_model("tcn", 2, np.random.default_rng(0))
    with pytest.raises(ValidationError):
        train_supervised(
            model,
            np.zeros((4, 2, 64), dtype=np.float32),
            np.array([0, 1]),
            TrainConfig(architecture="tcn", epochs=1),
        )


# ---- autoencoder loop ----


def test_autoencoder_trains_on_interictal_only():
    x = rng.standard_normal((16, 2, 64)).astype(np.float32)
    ws = [window() for _ in range(16)]
    model = build_model("tcn_ae", 2, np.random.default_rng(0), seq_len=64)
    config = TrainConfig(
        architecture="tcn_ae", mode="unsupervised", epochs=10, batch_size=8, learning_rate=1e-3
    )
    trace = train_autoencoder(model, x, config, ws)
    assert len(trace) == 10
    assert trace[-1] < trace[0]


def test_autoencoder_rejects_preictal_windows():
    x = rng.standard_normal((4, 2, 64)).astype(np.float32)
    ws = [window(), window(PREICTAL), window(), window()]
    model = build_model("tcn_ae", 2, np.random.default_rng(0), seq_len=64)
    config = TrainConfig(architecture="tcn_ae", mode="unsupervised", epochs=1)
    with pytest.raises(LeakageError):
        train_autoencoder(model, x, config, ws)


def test_autoencoder_rejects_held_out_windows():
    x = rng.standard_normal((2, 2, 64)).astype(np.float32)
    ws = [window(), window(held_out=True)]
    model = build_model("tcn_ae", 2, np.random.default_rng(0), seq_len=64)
    config = TrainConfig(architecture="tcn_ae", mode="unsupervised", epochs=1)
    with pytest.raises(LeakageError):
        train_autoencoder(model, x, config, ws)


def test_autoencoder_requires_window_metadata_match():
    x = rng.standard_normal((3, 2, 64)).astype(np.float32)
    model = build_model("tcn_ae", 2, np.random.default_rng(0), seq_len=64)
    config = TrainConfig(architecture="tcn_ae", mode="unsupervised", epochs=1)
    with pytest.raises(ValidationError):
        train_autoencoder(model, x, config, [window()])


# ---- scoring ----


def test_supervised_scores_are_probabilities():
    model = build_model("tcn", 2, np.random.default_rng(0))
    x = rng.standard_normal((9, 2, 64)).astype(np.float32)
    scores = score_windows(model, "tcn", x)
    assert scores.shape == (9,)
    assert ((scores >= 0) & (scores <= 1)).all()
    npt.assert_allclose(score_windows(model, "tcn", x, batch_size=2), scores, rtol=1e-6)


def test_autoencoder_scores_are_reconstruction_errors():
    model = build_model("tcn_ae", 2, np.random.default_rng(0), seq_len=64)
    x = rng.standard_normal((5, 2, 64)).astype(np.float32)
    scores = score_windows(model, "tcn_ae", x)
    assert (scores > 0).all()


def test_scoring_does_not_update_or_randomize():
    model = build_model("cnn", 2, np.random.default_rng(0))
    x = rng.standard_normal((3, 2, 128, 128)).astype(np.float32)
    a = score_windows(model, "cnn", x)
    b = score_windows(model, "cnn", x)
    npt.assert_array_equal(a, b)  # dropout must be off


def test_trained_model_separates_classes():
    x, labels = separable_sequences(n=60)
    model = build_model("tcn", 2, np.random.default_rng(2))
    config = TrainConfig(architecture="tcn", epochs=15, batch_size=16, learning_rate=1e-3)
    train_supervised(model, x, labels, config)
    scores = score_windows(model, "tcn", x)
    assert scores[labels == 1].mean() > scores[labels == 0].mean() + 0.2
