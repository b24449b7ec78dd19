"""Experiment orchestration: cross-validation, the window/PPL grid search,
and final held-out evaluation.

Every job (fold or grid cell) gets its own seed derived by hashing the base
seed with the job coordinates, so results do not depend on execution order
and cells can run in parallel.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from preictal.eegio.manifest import Timeline
from preictal.eegio.recording import SeizureAnnotation
from preictal.errors import MetricError
from preictal.metrics import EvalResult, evaluate_scores
from preictal.models import build_model, is_autoencoder
from preictal.pipelines import DEFAULT_SUB_WINDOW_S, build_pipeline, labels_array
from preictal.segmentation import (
    INTERICTAL,
    LabeledWindow,
    LabelParams,
    Partition,
    cv_folds,
    extract_windows,
    find_lead_seizures,
    label_timeline,
    loso_partition,
)
from preictal.training import TrainConfig, score_windows, train_autoencoder, train_supervised

GRID_WINDOWS_S = (5.0, 10.0, 15.0, 30.0, 60.0)
GRID_PPLS_S = (1800.0, 3600.0, 7200.0)
FIXED_WINDOW_S = 30.0
FIXED_PPL_S = 3600.0


def derive_seed(base: int, *parts) -> int:
    """Stable 64-bit seed from the base seed and job coordinates."""
    payload = json.dumps([int(base), *[str(p) for p in parts]], separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:8], "big")


@dataclass
class FoldResult:
    fold_seizure: int
    auc_roc: float
    auc_pr: float
    n_validation: int


@dataclass
class CvResult:
    mean_auc_roc: float
    folds: list[FoldResult]


@dataclass
class GridCell:
    window_s: float
    ppl_s: float
    cv: CvResult


@dataclass
class GridResult:
    cells: list[GridCell]
    selected: tuple[float, float]  # (window_s, ppl_s)
    test: EvalResult


@dataclass
class FixedResult:
    cv: CvResult
    test: EvalResult


def _segment(
    timeline: Timeline,
    annotations: list[SeizureAnnotation],
    params: LabelParams,
    seed: int,
) -> Partition:
    spans = label_timeline(timeline.duration_s, annotations, params, gaps=timeline.gaps())
    sub_seed = derive_seed(seed, "subsample", params.window_size_s, params.ppl_s)
    windows = extract_windows(timeline, spans, params, sub_seed)
    leads = find_lead_seizures(annotations, params.min_lead_gap_s)
    return loso_partition(windows, len(leads))


def _fit_and_train(
    arch: str,
    mode: str,
    train_windows: list[LabeledWindow],
    sampling_rate: float,
    config: TrainConfig,
    seed: int,
    sub_window_s: float,
):
    """Returns (model, transform). For unsupervised mode the pipeline and the
    model are fit on the interictal subset only."""
    if mode == "unsupervised":
        fit_windows = [w for w in train_windows if w.label == INTERICTAL]
    else:
        fit_windows = train_windows
    pipe, transform = build_pipeline(arch, sampling_rate, sub_window_s)
    pipe.fit(fit_windows)
    x = transform(fit_windows)

    base = arch[:-3] if is_autoencoder(arch) else arch
    in_channels = x.shape[2] if base == "cnn_lstm" else x.shape[1]
    seq_len = x.shape[2] if base == "tcn" else None
    rng = np.random.default_rng(derive_seed(seed, "init"))
    model = build_model(arch, in_channels, rng, seq_len=seq_len)
    train_config = replace(config, seed=derive_seed(seed, "batches"))
    if mode == "supervised":
        train_supervised(model, x, labels_array(fit_windows), train_config, windows=fit_windows)
    else:
        train_autoencoder(model, x, train_config, fit_windows)
    return model, transform


def _evaluate(model, arch: str, transform, windows: list[LabeledWindow]) -> EvalResult:
    x = transform(windows)
    scores = score_windows(model, arch, x)
    return evaluate_scores(scores, labels_array(windows))


def run_cv(
    timeline: Timeline,
    annotations: list[SeizureAnnotation],
    params: LabelParams,
    arch: str,
    mode: str,
    config: TrainConfig,
    seed: int,
    sub_window_s: float = DEFAULT_SUB_WINDOW_S,
) -> CvResult:
    """Internal leave-one-seizure-out CV on the training partition. Folds
    whose validation set has a single class are skipped with a warning."""
    partition = _segment(timeline, annotations, params, seed)
    results = []
    for fold in cv_folds(partition):
        val_labels = labels_array(fold.validation)
        if val_labels.size == 0 or val_labels.min() == val_labels.max():
            warnings.warn(
                f"fold {fold.fold_seizure} skipped: single-class validation set",
                stacklevel=2,
            )
            continue
        train_labels = labels_array(fold.train)
        if mode == "supervised" and train_labels.min() == train_labels.max():
            warnings.warn(
                f"fold {fold.fold_seizure} skipped: single-class training set",
                stacklevel=2,
            )
            continue
        if mode == "unsupervised" and not np.any(train_labels == 0):
            warnings.warn(
                f"fold {fold.fold_seizure} skipped: no interictal training windows",
                stacklevel=2,
            )
            continue
        fold_seed = derive_seed(
            seed, "fold", fold.fold_seizure, params.window_size_s, params.ppl_s
        )
        model, transform = _fit_and_train(
            arch, mode, fold.train, timeline.sampling_rate, config, fold_seed, sub_window_s
        )
        ev = _evaluate(model, arch, transform, fold.validation)
        results.append(
            FoldResult(fold.fold_seizure, ev.auc_roc, ev.auc_pr, len(fold.validation))
        )
    if not results:
        raise MetricError("every CV fold was skipped (single-class validation sets)")
    return CvResult(
        mean_auc_roc=float(np.mean([r.auc_roc for r in results])), folds=results
    )


def train_final(
    timeline: Timeline,
    annotations: list[SeizureAnnotation],
    params: LabelParams,
    arch: str,
    mode: str,
    config: TrainConfig,
    seed: int,
    sub_window_s: float = DEFAULT_SUB_WINDOW_S,
):
    """Train on the full training partition and evaluate on the held-out
    seizure. Returns (model, test EvalResult)."""
    partition = _segment(timeline, annotations, params, seed)
    final_seed = derive_seed(seed, "final", params.window_size_s, params.ppl_s)
    model, transform = _fit_and_train(
        arch, mode, partition.train, timeline.sampling_rate, config, final_seed, sub_window_s
    )
    return model, _evaluate(model, arch, transform, partition.test)


def _cell_job(args) -> GridCell:
    timeline, annotations, params, arch, mode, config, seed, sub_window_s, w, p = args
    cell_params = replace(params, window_size_s=w, ppl_s=p)
    cv = run_cv(timeline, annotations, cell_params, arch, mode, config, seed, sub_window_s)
    return GridCell(window_s=w, ppl_s=p, cv=cv)


def select_best(cells: list[GridCell]) -> GridCell:
    """Highest mean validation AUC ROC; ties prefer the smaller ppl, then the
    smaller window."""
    return min(cells, key=lambda c: (-c.cv.mean_auc_roc, c.ppl_s, c.window_s))


def grid_search(
    timeline: Timeline,
    annotations: list[SeizureAnnotation],
    params: LabelParams,
    arch: str,
    mode: str,
    config: TrainConfig,
    seed: int,
    sub_window_s: float = DEFAULT_SUB_WINDOW_S,
    windows_s: tuple = GRID_WINDOWS_S,
    ppls_s: tuple = GRID_PPLS_S,
    jobs: int = 1,
) -> tuple[GridResult, object]:
    """Evaluate every (window, ppl) cell by CV, pick the best mean validation
    AUC ROC (ties: smaller ppl, then smaller window), retrain at the winning
    cell and score the held-out seizure. Returns (result, final model)."""
    job_args = [
        (timeline, annotations, params, arch, mode, config, seed, sub_window_s, w, p)
        for p in ppls_s
        for w in windows_s
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_cell_job, job_args))
    else:
        cells = [_cell_job(a) for a in job_args]

    best = select_best(cells)
    selected_params = replace(params, window_size_s=best.window_s, ppl_s=best.ppl_s)
    model, test = train_final(
        timeline, annotations, selected_params, arch, mode, config, seed, sub_window_s
    )
    return GridResult(cells=cells, selected=(best.window_s, best.ppl_s), test=test), model


def run_fixed(
    timeline: Timeline,
    annotations: list[SeizureAnnotation],
    params: LabelParams,
    arch: str,
    mode: str,
    config: TrainConfig,
    seed: int,
    sub_window_s: float = DEFAULT_SUB_WINDOW_S,
) -> tuple[FixedResult, object]:
    """Single-cell run at fixed labeling parameters: CV for reporting, then a
    final train/test. Returns (result, final model)."""
    cv = run_cv(timeline, annotations, params, arch, mode, config, seed, sub_window_s)
    model, test = train_final(timeline, annotations, params, arch, mode, config, seed, sub_window_s)
    return FixedResult(cv=cv, test=test), model
