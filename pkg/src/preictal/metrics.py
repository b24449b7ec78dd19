"""Exact ROC and precision-recall computation.

Thresholds sweep the distinct score values from high to low; samples sharing
a score move as one atomic group, so ties never split across a threshold.
AUC ROC uses the trapezoid rule on the resulting staircase; AUC PR is average
precision (step interpolation), which is unbiased where trapezoidal PR
interpolation is not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from preictal.errors import MetricError


@dataclass
class EvalResult:
    roc_points: list[tuple[float, float]]  # (fpr, tpr), (0,0) .. (1,1)
    pr_points: list[tuple[float, float]]  # (recall, precision), high thresholds first
    auc_roc: float
    auc_pr: float
    prevalence: float


def _validate(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.shape != scores.shape:
        raise MetricError("scores and labels must be 1-D arrays of equal length")
    if scores.size == 0:
        raise MetricError("cannot evaluate zero samples")
    if not np.all(np.isfinite(scores)):
        raise MetricError("scores must be finite")
    if not np.all((labels == 0) | (labels == 1)):
        raise MetricError("labels must be 0 or 1")
    if labels.min() == labels.max():
        raise MetricError("both classes must be present to compute ROC/PR")
    return scores, labels.astype(np.int64)


def evaluate_scores(scores: np.ndarray, labels: np.ndarray) -> EvalResult:
    scores, labels = _validate(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]

    # group boundaries where the score value changes
    change = np.nonzero(np.diff(sorted_scores))[0]
    group_ends = np.concatenate([change + 1, [scores.size]])

    cum_pos = np.cumsum(sorted_labels)
    tp = cum_pos[group_ends - 1]
    fp = group_ends - tp

    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    auc_roc = float(np.trapezoid(tpr, fpr))

    recall = tp / n_pos
    precision = tp / (tp + fp)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    auc_pr = float(np.sum((recall - prev_recall) * precision))

    return EvalResult(
        roc_points=[(float(a), float(b)) for a, b in zip(fpr, tpr)],
        pr_points=[(float(a), float(b)) for a, b in zip(recall, precision)],
        auc_roc=auc_roc,
        auc_pr=auc_pr,
        prevalence=n_pos / labels.size,
    )
