"""Accuracy assessment: confusion matrix, overall/average accuracy, kappa."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import FloatArray, IntArray, LabelMap


@dataclass(frozen=True)
class MetricsReport:
    """Summary of agreement between a predicted and a reference label map.

    Confusion rows index the reference class, columns the predicted class.
    Per-class accuracy is NaN for classes without reference pixels; those
    classes are excluded from the average.
    """

    confusion: IntArray       # (class_count, class_count)
    class_accuracy: FloatArray
    overall: float
    average: float
    kappa: float


def report_from_confusion(confusion) -> MetricsReport:
    confusion = np.asarray(confusion, dtype=np.int64)
    if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
        raise ValueError("confusion matrix must be square")
    total = int(confusion.sum())
    if total == 0:
        raise ValueError("confusion matrix has no counts")
    diag = np.diag(confusion).astype(np.float64)
    row_sums = confusion.sum(axis=1).astype(np.float64)
    col_sums = confusion.sum(axis=0).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        class_accuracy = np.where(row_sums > 0, diag / row_sums, np.nan)
    overall = float(diag.sum() / total)
    average = float(np.nanmean(class_accuracy))
    chance = float((row_sums * col_sums).sum() / (total * total))
    if chance >= 1.0:
        # Both maps constant on the same class: perfect agreement by construction.
        kappa = 1.0
    else:
        kappa = (overall - chance) / (1.0 - chance)
    return MetricsReport(confusion, class_accuracy, overall, average, float(kappa))


def evaluate(predicted: LabelMap, reference: LabelMap, class_count: int) -> MetricsReport:
    """Score ``predicted`` against ``reference``, ignoring reference label 0."""
    if (predicted.height, predicted.width) != (reference.height, reference.width):
        raise ValueError("dimension mismatch between predicted and reference maps")
    if class_count < 1:
        raise ValueError("class_count must be >= 1")
    mask = reference.labels > 0
    ref = reference.labels[mask]
    pred = predicted.labels[mask]
    if ref.size == 0:
        raise ValueError("reference map labels no pixels")
    if ref.max() > class_count:
        raise ValueError(f"reference label {int(ref.max())} exceeds class count {class_count}")
    if pred.max(initial=0) > class_count:
        raise ValueError(f"predicted label {int(pred.max())} exceeds class count {class_count}")
    if pred.min(initial=1) < 1:
        raise ValueError("predicted map leaves evaluated pixels unlabeled")
    flat = (ref - 1) * class_count + (pred - 1)
    confusion = np.bincount(flat, minlength=class_count * class_count)
    return report_from_confusion(confusion.reshape(class_count, class_count))
