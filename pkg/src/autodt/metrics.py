"""Confusion matrices and class-frequency weighted predictive measures.

Every per-class quantity with an empty denominator (sensitivity, specificity,
precision) is taken as 0, so an undefined measure never inflates a score.
GMean is the truth-frequency weighted mean of the per-class
``sqrt(sens * spec)`` values; F-measure is weighted the same way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple
    counts: np.ndarray  # counts[true][pred]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    gmean: float
    fmeasure: float
    sens_weighted: float
    spec_weighted: float

    def get(self, name: str) -> float:
        return getattr(self, name)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in METRIC_NAMES)


METRIC_NAMES = ("accuracy", "gmean", "fmeasure", "sens_weighted", "spec_weighted")


def confusion(truth: Sequence[Hashable], pred: Sequence[Hashable],
              classes: Sequence[Hashable]) -> ConfusionMatrix:
    if len(truth) != len(pred):
        raise ValueError(f"length mismatch: {len(truth)} truths vs {len(pred)} predictions")
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    if len(index) != len(classes):
        raise ValueError("duplicate class labels")
    try:
        t = np.fromiter((index[v] for v in truth), dtype=np.int64, count=len(truth))
        p = np.fromiter((index[v] for v in pred), dtype=np.int64, count=len(pred))
    except KeyError as exc:
        raise ValueError(f"unknown label {exc.args[0]!r}") from None
    k = len(classes)
    counts = np.bincount(t * k + p, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(classes, counts)


def confusion_codes(truth: np.ndarray, pred: np.ndarray, n_classes: int) -> ConfusionMatrix:
    """Fast path for integer-coded labels in ``range(n_classes)``."""
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if truth.shape != pred.shape:
        raise ValueError("length mismatch")
    k = n_classes
    counts = np.bincount(truth * k + pred, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(tuple(range(k)), counts)


def _ratio(num, den):
    return num / den if den > 0 else 0.0


def per_class_sens_spec(cm: ConfusionMatrix, class_c) -> tuple[float, float]:
    c = cm.classes.index(class_c)
    counts = cm.counts
    tp = counts[c, c]
    fn = counts[c].sum() - tp
    fp = counts[:, c].sum() - tp
    tn = counts.sum() - tp - fn - fp
    return float(_ratio(tp, tp + fn)), float(_ratio(tn, tn + fp))


def _per_class(counts: np.ndarray):
    """Vectorised (weights, sens, spec, prec) over all classes."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    tp = np.diag(counts)
    actual = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    fn = actual - tp
    fp = predicted - tp
    tn = total - tp - fn - fp
    with np.errstate(divide="ignore", invalid="ignore"):
        sens = np.where(actual > 0, tp / actual, 0.0)
        spec = np.where(tn + fp > 0, tn / (tn + fp), 0.0)
        prec = np.where(predicted > 0, tp / predicted, 0.0)
    weights = actual / total if total > 0 else np.zeros_like(actual)
    return weights, sens, spec, prec


def _require_nonempty(cm: ConfusionMatrix):
    if cm.total <= 0:
        raise ValueError("empty confusion matrix")


def gmean(cm: ConfusionMatrix) -> float:
    _require_nonempty(cm)
    w, sens, spec, _ = _per_class(cm.counts)
    return float(np.sum(w * np.sqrt(sens * spec)))


def fmeasure(cm: ConfusionMatrix) -> float:
    _require_nonempty(cm)
    w, rec, _, prec = _per_class(cm.counts)
    den = prec + rec
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(den > 0, 2 * prec * rec / den, 0.0)
    return float(np.sum(w * f))


def accuracy(cm: ConfusionMatrix) -> float:
    _require_nonempty(cm)
    return float(np.trace(cm.counts) / cm.total)


def metric_set(cm: ConfusionMatrix) -> MetricSet:
    w, sens, spec, _ = _per_class(cm.counts)
    return MetricSet(accuracy=accuracy(cm), gmean=gmean(cm), fmeasure=fmeasure(cm),
                     sens_weighted=float(np.sum(w * sens)),
                     spec_weighted=float(np.sum(w * spec)))


def score_predictions(truth: np.ndarray, pred: np.ndarray, n_classes: int) -> MetricSet:
    return metric_set(confusion_codes(truth, pred, n_classes))
