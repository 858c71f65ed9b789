"""Confusion-matrix rates, ROC sweep and trapezoidal AUC.

Ratios with a zero denominator evaluate to 0.0; :func:`degenerate_flags`
names which ones did so, and :func:`metric_report` carries those names
alongside the numbers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np


class LengthMismatch(ValueError):
    pass


class NonBinaryValue(ValueError):
    pass


class SingleClassTrue(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def _binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all((arr == 0) | (arr == 1)):
        raise NonBinaryValue(f"{name} contains values other than 0 and 1")
    return arr.astype(int)


def confusion_matrix(y_true, y_pred) -> ConfusionMatrix:
    y_true = _binary(y_true, "y_true")
    y_pred = _binary(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.shape[0]} labels vs {y_pred.shape[0]} predictions")
    if y_true.size == 0:
        raise ValueError("need at least one sample")
    return ConfusionMatrix(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def tpr(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn)


def fpr(cm: ConfusionMatrix) -> float:
    return _ratio(cm.fp, cm.fp + cm.tn)


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp)


def recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn)


def f1(cm: ConfusionMatrix) -> float:
    p, r = precision(cm), recall(cm)
    return _ratio(2 * p * r, p + r)


def degenerate_flags(cm: ConfusionMatrix) -> list[str]:
    """Names of the ratios that hit a zero denominator for ``cm``."""
    flags = []
    if cm.tp + cm.fn == 0:
        flags += ["tpr", "recall"]
    if cm.fp + cm.tn == 0:
        flags.append("fpr")
    if cm.tp + cm.fp == 0:
        flags.append("precision")
    if precision(cm) + recall(cm) == 0:
        flags.append("f1")
    return sorted(flags)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in zip(self.fpr, self.tpr)]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("threshold,fpr,tpr\n")
        for t, x, y in zip(self.thresholds, self.fpr, self.tpr):
            out.write(f"{t:.17g},{x:.17g},{y:.17g}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> RocCurve:
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        data = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(fpr=data[:, 1], tpr=data[:, 2], thresholds=data[:, 0])


def roc_curve(y_true, scores) -> RocCurve:
    """Sweep the decision threshold down through the distinct scores.

    A sample is called positive when its score is >= the threshold. The
    first threshold is ``+inf`` (nothing positive, point (0, 0)); each
    distinct score then contributes one point, so tied scores move
    together and the lowest score yields (1, 1).
    """
    y = _binary(y_true, "y_true")
    s = np.asarray(scores, dtype=float)
    if s.shape != y.shape:
        raise LengthMismatch("labels and scores differ in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTrue("ROC needs both classes in y_true")

    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    tp_cum = np.cumsum(y_sorted)
    fp_cum = np.cumsum(1 - y_sorted)
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])

    thresholds = np.r_[np.inf, s_sorted[ends]]
    tprs = np.r_[0.0, tp_cum[ends] / n_pos]
    fprs = np.r_[0.0, fp_cum[ends] / n_neg]
    return RocCurve(fpr=fprs, tpr=tprs, thresholds=thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoid-rule area under consecutive ROC points."""
    x, y = curve.fpr, curve.tpr
    area = 0.0
    for i in range(len(x) - 1):
        area += (x[i + 1] - x[i]) * (y[i + 1] + y[i]) / 2
    return float(area)


def metric_report(cm: ConfusionMatrix, auc_value: float | None = None) -> dict:
    return {
        **cm.to_dict(),
        "tpr": tpr(cm),
        "fpr": fpr(cm),
        "precision": precision(cm),
        "recall": recall(cm),
        "f1": f1(cm),
        "auc": auc_value,
        "degenerate_flags": degenerate_flags(cm),
    }
