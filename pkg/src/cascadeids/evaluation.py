"""Confusion-matrix metrics, rank-sum ROC AUC and report assembly.

The positive class is malicious (label 1) throughout.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import astuple, dataclass

import numpy as np
from scipy.stats import rankdata

REPORT_COLUMNS = ("model", "sampling", "accuracy", "f1", "precision", "recall", "roc_auc")


class UndefinedMetricWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(labels, predictions) -> ConfusionMatrix:
    y = np.asarray(labels).astype(np.int64).reshape(-1)
    p = np.asarray(predictions).astype(np.int64).reshape(-1)
    if y.shape != p.shape:
        raise ValueError(f"{y.size} labels but {p.size} predictions")
    if y.size == 0:
        raise ValueError("confusion matrix of zero rows")
    return ConfusionMatrix(
        tp=int(np.sum((y == 1) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fp=int(np.sum((y == 0) & (p == 1))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


def metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1); zero denominators give 0 with a warning."""
    if cm.total <= 0:
        raise ValueError("metrics of an empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp == 0:
        warnings.warn("precision undefined (no positive predictions); reporting 0", UndefinedMetricWarning, stacklevel=2)
        precision = 0.0
    else:
        precision = cm.tp / (cm.tp + cm.fp)
    if cm.tp + cm.fn == 0:
        warnings.warn("recall undefined (no positive labels); reporting 0", UndefinedMetricWarning, stacklevel=2)
        recall = 0.0
    else:
        recall = cm.tp / (cm.tp + cm.fn)
    return accuracy, precision, recall, f1_from(precision, recall)


def f1_from(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * (precision * recall) / (precision + recall)


def roc_auc(labels, scores) -> float:
    """Normalised Mann-Whitney U from average-rank sums."""
    y = np.asarray(labels).astype(np.int64).reshape(-1)
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if y.shape != s.shape:
        raise ValueError(f"{y.size} labels but {s.size} scores")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = rankdata(s, method="average")
    u = float(np.sum(ranks[y == 1])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass(frozen=True)
class MetricsRow:
    model: str
    sampling: str
    accuracy: float
    f1: float
    precision: float
    recall: float
    roc_auc: float


def evaluate_scores(model: str, sampling: str, labels, p_malicious, threshold: float = 0.5) -> MetricsRow:
    p = np.asarray(p_malicious, dtype=np.float64)
    preds = (p > threshold).astype(np.int64)
    accuracy, precision, recall, f1 = metrics(confusion(labels, preds))
    return MetricsRow(model, sampling, accuracy, f1, precision, recall, roc_auc(labels, p))


@dataclass
class MetricsReport:
    rows: list[MetricsRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in self.rows:
            writer.writerow([row.model, row.sampling, *(repr(float(v)) for v in astuple(row)[2:])])
        return buf.getvalue()

    def to_text(self, digits: int = 5) -> str:
        header = ("Model", "Sampling", "Accuracy", "F1 Score", "Precision", "Recall", "ROC AUC")
        body = []
        last_model = None
        for row in self.rows:
            name = row.model if row.model != last_model else ""
            last_model = row.model
            body.append((name, row.sampling, *(f"{v:.{digits}f}" for v in astuple(row)[2:])))
        widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        for r in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> MetricsReport:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError(f"report columns must be {REPORT_COLUMNS}")
        rows = [
            MetricsRow(r["model"], r["sampling"], *(float(r[c]) for c in REPORT_COLUMNS[2:]))
            for r in reader
        ]
        return cls(rows)


def build_report(rows) -> MetricsReport:
    """Group rows by model (first-appearance order), best ROC AUC first within a model."""
    order: dict[str, int] = {}
    for row in rows:
        order.setdefault(row.model, len(order))
    ranked = sorted(rows, key=lambda r: (order[r.model], -r.roc_auc))
    return MetricsReport(ranked)

