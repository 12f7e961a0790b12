import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadeids.evaluation import (
    ConfusionMatrix,
    MetricsReport,
    MetricsRow,
    UndefinedMetricWarning,
    build_report,
    confusion,
    f1_from,
    metrics,
    roc_auc,
)

from oracles import brute_auc


def test_confusion_examples():
    assert confusion([1, 1, 0, 0], [1, 0, 0, 1]) == ConfusionMatrix(tp=1, tn=1, fp=1, fn=1)
    cm = confusion([1, 0, 1], [1, 0, 1])
    assert cm.fp == cm.fn == 0
    cm = confusion([1, 0, 0, 1], [1, 1, 1, 1])
    assert cm.tn == cm.fn == 0
    with pytest.raises(ValueError):
        confusion([1, 0], [1])


def test_metrics_examples():
    acc, p, r, f1 = metrics(ConfusionMatrix(tp=2, tn=2, fp=1, fn=0))
    assert acc == 0.8 and p == 2 / 3 and r == 1.0
    assert abs(f1 - 0.8) < 1e-12
    assert metrics(ConfusionMatrix(5, 5, 0, 0)) == (1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        metrics(ConfusionMatrix(0, 0, 0, 0))


def test_table2_f1_consistency():
    # Deep Forest / SMOTEENN row of the published results
    assert abs(f1_from(0.88906, 0.99999) - 0.94127) < 5e-4


def test_zero_denominators_warn():
    with pytest.warns(UndefinedMetricWarning):
        acc, p, r, f1 = metrics(ConfusionMatrix(tp=0, tn=5, fp=0, fn=2))
    assert p == 0 and r == 0 and f1 == 0


def test_auc_examples():
    assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert roc_auc([0, 1, 0, 1], [0.5] * 4) == 0.5
    assert roc_auc([1, 0, 0, 1], [0.9, 0.2, 0.8, 0.3]) == 0.75
    with pytest.raises(ValueError):
        roc_auc([1, 1], [0.1, 0.2])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 6)), min_size=2, max_size=60))
def test_auc_matches_pairs_with_ties(pairs):
    labels = [p[0] for p in pairs]
    scores = [p[1] / 6 for p in pairs]
    if len(set(labels)) < 2:
        return
    assert roc_auc(labels, scores) == brute_auc(labels, scores)


def test_auc_symmetry_and_monotone_invariance():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, 100)
    y[:2] = [0, 1]
    s = rng.normal(size=100)
    assert abs(roc_auc(y, s) + roc_auc(y, -s) - 1) < 1e-12
    assert roc_auc(y, s) == roc_auc(y, np.exp(3 * s) + 1)


def row(model, sampling, auc):
    return MetricsRow(model, sampling, 0.9, 0.8, 0.7, 0.95, auc)


def test_report_grouping_and_order():
    assert build_report([]).to_csv() == "model,sampling,accuracy,f1,precision,recall,roc_auc\n"
    rep = build_report([row("A", "SMOTE", 0.9), row("B", "Original", 0.5), row("A", "Original", 0.95)])
    assert [(r.model, r.sampling) for r in rep.rows] == [("A", "Original"), ("A", "SMOTE"), ("B", "Original")]
    text = rep.to_text()
    assert text.splitlines()[0].split()[:2] == ["Model", "Sampling"]
    assert MetricsReport.from_csv(rep.to_csv()).rows == rep.rows


def test_report_20_experiments():
    models = ["Deep Forest", "Neural Network", "Decision Tree", "Logistic Regression", "SVM"]
    samplings = ["Original", "SMOTE", "Hybrid Sampling", "SMOTEENN"]
    rep = build_report([row(m, s, 0.9) for m in models for s in samplings])
    assert len(rep.rows) == 20
    assert len(rep.to_csv().splitlines()) == 21
