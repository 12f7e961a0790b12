"""Figures written next to the delimited reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_META = {"Software": None}

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "figure.dpi": 120,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_report(report, out_dir, metrics=("recall", "roc_auc")) -> list[Path]:
    """One grouped bar chart per metric: models on the x axis, one bar per sampling."""
    out_dir = Path(out_dir)
    models = list(dict.fromkeys(r.model for r in report.rows))
    samplings = list(dict.fromkeys(r.sampling for r in report.rows))
    lookup = {(r.model, r.sampling): r for r in report.rows}
    paths = []
    with plt.rc_context(STYLE):
        for metric in metrics:
            fig, ax = plt.subplots(figsize=(1.6 + 1.4 * len(models), 3.0))
            width = 0.8 / max(1, len(samplings))
            x = np.arange(len(models))
            for k, s in enumerate(samplings):
                vals = [getattr(lookup[(m, s)], metric) if (m, s) in lookup else np.nan for m in models]
                ax.bar(x + (k - (len(samplings) - 1) / 2) * width, vals, width, label=s)
            ax.set_xticks(x, models)
            ax.set_ylabel(metric.replace("_", " ").upper() if metric == "roc_auc" else metric.capitalize())
            lo = np.nanmin([getattr(r, metric) for r in report.rows])
            ax.set_ylim(max(0.0, lo - 0.05), 1.0)
            ax.legend(fontsize=7, ncol=2, loc="lower right")
            paths.append(_save(fig, out_dir / f"report_{metric}.png"))
    return paths


def plot_layer_accuracy(accuracies, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.2, 2.4))
        layers = np.arange(1, len(accuracies) + 1)
        ax.plot(layers, accuracies, marker="o")
        best = int(np.argmax(accuracies))
        ax.scatter([layers[best]], [accuracies[best]], s=60, facecolors="none", edgecolors="k")
        ax.set_xticks(layers)
        ax.set_xlabel("cascade layer")
        ax.set_ylabel("validation accuracy")
        return _save(fig, path)


def plot_feature_ranks(fused, path, top_k: int | None = None) -> Path:
    entries = list(fused.entries)[: top_k or None]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 0.3 * len(entries) + 0.8))
        y = np.arange(len(entries))
        ax.barh(y, [e.mean_rank for e in entries], color="0.4")
        ax.set_yticks(y, [e.feature for e in entries])
        ax.invert_yaxis()
        ax.set_xlabel("mean rank (lower is more important)")
        return _save(fig, path)
