"""Static SVG comparison figure built from the exported ROC CSV files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import RocCurve, auc  # noqa: E402

LABELS = {"logistic": "Logistic", "gbm": "Gradient boosting", "tree": "Decision tree", "knn": "KNN"}


def comparison_plot(out_dir, names, path) -> Path:
    """ROC curves of every model next to a bar chart of their AUCs."""
    out_dir = Path(out_dir)
    curves = {n: RocCurve.from_csv((out_dir / f"roc_{n}.csv").read_text(encoding="utf-8")) for n in names}

    with plt.rc_context({"svg.hashsalt": "fdm_uts", "svg.fonttype": "none"}):
        fig, (ax_roc, ax_bar) = plt.subplots(1, 2, figsize=(10, 4.5))
        for n, c in curves.items():
            ax_roc.plot(c.fpr, c.tpr, drawstyle="default", marker="o", ms=3, label=f"{LABELS[n]} ({auc(c):.2f})")
        ax_roc.plot([0, 1], [0, 1], ls="--", color="grey", lw=0.8)
        ax_roc.set_xlabel("False positive rate")
        ax_roc.set_ylabel("True positive rate")
        ax_roc.set_title("ROC curves (test split)")
        ax_roc.legend(loc="lower right", fontsize=8)

        ax_bar.bar([LABELS[n] for n in curves], [auc(c) for c in curves.values()], color="tab:blue")
        ax_bar.set_ylim(0, 1)
        ax_bar.set_ylabel("AUC")
        ax_bar.set_title("AUC comparison")
        ax_bar.tick_params(axis="x", labelrotation=15)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return Path(path)
