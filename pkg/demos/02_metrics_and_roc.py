"""
Confusion matrices, ROC curves and AUC
======================================

The metric helpers work on plain label and score arrays, so they can be
tried without training anything.
"""

import numpy as np

from fdm_uts import metrics

y_true = np.array([1, 0, 1, 1, 0, 0, 1, 0])
scores = np.array([0.9, 0.8, 0.7, 0.55, 0.5, 0.3, 0.3, 0.1])

# Threshold the scores at 0.5 and count outcomes.
y_pred = (scores > 0.5).astype(int)
cm = metrics.confusion_matrix(y_true, y_pred)
print(cm)
print(metrics.metric_report(cm, metrics.auc(metrics.roc_curve(y_true, scores))))

# Zero denominators are reported as 0 and flagged instead of raising.
empty = metrics.ConfusionMatrix(tp=0, fp=0, fn=2, tn=5)
print("precision", metrics.precision(empty), "flags", metrics.degenerate_flags(empty))

# The ROC sweep adds one point per distinct score. The two samples tied at
# 0.3 (one of each class) move the curve diagonally in a single step.
curve = metrics.roc_curve(y_true, scores)
print(curve.to_csv())
print("AUC", metrics.auc(curve))

# AUC only depends on the ordering of the scores.
print("AUC after exp():", metrics.auc(metrics.roc_curve(y_true, np.exp(scores))))
print("AUC of negated scores:", metrics.auc(metrics.roc_curve(y_true, -scores)))
