"""
The four classifiers on one split
=================================

Trains each model directly through its module so the intermediate
objects (weights, tree, stages, neighbours) can be inspected.
"""

import numpy as np

from fdm_uts import boosting, knn, logistic, metrics, tree
from fdm_uts.experiment import ExperimentConfig, prepare

prep = prepare(ExperimentConfig())
train, test = prep.train, prep.test
print(f"{len(train)} training rows, {len(test)} test rows")


def show(name, labels, scores):
    cm = metrics.confusion_matrix(test.labels, labels)
    auc = metrics.auc(metrics.roc_curve(test.labels, scores))
    print(f"{name:<10} F1 {metrics.f1(cm):.4f}  AUC {auc:.4f}  {cm}")


# Logistic regression: plain gradient descent from zero weights.
lr = logistic.train(train)
print("weights", np.round(lr.weights, 3), "iterations", lr.iterations, "cost", round(lr.final_cost, 4))
show("logistic", logistic.predict(lr, test.features), logistic.predict_proba(lr, test.features))

# Decision tree: entropy splits, printed as an indented outline.
dt = tree.grow(train)
print(dt.render())
show("tree", tree.predict(dt, test.features), tree.predict_score(dt, test.features))

# Gradient boosting: the training loss never goes up from one stage to the next.
gbm = boosting.train(train)
print("loss at stages 0, 10, 50, 100:", [round(gbm.train_loss[i], 4) for i in (0, 10, 50, 100)])
show("gbm", boosting.predict(gbm, test.features), boosting.predict_score(gbm, test.features))

# A truncated ensemble is exactly the model you would get by training fewer stages.
short = boosting.train(train, boosting.GbmConfig(n_stages=10))
same = boosting.predict_score(boosting.truncate(gbm, 10), test.features) == boosting.predict_score(short, test.features)
print("first 10 stages reproduce a 10-stage model:", bool(same.all()))

# KNN with k=5: the score is the positive fraction among the neighbours.
# The table comes from a designed experiment, so exact distance ties are
# common: the first test row (the 100 % infill point) is equally far from
# several corner points, and the lower training index wins each tie.
model = knn.fit(train, k=5)
print("neighbours of the first test row:", knn.k_nearest(model, test.features[0]))
show("knn", knn.predict(model, test.features), knn.predict_score(model, test.features))
