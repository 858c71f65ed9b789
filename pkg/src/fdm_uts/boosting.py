"""Gradient-boosted trees for binary log-loss.

Each stage fits a least-squares regression tree to the residuals
``y - sigmoid(score)`` and replaces every leaf value with a single Newton
step ``sum(residual) / sum(p * (1 - p))`` over the leaf's samples, scaled by
the learning rate. The model score is the prior log-odds plus the stage
outputs, added in stage order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import LabeledDataset
from .logistic import EPS, sigmoid
from .tree import GAIN_TOL, Node, Split, ValueLeaf, node_from_dict, node_to_dict, sorted_candidates


class SingleClassTrain(ValueError):
    pass


@dataclass(frozen=True)
class GbmConfig:
    n_stages: int = 100
    learning_rate: float = 0.1
    stage_tree_max_depth: int = 3
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.n_stages < 1:
            raise ValueError("n_stages must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.stage_tree_max_depth < 1:
            raise ValueError("stage_tree_max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_stages": self.n_stages,
            "learning_rate": self.learning_rate,
            "stage_tree_max_depth": self.stage_tree_max_depth,
            "min_samples_leaf": self.min_samples_leaf,
        }


@dataclass(frozen=True)
class GbmModel:
    initial_score: float
    stages: tuple[Node, ...]
    config: GbmConfig = GbmConfig()
    train_loss: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "type": "gbm",
            "config": self.config.to_dict(),
            "initial_score": float(self.initial_score),
            "stages": [node_to_dict(s) for s in self.stages],
        }

    @classmethod
    def from_dict(cls, data: dict) -> GbmModel:
        return cls(
            float(data["initial_score"]),
            tuple(node_from_dict(s) for s in data["stages"]),
            GbmConfig(**data["config"]),
        )


def truncate(model: GbmModel, k: int) -> GbmModel:
    """The model restricted to its first ``k`` stages."""
    return replace(model, stages=model.stages[:k], train_loss=model.train_loss[: k + 1])


def log_loss(y, p) -> float:
    p = np.clip(p, EPS, 1 - EPS)
    return float(np.mean(-y * np.log(p) - (1 - y) * np.log(1 - p)))


def best_sse_split(x, target, min_samples_leaf: int = 1):
    """Split maximizing squared-error reduction: ``(feature, threshold, reduction)`` or None."""
    n = target.size
    total = target.sum()
    best = None
    for j in range(x.shape[1]):
        order, positions, thresholds = sorted_candidates(x[:, j], min_samples_leaf)
        if positions.size == 0:
            continue
        csum = np.cumsum(target[order])
        n_left = positions + 1
        s_left = csum[positions]
        s_right = total - s_left
        reduction = s_left**2 / n_left + s_right**2 / (n - n_left) - total**2 / n
        i = int(np.argmax(reduction))
        value = float(reduction[i])
        if value > GAIN_TOL and (best is None or value > best[2] + GAIN_TOL):
            best = (j, float(thresholds[i]), value)
    return best


def _fit_stage(x, residual, hessian, depth, config: GbmConfig) -> Node:
    if depth < config.stage_tree_max_depth and residual.size >= 2 * config.min_samples_leaf:
        found = best_sse_split(x, residual, config.min_samples_leaf)
        if found is not None:
            feature, threshold, _ = found
            mask = x[:, feature] <= threshold
            return Split(
                feature,
                threshold,
                _fit_stage(x[mask], residual[mask], hessian[mask], depth + 1, config),
                _fit_stage(x[~mask], residual[~mask], hessian[~mask], depth + 1, config),
            )
    den = hessian.sum()
    step = residual.sum() / den if abs(den) >= 1e-150 else 0.0
    return ValueLeaf(config.learning_rate * float(step))


def _stage_output(stage: Node, x) -> np.ndarray:
    out = np.empty(x.shape[0])

    def fill(node, rows):
        if isinstance(node, Split):
            go_left = x[rows, node.feature] <= node.threshold
            fill(node.left, rows[go_left])
            fill(node.right, rows[~go_left])
        else:
            out[rows] = node.value

    fill(stage, np.arange(x.shape[0]))
    return out


def train(dataset: LabeledDataset, config: GbmConfig = GbmConfig()) -> GbmModel:
    x = dataset.features
    y = dataset.labels.astype(float)
    n0, n1 = dataset.class_counts()
    if n0 == 0 or n1 == 0:
        raise SingleClassTrain("gradient boosting needs both classes")

    initial = float(np.log(n1) - np.log(n0))
    score = np.full(y.size, initial)
    losses = [log_loss(y, sigmoid(score))]
    stages = []
    for _ in range(config.n_stages):
        p = sigmoid(score)
        stage = _fit_stage(x, y - p, p * (1 - p), 0, config)
        stages.append(stage)
        score = score + _stage_output(stage, x)
        loss = log_loss(y, sigmoid(score))
        if loss > losses[-1] + 1e-9:
            raise AssertionError(f"training log-loss rose at stage {len(stages)}: {losses[-1]} -> {loss}")
        losses.append(loss)
    return GbmModel(initial, tuple(stages), config, tuple(losses))


def predict_score(model: GbmModel, x):
    """Raw additive score (log-odds)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    score = np.full(rows.shape[0], model.initial_score)
    for stage in model.stages:
        score = score + _stage_output(stage, rows)
    return float(score[0]) if single else score


def predict_proba(model: GbmModel, x):
    s = predict_score(model, x)
    p = sigmoid(np.atleast_1d(s))
    return float(p[0]) if np.ndim(s) == 0 else p


def predict(model: GbmModel, x):
    p = predict_proba(model, x)
    return int(p >= 0.5) if np.ndim(p) == 0 else (p >= 0.5).astype(int)
