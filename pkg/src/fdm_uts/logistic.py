"""Logistic classification fit by full-batch gradient descent on cross-entropy."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledDataset

EPS = 1e-12
# Largest double below 1; keeps probabilities strictly inside (0, 1).
_ONE_MINUS_ULP = 1.0 - 2.0**-53
_TINY = np.finfo(float).tiny


class DivergenceDetected(RuntimeError):
    pass


def sigmoid(z):
    """Overflow-safe logistic function."""
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True)
class GdConfig:
    learning_rate: float = 0.1
    max_iterations: int = 10_000
    gradient_tolerance: float = 1e-8
    initial_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray  # [bias, w1, ..., wd]
    iterations: int = 0
    final_cost: float = float("nan")
    converged: bool = False
    cost_history: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "type": "logistic",
            "weights": [float(w) for w in self.weights],
            "meta": {
                "iterations": self.iterations,
                "final_cost": float(self.final_cost),
                "converged": self.converged,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> LogisticModel:
        meta = data.get("meta", {})
        return cls(
            weights=np.asarray(data["weights"], dtype=float),
            iterations=int(meta.get("iterations", 0)),
            final_cost=float(meta.get("final_cost", float("nan"))),
            converged=bool(meta.get("converged", False)),
        )


def _augment(x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.hstack([np.ones((x.shape[0], 1)), x])


def _proba(weights, x) -> np.ndarray:
    return np.clip(sigmoid(_augment(x) @ np.asarray(weights, dtype=float)), _TINY, _ONE_MINUS_ULP)


def predict_proba(model: LogisticModel, x):
    """P(label = 1 | x); scalar for a single row, array for a matrix."""
    p = _proba(model.weights, x)
    return float(p[0]) if np.ndim(x) == 1 else p


def predict(model: LogisticModel, x, cutoff: float = 0.5):
    p = predict_proba(model, x)
    return int(p >= cutoff) if np.ndim(x) == 1 else (p >= cutoff).astype(int)


def _cost(weights, x_aug, y) -> float:
    h = np.clip(sigmoid(x_aug @ weights), EPS, 1 - EPS)
    return float(np.mean(-y * np.log(h) - (1 - y) * np.log(1 - h)))


def _gradient(weights, x_aug, y) -> np.ndarray:
    h = sigmoid(x_aug @ weights)
    return x_aug.T @ (h - y) / y.shape[0]


def cost(weights, dataset: LabeledDataset) -> float:
    """Mean cross-entropy, probabilities clamped to [1e-12, 1 - 1e-12]."""
    if len(dataset) == 0:
        raise ValueError("cost of an empty dataset")
    return _cost(np.asarray(weights, dtype=float), _augment(dataset.features), dataset.labels)


def cost_gradient(weights, dataset: LabeledDataset) -> np.ndarray:
    if len(dataset) == 0:
        raise ValueError("gradient of an empty dataset")
    return _gradient(np.asarray(weights, dtype=float), _augment(dataset.features), dataset.labels)


def train(dataset: LabeledDataset, config: GdConfig = GdConfig()) -> LogisticModel:
    """Batch gradient descent from ``config.initial_weights`` (zeros by default).

    Stops when the gradient's max-norm drops below the tolerance or after
    ``max_iterations`` steps. Ten consecutive cost increases raise
    :class:`DivergenceDetected`.
    """
    n0, n1 = dataset.class_counts()
    if n0 == 0 or n1 == 0:
        raise ValueError("logistic training needs both classes")
    if not dataset.standardized:
        warnings.warn("training logistic model on unstandardized features", stacklevel=2)

    x_aug = _augment(dataset.features)
    y = dataset.labels.astype(float)
    if config.initial_weights is None:
        w = np.zeros(x_aug.shape[1])
    else:
        w = np.array(config.initial_weights, dtype=float)
        if w.shape != (x_aug.shape[1],):
            raise ValueError(f"initial_weights must have length {x_aug.shape[1]}")

    def evaluate(w):
        h = sigmoid(x_aug @ w)
        hc = np.clip(h, EPS, 1 - EPS)
        return h, float(np.mean(-y * np.log(hc) - (1 - y) * np.log(1 - hc)))

    h, current = evaluate(w)
    history = [current]
    increases = 0
    converged = False
    iterations = 0
    for _ in range(config.max_iterations):
        grad = x_aug.T @ (h - y) / y.shape[0]
        if np.max(np.abs(grad)) < config.gradient_tolerance:
            converged = True
            break
        w = w - config.learning_rate * grad
        iterations += 1
        h, new = evaluate(w)
        if new > current + 1e-12:
            increases += 1
            if increases >= 10:
                raise DivergenceDetected(
                    f"cost rose for 10 consecutive iterations (lr={config.learning_rate})"
                )
        else:
            increases = 0
        current = new
        history.append(current)
    if not np.all(np.isfinite(w)):
        raise DivergenceDetected("weights became non-finite")
    return LogisticModel(w, iterations, current, converged, tuple(history))
