"""K-nearest-neighbour classification by Euclidean distance and majority vote.

Equal distances rank by lowest training index. A tied vote (even k) goes
to the class whose closest member among the neighbours is nearer; if both
are equally near, class 1 wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset

TIE_POLICY = "nearest-then-1"


@dataclass(frozen=True)
class KnnModel:
    features: np.ndarray
    labels: np.ndarray
    k: int = 5
    tie_policy: str = TIE_POLICY

    def __post_init__(self):
        features = np.atleast_2d(np.asarray(self.features, dtype=float))
        labels = np.asarray(self.labels, dtype=int)
        if features.shape[0] != labels.shape[0]:
            raise ValueError("features and labels differ in length")
        if not 1 <= self.k <= labels.shape[0]:
            raise ValueError(f"k must lie in [1, {labels.shape[0]}], got {self.k}")
        if self.tie_policy != TIE_POLICY:
            raise ValueError(f"unsupported tie policy {self.tie_policy!r}")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def to_dict(self) -> dict:
        return {
            "type": "knn",
            "k": self.k,
            "tie_policy": self.tie_policy,
            "features": [[float(v) for v in row] for row in self.features],
            "labels": [int(v) for v in self.labels],
        }

    @classmethod
    def from_dict(cls, data: dict) -> KnnModel:
        return cls(
            np.asarray(data["features"], dtype=float),
            np.asarray(data["labels"], dtype=int),
            int(data["k"]),
            data.get("tie_policy", TIE_POLICY),
        )


def fit(dataset: LabeledDataset, k: int = 5) -> KnnModel:
    return KnnModel(dataset.features.copy(), dataset.labels.copy(), k)


def euclidean_distance(a, b) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum(d * d)))


def _distances(model: KnnModel, x) -> np.ndarray:
    d = model.features - np.asarray(x, dtype=float)
    return np.sqrt(np.sum(d * d, axis=1))


def k_nearest(model: KnnModel, x) -> list[tuple[int, float]]:
    """The k closest training rows as ``(index, distance)``, nearest first."""
    dist = _distances(model, x)
    order = np.argsort(dist, kind="stable")[: model.k]
    return [(int(i), float(dist[i])) for i in order]


def _vote(model: KnnModel, neighbours) -> tuple[int, float]:
    labels = [int(model.labels[i]) for i, _ in neighbours]
    ones = sum(labels)
    score = ones / model.k
    if 2 * ones > model.k:
        return 1, score
    if 2 * ones < model.k:
        return 0, score
    nearest = {}
    for (_, dist), lab in zip(neighbours, labels):
        nearest.setdefault(lab, dist)
    return (0 if nearest[0] < nearest[1] else 1), score


def predict(model: KnnModel, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return _vote(model, k_nearest(model, x))[0]
    return np.array([_vote(model, k_nearest(model, row))[0] for row in x], dtype=int)


def predict_score(model: KnnModel, x):
    """Fraction of the k neighbours labelled 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return _vote(model, k_nearest(model, x))[1]
    return np.array([_vote(model, k_nearest(model, row))[1] for row in x])
