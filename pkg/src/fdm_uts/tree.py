"""Entropy (information gain) decision tree classifier.

Candidate thresholds are midpoints between consecutive distinct values of a
feature; ``x[feature] <= threshold`` routes left. Equal gains keep the
lowest feature index, then the lowest threshold. Majority ties at a leaf
predict class 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .dataset import FEATURE_NAMES, LabeledDataset

# Gains below this are treated as zero (floating-point noise on equal proportions).
GAIN_TOL = 1e-12


@dataclass(frozen=True)
class TreeHyperparams:
    max_depth: int = 6
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    criterion: str = "entropy"
    splitter: str = "best"

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.criterion != "entropy":
            raise ValueError("only the entropy criterion is supported")
        if self.splitter != "best":
            raise ValueError("only the best splitter is supported")

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "min_samples_split": self.min_samples_split,
            "splitter": self.splitter,
        }


@dataclass(frozen=True)
class Leaf:
    counts: tuple[int, int]

    @property
    def label(self) -> int:
        n0, n1 = self.counts
        return 1 if n1 >= n0 else 0

    @property
    def score(self) -> float:
        n0, n1 = self.counts
        return n1 / (n0 + n1)


@dataclass(frozen=True)
class ValueLeaf:
    """Leaf carrying a real value (regression trees inside the boosting ensemble)."""

    value: float


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, ValueLeaf, Split]


def route(node: Node, x) -> Leaf | ValueLeaf:
    while isinstance(node, Split):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def node_to_dict(node: Node) -> dict:
    if isinstance(node, Split):
        return {
            "feature": node.feature,
            "threshold": float(node.threshold),
            "left": node_to_dict(node.left),
            "right": node_to_dict(node.right),
        }
    if isinstance(node, Leaf):
        return {"leaf": node.label, "counts": list(node.counts)}
    return {"leaf": float(node.value)}


def node_from_dict(data: dict) -> Node:
    if "feature" in data:
        return Split(
            int(data["feature"]),
            float(data["threshold"]),
            node_from_dict(data["left"]),
            node_from_dict(data["right"]),
        )
    if "counts" in data:
        n0, n1 = data["counts"]
        return Leaf((int(n0), int(n1)))
    return ValueLeaf(float(data["leaf"]))


def entropy(labels) -> float:
    """Shannon entropy in bits of a binary label vector."""
    y = np.asarray(labels)
    if y.size == 0:
        raise ValueError("entropy of an empty label vector")
    return float(_binary_entropy(np.sum(y == 1), y.size))


def _binary_entropy(k, n):
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = k / n
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(p < 1, (1 - p) * np.log2(1 - p), 0.0))
    return h


def sorted_candidates(column, min_samples_leaf: int):
    """Sort order and the admissible cut positions of one feature column.

    Position ``i`` means rows ``order[:i + 1]`` go left; its threshold is the
    midpoint of the i-th and (i+1)-th sorted values.
    """
    order = np.argsort(column, kind="stable")
    xs = column[order]
    n = xs.size
    n_left = np.arange(1, n)
    ok = (xs[:-1] < xs[1:]) & (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
    positions = np.flatnonzero(ok)
    lo, hi = xs[positions], xs[positions + 1]
    thresholds = lo + (hi - lo) / 2
    # adjacent doubles can round the midpoint up onto the upper value
    thresholds = np.where(thresholds >= hi, lo, thresholds)
    return order, positions, thresholds


def best_split(rows, labels, hyperparams: TreeHyperparams = TreeHyperparams()):
    """Highest-gain ``(feature_index, threshold, gain)``, or None if no split helps."""
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    y = np.asarray(labels, dtype=int)
    n = y.size
    if n < hyperparams.min_samples_split:
        return None
    parent = _binary_entropy(y.sum(), n)
    if parent == 0:
        return None

    best = None
    for j in range(x.shape[1]):
        order, positions, thresholds = sorted_candidates(x[:, j], hyperparams.min_samples_leaf)
        if positions.size == 0:
            continue
        ones = np.cumsum(y[order])
        n_left = positions + 1
        k_left = ones[positions]
        n_right = n - n_left
        k_right = ones[-1] - k_left
        gains = parent - (
            n_left / n * _binary_entropy(k_left, n_left) + n_right / n * _binary_entropy(k_right, n_right)
        )
        i = int(np.argmax(gains))  # first maximum = lowest threshold
        gain = float(gains[i])
        if gain > GAIN_TOL and (best is None or gain > best[2] + GAIN_TOL):
            best = (j, float(thresholds[i]), gain)
    return best


@dataclass(frozen=True)
class TreeModel:
    root: Node
    hyperparams: TreeHyperparams = TreeHyperparams()

    def to_dict(self) -> dict:
        return {"type": "tree", "hyperparams": self.hyperparams.to_dict(), "root": node_to_dict(self.root)}

    @classmethod
    def from_dict(cls, data: dict) -> TreeModel:
        return cls(node_from_dict(data["root"]), TreeHyperparams(**data["hyperparams"]))

    def render(self, feature_names=FEATURE_NAMES) -> str:
        """Indented text view: one line per split, one per leaf."""
        lines = []

        def walk(node, indent):
            pad = "    " * indent
            if isinstance(node, Split):
                name = feature_names[node.feature] if node.feature < len(feature_names) else f"x{node.feature}"
                lines.append(f"{pad}{name} <= {node.threshold:.6g}")
                walk(node.left, indent + 1)
                lines.append(f"{pad}{name} > {node.threshold:.6g}")
                walk(node.right, indent + 1)
            else:
                lines.append(f"{pad}-> class {node.label}  counts={list(node.counts)}")

        walk(self.root, 0)
        return "\n".join(lines) + "\n"


def _grow(x, y, depth, hp: TreeHyperparams) -> Node:
    n1 = int(y.sum())
    leaf = Leaf((y.size - n1, n1))
    if depth >= hp.max_depth or y.size < hp.min_samples_split:
        return leaf
    found = best_split(x, y, hp)
    if found is None:
        return leaf
    feature, threshold, _ = found
    mask = x[:, feature] <= threshold
    return Split(
        feature,
        threshold,
        _grow(x[mask], y[mask], depth + 1, hp),
        _grow(x[~mask], y[~mask], depth + 1, hp),
    )


def grow(train: LabeledDataset, hyperparams: TreeHyperparams = TreeHyperparams()) -> TreeModel:
    if len(train) == 0:
        raise ValueError("cannot grow a tree on an empty dataset")
    return TreeModel(_grow(train.features, train.labels, 0, hyperparams), hyperparams)


def predict(model: TreeModel, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return route(model.root, x).label
    return np.array([route(model.root, row).label for row in x], dtype=int)


def predict_score(model: TreeModel, x):
    """Positive-class fraction of the training samples in the reached leaf."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return route(model.root, x).score
    return np.array([route(model.root, row).score for row in x])


def depth(node: Node) -> int:
    if isinstance(node, Split):
        return 1 + max(depth(node.left), depth(node.right))
    return 0


def _counts(node: Node) -> tuple[int, int]:
    if isinstance(node, Split):
        a, b = _counts(node.left), _counts(node.right)
        return a[0] + b[0], a[1] + b[1]
    return node.counts


def structural_violations(model: TreeModel) -> list[str]:
    """Problems found walking the tree; an empty list means the tree is sound."""
    hp = model.hyperparams
    problems = []

    def walk(node, level, path):
        if isinstance(node, Split):
            n0, n1 = _counts(node)
            if n0 + n1 < hp.min_samples_split:
                problems.append(f"{path}: split from {n0 + n1} < min_samples_split samples")
            l0, l1 = _counts(node.left)
            r0, r1 = _counts(node.right)
            n = n0 + n1
            gain = _binary_entropy(n1, n) - (
                (l0 + l1) / n * _binary_entropy(l1, l0 + l1) + (r0 + r1) / n * _binary_entropy(r1, r0 + r1)
            )
            if not gain > 0:
                problems.append(f"{path}: split without positive gain")
            walk(node.left, level + 1, path + "L")
            walk(node.right, level + 1, path + "R")
        else:
            if level > hp.max_depth:
                problems.append(f"{path}: leaf at depth {level} > max_depth")
            if sum(node.counts) < hp.min_samples_leaf:
                problems.append(f"{path}: leaf with {sum(node.counts)} < min_samples_leaf samples")

    walk(model.root, 0, "root")
    return problems
