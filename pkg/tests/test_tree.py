import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdm_uts.dataset import LabeledDataset
from fdm_uts.tree import (
    Leaf,
    Split,
    TreeHyperparams,
    TreeModel,
    best_split,
    depth,
    entropy,
    grow,
    predict,
    predict_score,
    structural_violations,
)


def _h(labels):
    n = len(labels)
    return -sum(c / n * math.log2(c / n) for c in Counter(labels).values())


def exhaustive_stumps(x, y):
    """Every ``x[:, j] <= v`` partition with both sides non-empty: (j, v, gain, accuracy)."""
    out = []
    n = len(y)
    for j in range(x.shape[1]):
        for v in sorted(set(x[:, j]))[:-1]:
            left = [y[i] for i in range(n) if x[i, j] <= v]
            right = [y[i] for i in range(n) if x[i, j] > v]
            gain = _h(list(y)) - len(left) / n * _h(left) - len(right) / n * _h(right)
            correct = sum(max(Counter(side).values()) for side in (left, right))
            out.append((j, v, gain, correct / n))
    return out


def shape(node):
    if isinstance(node, Split):
        return (node.feature, shape(node.left), shape(node.right))
    return node.counts


@pytest.mark.parametrize(
    "labels, expected",
    [([0, 0, 1, 1], 1.0), ([1, 1, 1], 0.0), ([1, 1, 1, 0], -0.75 * math.log2(0.75) - 0.25 * math.log2(0.25))],
)
def test_entropy(labels, expected):
    assert entropy(labels) == pytest.approx(expected, abs=1e-15)
    assert round(entropy([1, 1, 1, 0]), 4) == 0.8113


def test_best_split_four_rows():
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = [0, 0, 1, 1]
    candidates = exhaustive_stumps(x, y)
    assert max(c[2] for c in candidates) == pytest.approx(1.0)
    assert best_split(x, y) == (0, 2.5, pytest.approx(1.0))


def test_best_split_none_cases():
    assert best_split(np.array([[1.0], [2.0], [3.0], [4.0]]), [1, 1, 1, 1]) is None
    assert best_split(np.array([[1.0, 2.0], [1.0, 2.0]]), [0, 1]) is None


def test_best_split_respects_min_samples_leaf():
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    assert best_split(x, [1, 0, 0, 0], TreeHyperparams(min_samples_leaf=2))[1] == 2.5
    assert best_split(x, [1, 0, 0, 0], TreeHyperparams(min_samples_leaf=3)) is None
    assert best_split(x, [1, 0, 0, 0])[1] == 1.5


def test_ties_break_to_lowest_feature_then_threshold():
    # both features separate equally well
    x = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0]])
    assert best_split(x, [0, 0, 1, 1])[:2] == (0, 2.5)
    # same feature, two equal-gain thresholds
    x = np.array([[1.0], [2.0], [3.0]])
    feature, threshold, _ = best_split(x, [0, 1, 0])
    assert (feature, threshold) == (0, 1.5)


def test_stump_and_predictions():
    ds = LabeledDataset(np.array([[1.0], [2.0], [3.0], [4.0]]), [0, 0, 1, 1])
    model = grow(ds)
    assert depth(model.root) == 1
    assert predict(model, ds.features).tolist() == [0, 0, 1, 1]
    assert predict(model, np.array([2.0])) == 0 and predict(model, np.array([3.0])) == 1
    assert shape(grow(ds, TreeHyperparams(max_depth=1)).root) == shape(model.root)


def test_pure_dataset_single_leaf():
    ds = LabeledDataset(np.array([[1.0], [5.0], [3.0]]), [1, 1, 1])
    model = grow(ds)
    assert model.root == Leaf((0, 3))
    assert predict(model, np.array([[100.0], [-5.0]])).tolist() == [1, 1]
    assert predict_score(model, np.array([0.0])) == 1.0


def test_leaf_majority_tie_predicts_one():
    ds = LabeledDataset(np.array([[1.0], [1.0]]), [0, 1])
    model = grow(ds)
    assert model.root == Leaf((1, 1))
    assert predict(model, np.array([1.0])) == 1
    assert predict_score(model, np.array([1.0])) == 0.5


def test_unrestricted_tree_memorizes_distinct_rows():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 4))
    y = rng.integers(0, 2, 30)
    model = grow(LabeledDataset(x, y), TreeHyperparams(max_depth=50))
    assert predict(model, x).tolist() == y.tolist()
    assert structural_violations(model) == []


def test_hyperparam_validation():
    with pytest.raises(ValueError):
        TreeHyperparams(max_depth=0)
    with pytest.raises(ValueError):
        TreeHyperparams(min_samples_split=1)
    with pytest.raises(ValueError):
        TreeHyperparams(criterion="gini")


def test_depth_and_leaf_limits_hold():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, 40)
    for hp in [TreeHyperparams(max_depth=2), TreeHyperparams(min_samples_leaf=4), TreeHyperparams(min_samples_split=10)]:
        model = grow(LabeledDataset(x, y), hp)
        assert structural_violations(model) == []
        assert depth(model.root) <= hp.max_depth


def test_validator_catches_violations():
    bad = TreeModel(Split(0, 0.5, Leaf((1, 0)), Leaf((0, 0))), TreeHyperparams(min_samples_leaf=1))
    assert any("min_samples_leaf" in p for p in structural_violations(bad))
    useless = TreeModel(Split(0, 0.5, Leaf((1, 1)), Leaf((1, 1))))
    assert any("gain" in p for p in structural_violations(useless))


small = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
)


@settings(max_examples=300)
@given(small)
def test_grown_tree_beats_every_stump(data):
    rows, y = data
    x = np.array(rows, dtype=float)
    model = grow(LabeledDataset(x, y))
    accuracy = np.mean(predict(model, x) == np.array(y))
    stumps = exhaustive_stumps(x, y)
    for _, _, _, acc in stumps:
        assert accuracy >= acc - 1e-12
    if stumps and max(s[2] for s in stumps) > 1e-12:
        assert isinstance(model.root, Split)
        found = best_split(x, y)
        assert found[2] == pytest.approx(max(s[2] for s in stumps), abs=1e-12)
    assert structural_violations(model) == []


@settings(max_examples=100)
@given(small, st.integers(0, 1))
def test_monotone_transform_covariance(data, column):
    rows, y = data
    x = np.array(rows, dtype=float)
    xt = x.copy()
    xt[:, column] = np.exp(xt[:, column]) * 3 + 1
    a = grow(LabeledDataset(x, y))
    b = grow(LabeledDataset(xt, y))
    assert shape(a.root) == shape(b.root)
    assert predict(a, x).tolist() == predict(b, xt).tolist()


def test_determinism_and_persistence():
    rng = np.random.default_rng(2)
    ds = LabeledDataset(rng.normal(size=(25, 4)), rng.integers(0, 2, 25))
    a, b = grow(ds), grow(ds)
    assert a == b
    back = TreeModel.from_dict(a.to_dict())
    assert back == a
    assert a.to_dict()["type"] == "tree"
    assert a.to_dict()["hyperparams"]["criterion"] == "entropy"


def test_render_lists_every_split_and_leaf():
    ds = LabeledDataset(np.array([[10.0, 0.1, 30, 200], [90.0, 0.1, 30, 200]]), [0, 1])
    text = grow(ds).render()
    assert text.splitlines() == [
        "infill_pct <= 50",
        "    -> class 0  counts=[1, 0]",
        "infill_pct > 50",
        "    -> class 1  counts=[0, 1]",
    ]
