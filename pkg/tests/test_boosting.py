import math

import numpy as np
import pytest

from fdm_uts import boosting
from fdm_uts.boosting import GbmConfig, GbmModel, SingleClassTrain, predict, predict_proba, predict_score, train, truncate
from fdm_uts.dataset import LabeledDataset
from fdm_uts.tree import Split, ValueLeaf

TOY = LabeledDataset(np.array([[1.0], [2.0], [3.0], [4.0]]), [0, 0, 1, 1])


def random_toy(seed, n=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(6, 30))
    x = rng.normal(size=(n, int(rng.integers(1, 5))))
    y = rng.integers(0, 2, n)
    y[:2] = [0, 1]
    return LabeledDataset(x, y)


def test_balanced_prior_is_zero():
    model = train(TOY, GbmConfig(n_stages=1))
    assert model.initial_score == 0.0


def test_empty_model_predicts_prior():
    ds = LabeledDataset(np.arange(5.0).reshape(-1, 1), [1, 1, 1, 0, 0])
    model = truncate(train(ds, GbmConfig(n_stages=3)), 0)
    prior = math.log(3 / 2)
    assert model.stages == ()
    assert predict_score(model, np.array([[-10.0], [0.0], [99.0]])) == pytest.approx([prior] * 3, abs=1e-15)
    balanced = truncate(train(TOY, GbmConfig(n_stages=2)), 0)
    assert predict_proba(balanced, np.array([7.0])) == 0.5


def test_config_validation():
    with pytest.raises(ValueError):
        GbmConfig(n_stages=0)
    with pytest.raises(ValueError):
        GbmConfig(learning_rate=1.5)
    with pytest.raises(SingleClassTrain):
        train(LabeledDataset(np.zeros((3, 1)), [1, 1, 1]))


def test_separable_toy_beats_a_single_stage():
    model = train(TOY, GbmConfig(n_stages=10))
    assert predict(model, TOY.features).tolist() == [0, 0, 1, 1]
    one = train(TOY, GbmConfig(n_stages=1))
    assert model.train_loss[-1] < one.train_loss[-1]


def test_leaf_values_are_scaled_newton_steps():
    model = train(TOY, GbmConfig(n_stages=1, stage_tree_max_depth=1, learning_rate=0.1))
    stage = model.stages[0]
    # p = 0.5 everywhere: residuals -0.5/+0.5, hessian 0.25 -> step -2/+2
    assert stage == Split(0, 2.5, ValueLeaf(pytest.approx(-0.2)), ValueLeaf(pytest.approx(0.2)))


@pytest.mark.parametrize("seed", range(10))
def test_stagewise_loss_non_increasing(seed):
    model = train(random_toy(seed), GbmConfig(n_stages=40))
    assert np.all(np.diff(model.train_loss) <= 1e-9)


def test_prefix_equals_shorter_training():
    ds = random_toy(3, 25)
    full = train(ds, GbmConfig(n_stages=12))
    for k in (1, 5, 10):
        short = train(ds, GbmConfig(n_stages=k))
        assert predict_score(truncate(full, k), ds.features).tobytes() == predict_score(short, ds.features).tobytes()


def test_label_swap_negates_scores():
    ds = random_toy(4, 20)
    flipped = LabeledDataset(ds.features, 1 - ds.labels)
    a = train(ds, GbmConfig(n_stages=15))
    b = train(flipped, GbmConfig(n_stages=15))
    np.testing.assert_allclose(predict_score(b, ds.features), -predict_score(a, ds.features), atol=1e-9)


def exhaustive_sse_stump(x, r):
    best = (None, None, -np.inf)
    for j in range(x.shape[1]):
        values = sorted(set(x[:, j]))
        for lo, hi in zip(values[:-1], values[1:]):
            left = r[x[:, j] <= lo]
            right = r[x[:, j] > lo]
            sse = lambda v: float(np.sum((v - v.mean()) ** 2))  # noqa: E731
            reduction = sse(r) - sse(left) - sse(right)
            if reduction > best[2] + 1e-12:
                best = (j, (lo + hi) / 2, reduction)
    return best


@pytest.mark.parametrize("seed", range(8))
def test_single_stump_maximizes_squared_error_reduction(seed):
    ds = random_toy(seed)
    model = train(ds, GbmConfig(n_stages=1, stage_tree_max_depth=1))
    p = 1 / (1 + np.exp(-model.initial_score))
    j, threshold, _ = exhaustive_sse_stump(ds.features, ds.labels - p)
    stage = model.stages[0]
    assert (stage.feature, stage.threshold) == (j, pytest.approx(threshold, abs=1e-12))


def test_determinism_and_persistence():
    ds = random_toy(9)
    a, b = train(ds, GbmConfig(n_stages=20)), train(ds, GbmConfig(n_stages=20))
    assert a == b
    back = GbmModel.from_dict(a.to_dict())
    assert back == a
    assert predict_score(back, ds.features).tobytes() == predict_score(a, ds.features).tobytes()
    assert boosting.log_loss(np.array([1.0]), np.array([1.0])) == pytest.approx(0, abs=1e-11)
