from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitness.data import EncodedDataset
from fitness.models import ClassifierSpec, ModelError, TrainedModel, dump_model, fit, predict, predict_scores
from fitness.models.linear import logistic_objective
from fitness.models.tree import Tree, forest_scores


def eds_from(X, y, names=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    return EncodedDataset(
        features=X,
        feature_names=tuple(names or (f"c{j}" for j in range(X.shape[1]))),
        label=y,
        sensitive={"a": np.zeros(n, dtype=np.int64)},
        sensitive_columns={"a": None},
        strata_key=np.zeros(n, dtype=np.int64),
    )


SEPARABLE = eds_from([[0.0]] * 10 + [[1.0]] * 10, [0] * 10 + [1] * 10)


def xor_data():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, dtype=float)
    return eds_from(X, [int(a != b) for a, b in X])


def random_data(seed, n=120, d=4):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = (X[:, 0] + 0.3 * rng.standard_normal(n) > 0.5).astype(int)
    return eds_from(X, y)


@pytest.mark.parametrize("kind", ["lr", "lsvm", "dt", "rf"])
def test_separable_training_accuracy(kind):
    spec = ClassifierSpec(kind, {"n_trees": 5, "min_leaf": 1} if kind == "rf" else ({"min_leaf": 1} if kind == "dt" else {}))
    model = fit(spec, SEPARABLE)
    assert np.array_equal(predict(model, SEPARABLE.features), SEPARABLE.label)


def test_single_class_and_dimension_errors():
    with pytest.raises(ModelError, match="single class"):
        fit(ClassifierSpec("lr"), eds_from([[0.0], [1.0]], [1, 1]))
    model = fit(ClassifierSpec("lr"), SEPARABLE)
    with pytest.raises(ModelError):
        predict(model, np.zeros((3, 2)))
    with pytest.raises(ModelError):
        fit(ClassifierSpec("lr"), SEPARABLE, np.ones(3))
    with pytest.raises(ModelError):
        fit(ClassifierSpec("lr"), SEPARABLE, -np.ones(20))
    with pytest.raises(ModelError):
        ClassifierSpec("knn")
    with pytest.raises(ModelError):
        ClassifierSpec("lr", {"depth": 3})


def test_stump_cannot_beat_three_quarters_on_xor():
    data = xor_data()
    acc = (predict(fit(ClassifierSpec("dt", {"max_depth": 1, "min_leaf": 1}), data), data.features) == data.label).mean()
    # every axis-aligned stump with every leaf labelling
    best = 0.0
    for j, left, right in product(range(2), (0, 1), (0, 1)):
        pred = np.where(data.features[:, j] <= 0.5, left, right)
        best = max(best, (pred == data.label).mean())
    assert best <= 0.75 and acc <= 0.75


def test_zero_coefficients_predict_one():
    model = TrainedModel("lr", 3, {"coef": np.zeros(3), "intercept": 0.0})
    rows = np.random.default_rng(0).random((10, 3))
    assert np.all(predict_scores(model, rows) == 0.5)
    assert np.all(predict(model, rows) == 1)


def test_forest_vote_fraction():
    def leaf(v):
        return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([v]))

    trees = [leaf(1.0), leaf(0.9), leaf(0.6), leaf(0.2)]
    assert forest_scores(trees, np.zeros((1, 2)))[0] == 0.75


def test_single_tree_forest_equals_tree():
    data = random_data(1)
    dt = fit(ClassifierSpec("dt"), data)
    rf = fit(ClassifierSpec("rf", {"n_trees": 1, "bootstrap": False, "max_features": "all"}), data)
    rows = np.random.default_rng(2).random((200, 4))
    assert np.array_equal(predict(dt, rows), predict(rf, rows))


@pytest.mark.parametrize("kind", ["lr", "lsvm", "dt", "rf"])
def test_scores_threshold_to_predict_and_determinism(kind):
    data = random_data(3)
    spec = ClassifierSpec(kind, {"n_trees": 10} if kind == "rf" else {}, seed=4)
    a, b = fit(spec, data), fit(spec, data)
    rows = np.random.default_rng(5).random((100, 4))
    s = predict_scores(a, rows)
    assert np.all((s >= 0) & (s <= 1))
    assert np.array_equal((s >= 0.5).astype(int), predict(a, rows))
    assert np.array_equal(s, predict_scores(b, rows))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10))
def test_logistic_gradient_matches_finite_differences(seed, C):
    rng = np.random.default_rng(seed)
    n, d = 15, 3
    X, y = rng.random((n, d)), rng.integers(0, 2, n).astype(float)
    w = rng.random(n) + 0.5
    theta = rng.standard_normal(d + 1)
    _, g = logistic_objective(theta, X, y, w, C)
    h = 1e-6
    for k in range(d + 1):
        e = np.zeros(d + 1)
        e[k] = h
        fd = (logistic_objective(theta + e, X, y, w, C)[0] - logistic_objective(theta - e, X, y, w, C)[0]) / (2 * h)
        assert abs(fd - g[k]) <= 1e-4 * max(1.0, abs(g[k]))


def test_duplicated_rows_equal_doubled_weights():
    data = random_data(6, n=80)
    doubled = eds_from(np.vstack([data.features] * 2), np.concatenate([data.label] * 2))
    spec = ClassifierSpec("lr")
    a = fit(spec, doubled)
    b = fit(spec, data, np.full(80, 2.0))
    rows = np.random.default_rng(7).random((50, 4))
    assert np.max(np.abs(predict_scores(a, rows) - predict_scores(b, rows))) <= 1e-8


@pytest.mark.parametrize("kind", ["dt", "rf"])
def test_tree_predictions_ignore_column_order(kind):
    data = random_data(8, d=5)
    perm = np.array([3, 0, 4, 1, 2])
    names = [data.feature_names[j] for j in perm]
    shuffled = eds_from(data.features[:, perm], data.label, names)
    spec = ClassifierSpec(kind, {"n_trees": 8} if kind == "rf" else {}, seed=1)
    rows = np.random.default_rng(9).random((100, 5))
    pa = predict(fit(spec, data), rows)
    pb = predict(fit(spec, shuffled), rows[:, perm])
    assert np.array_equal(pa, pb)


def test_weights_change_tree_and_forest():
    data = random_data(10)
    w = np.where(data.label == 1, 5.0, 1.0)
    for kind in ("dt", "rf"):
        spec = ClassifierSpec(kind, {"n_trees": 10} if kind == "rf" else {})
        rows = np.random.default_rng(11).random((300, 4))
        assert predict(fit(spec, data, w), rows).mean() >= predict(fit(spec, data), rows).mean()


def test_dump_model(tmp_path):
    for kind in ("lr", "dt"):
        model = fit(ClassifierSpec(kind), random_data(12))
        path = tmp_path / f"{kind}.txt"
        dump_model(model, path)
        text = path.read_text()
        assert text.startswith(f"kind {kind}\nn_features 4\n")
