import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from hpber.dataset import DataError, LabeledDataset
from hpber.metrics import adjusted_rand_index, confusion_rate
from hpber.oracle import GaussianSpec, sample_gaussian_mixture
from hpber.smartsvm import (SmartSvmModel, compare_transformations, forward_feature_select,
                            model_from_json, predict, predict_any, predict_ovo, predict_ovr,
                            train, train_ovo, train_ovr)
from hpber.svm import LinearModel, predict_margin, train_binary

FAST = dict(c_grid=[1.0], cv_k=2)
CENTERS5 = [(0.0, 0.0), (8.0, 0.0), (0.0, 8.0), (8.0, 8.0), (4.0, 4.0)]


def blobs(centers, n, seed, sigma=1.0):
    K = len(centers)
    return sample_gaussian_mixture([GaussianSpec(c, sigma, 1 / K) for c in centers],
                                   len(centers[0]), n, seed)


@pytest.fixture(scope="module")
def five():
    return blobs(CENTERS5, 1000, 2)


@pytest.fixture(scope="module")
def five_model(five):
    return train(five, **FAST)


def test_confusion_rate_examples():
    y = np.array([1, 1, 2, 2, 3, 3])
    y_hat = np.array([1, 2, 2, 2, 3, 3])
    assert confusion_rate(y, y_hat, 1) == pytest.approx(1 / 6)
    assert confusion_rate(y, y_hat, 2) == pytest.approx(1 / 6)
    assert confusion_rate(y, y_hat, 3) == 0.0
    assert all(confusion_rate(y, y, k) == 0 for k in (1, 2, 3))
    with pytest.raises(ValueError):
        confusion_rate(y, y_hat[:3], 1)


def test_ari_examples():
    y = np.array([1, 1, 1, 2, 2, 2])
    y_hat = np.array([1, 1, 2, 2, 2, 2])
    assert adjusted_rand_index(y, y_hat) == pytest.approx((4 - 2.8) / (6.5 - 2.8), abs=1e-12)
    assert adjusted_rand_index(y, y) == 1.0
    assert adjusted_rand_index(y, 3 - y) == 1.0
    with pytest.raises(ValueError):
        adjusted_rand_index(y, y_hat[:4])
    with pytest.raises(ValueError):
        adjusted_rand_index([1], [1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=2, max_size=60))
def test_ari_against_reference(pairs):
    y, y_hat = map(np.array, zip(*pairs))
    ours = adjusted_rand_index(y, y_hat)
    assert ours == pytest.approx(adjusted_rand_score(y, y_hat), abs=1e-9)
    assert ours == pytest.approx(adjusted_rand_index(y_hat, y), abs=1e-12)
    assert ours <= 1.0 + 1e-12
    perm = np.array([3, 0, 4, 1, 2])
    assert adjusted_rand_index(perm[y], y_hat) == pytest.approx(ours, abs=1e-12)


def test_model_counts(five, five_model):
    assert len(five_model.node_models) == 4
    assert len(list(five_model.tree.internal_nodes())) == 4
    assert len(train_ovo(five, **FAST).models) == 10
    assert len(train_ovr(five, **FAST).models) == 5


def test_training_accuracy(five, five_model):
    assert np.mean(predict(five_model, five.features) == five.labels) >= 0.99


def test_node_models_use_node_samples(five, five_model):
    for node in five_model.tree.internal_nodes():
        rows = np.isin(five.labels, node.classes)
        signs = np.where(np.isin(five.labels[rows], node.left.classes), 1.0, -1.0)
        ref = train_binary(five.features[rows], signs, 1.0, seed=42)
        assert np.array_equal(five_model.node_models[node.classes].weights, ref.weights)


def test_two_classes_reduce_to_one_binary_model():
    ds = blobs([(0.0, 0.0), (3.0, 0.0)], 300, 1)
    smart, ovo, ovr = train(ds, **FAST), train_ovo(ds, **FAST), train_ovr(ds, **FAST)
    assert len(smart.node_models) == len(ovo.models) == 1 and len(ovr.models) == 2
    m = smart.node_models[(1, 2)]
    assert np.array_equal(m.weights, ovo.models[(1, 2)].weights)
    ref = train_binary(ds.features, np.where(ds.labels == 1, 1.0, -1.0), 1.0, seed=42)
    assert np.array_equal(m.weights, ref.weights)
    expected = np.where(predict_margin(m, ds.features) >= 0, 1, 2)
    assert np.array_equal(predict(smart, ds.features), expected)


def test_larger_k_counts():
    centers = [(10.0 * (i % 4), 10.0 * (i // 4)) for i in range(7)]
    ds = blobs(centers, 700, 3)
    m = train(ds, **FAST)
    assert len(m.node_models) == 6 < 21
    centers = [(10.0 * (i % 5), 10.0 * (i // 5)) for i in range(10)]
    ds = blobs(centers, 1000, 3)
    assert len(train(ds, **FAST).node_models) == 9
    assert len(train_ovo(ds, **FAST).models) == 45


def test_separable_all_strategies_perfect(five):
    ds = blobs([(0.0, 0.0), (20.0, 0.0), (0.0, 20.0), (20.0, 20.0)], 400, 7)
    for fit, pred in [(train, predict), (train_ovo, predict_ovo), (train_ovr, predict_ovr)]:
        model = fit(ds, c_grid=[16.0], cv_k=2)
        assert adjusted_rand_index(ds.labels, pred(model, ds.features)) == 1.0


def test_batch_equals_per_sample(five, five_model):
    X = five.features[::37]
    batch = predict(five_model, X)
    single = [predict(five_model, x[None, :])[0] for x in X]
    assert list(batch) == single


def test_routing_ignores_other_branches(five, five_model):
    root = five_model.tree
    before = predict(five_model, five.features)
    scrambled = dict(five_model.node_models)
    bad = LinearModel(np.array([1e3, -1e3, 7.0]), 1.0, 0.0)
    for node in root.right.internal_nodes():
        scrambled[node.classes] = bad
    other = SmartSvmModel(root, scrambled, five_model.label_names, five_model.n_features)
    after = predict(other, five.features)
    in_left = np.isin(before, root.left.classes)
    assert np.array_equal(before[in_left], after[in_left])


def test_zero_margin_routes_left():
    from hpber.tree import TreeNode
    tree = TreeNode((1, 2), TreeNode((1,)), TreeNode((2,)), 0.1)
    model = SmartSvmModel(tree, {(1, 2): LinearModel(np.array([1.0, 0.0]), 1.0, 0.0)},
                          ("a", "b"), 1)
    assert list(predict(model, [[0.0], [-1.0], [1.0]])) == [1, 2, 1]


def test_predict_dimension_mismatch(five_model):
    with pytest.raises(ValueError, match="feature matrix"):
        predict(five_model, np.zeros((3, 5)))


def test_ovo_vote_tie_goes_to_smaller_id():
    # three pairwise models that form a cycle: 1 beats 2, 2 beats 3, 3 beats 1
    always = LinearModel(np.array([0.0, 1.0]), 1.0, 0.0)
    never = LinearModel(np.array([0.0, -1.0]), 1.0, 0.0)
    from hpber.smartsvm import MulticlassModel
    m = MulticlassModel("ovo", {(1, 2): always, (2, 3): always, (1, 3): never}, ("a", "b", "c"), 1)
    assert list(predict_ovo(m, [[0.0]])) == [1]


def test_tiny_class_rejected():
    ds = LabeledDataset(np.arange(12.0)[:, None], [1] * 9 + [2] * 3, ("big", "small"))
    with pytest.raises(DataError, match="small"):
        train(ds, cv_k=5)
    with pytest.raises(DataError):
        train_ovo(ds, cv_k=5)


def test_cross_validated_training_deterministic():
    ds = blobs([(0.0, 0.0), (2.0, 0.0), (1.0, 2.0)], 300, 4)
    a = train(ds, c_grid=[0.25, 1.0, 4.0], cv_k=3, seed=9)
    b = train(ds, c_grid=[0.25, 1.0, 4.0], cv_k=3, seed=9)
    assert a.tree.canonical() == b.tree.canonical()
    for key in a.node_models:
        assert np.array_equal(a.node_models[key].weights, b.node_models[key].weights)
        assert a.node_models[key].c_value in (0.25, 1.0, 4.0)


def test_parallel_equals_sequential(five):
    a = train(five, **FAST, workers=1)
    b = train(five, **FAST, workers=3)
    assert a.tree.canonical() == b.tree.canonical()
    assert all(np.array_equal(a.node_models[k].weights, b.node_models[k].weights)
               for k in a.node_models)


def test_timing_fields(five_model):
    t = five_model.timing
    assert set(t) == {"preprocess_seconds", "fit_seconds", "total_seconds"}
    assert t["total_seconds"] == pytest.approx(t["preprocess_seconds"] + t["fit_seconds"])


def test_json_roundtrips(five, five_model):
    for model in (five_model, train_ovo(five, **FAST, standardize=True), train_ovr(five, **FAST)):
        doc = json.loads(json.dumps(model.to_json()))
        back = model_from_json(doc)
        assert np.array_equal(predict_any(back, five.features), predict_any(model, five.features))
    assert five_model.to_json()["version"] == "smartsvm-model/1"
    with pytest.raises(ValueError, match="version"):
        SmartSvmModel.from_json({"version": "smartsvm-model/9"})


def test_standardization_stored_and_applied(five):
    scaled = five.with_features(five.features * [1000.0, 0.001])
    m = train(scaled, **FAST, standardize=True)
    assert m.preprocessing is not None
    assert np.mean(predict(m, scaled.features) == scaled.labels) >= 0.99


def test_forward_feature_select():
    rng = np.random.default_rng(0)
    base = blobs([(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)], 450, 5)
    noise = rng.standard_normal((base.n, 3)) * 3
    X = np.column_stack([noise[:, 0], base.features[:, 0], noise[:, 1], base.features[:, 1],
                         noise[:, 2]])
    ds = base.with_features(X)
    picks = forward_feature_select(ds, 2)
    assert sorted(picks) == [1, 3]
    assert forward_feature_select(ds, 2) == picks
    assert forward_feature_select(ds, 2, aggregate="worst")[:2] in ([1, 3], [3, 1])
    one = base.with_features(base.features[:, :1])
    assert forward_feature_select(one, 1) == [0]
    with pytest.raises(ValueError):
        forward_feature_select(ds, 6)


def test_compare_transformations():
    ds = blobs([(0.0, 0.0), (3.0, 0.0)], 300, 6)
    scores = compare_transformations(ds, {"raw": ds.features,
                                          "noise": np.random.default_rng(1).standard_normal((300, 2))})
    assert scores["raw"] < 0.3 < scores["noise"]
