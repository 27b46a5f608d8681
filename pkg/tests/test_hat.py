import random
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from streamsim.errors import TargetTypeMismatch
from streamsim.online.hat import CLASSIFICATION, REGRESSION, HoeffdingAdaptiveTree, Leaf, Split
from streamsim.online.hoeffding import HoeffdingBoundParams

FEATURES = [("x1", "numeric"), ("x2", "numeric"), ("c", "categorical")]


def point(rng):
    return {"x1": rng.random(), "x2": rng.random(), "c": rng.choice("pqr")}


def label(x, flipped=False):
    y = "A" if x["x1"] > 0.5 else "B"
    return ({"A": "B", "B": "A"}[y]) if flipped else y


def tree(task=CLASSIFICATION, grace=100, **kw):
    return HoeffdingAdaptiveTree(task, FEATURES, HoeffdingBoundParams(grace_period=grace), **kw)


def test_separating_feature_splits_root():
    rng = random.Random(0)
    t = tree(grace=50)
    for _ in range(500):
        x = point(rng)
        t.learn_one(x, label(x))
    assert isinstance(t.root, Split) and t.root.feature == "x1"
    assert abs(t.root.value - 0.5) < 0.1


def test_categorical_split():
    rng = random.Random(0)
    t = tree(grace=50)
    for _ in range(500):
        x = point(rng)
        t.learn_one(x, "yes" if x["c"] == "q" else "no")
    assert isinstance(t.root, Split) and t.root.feature == "c"


def test_grace_gate():
    rng = random.Random(0)
    t = tree(grace=200)
    for _ in range(199):
        x = point(rng)
        t.learn_one(x, label(x))
    assert isinstance(t.root, Leaf) and t.n_nodes() == 1


def test_max_depth():
    rng = random.Random(0)
    t = HoeffdingAdaptiveTree(REGRESSION, FEATURES, HoeffdingBoundParams(grace_period=50, max_depth=2))
    for _ in range(20_000):
        x = point(rng)
        t.learn_one(x, 10 * x["x1"] + 5 * x["x2"] + rng.gauss(0, 0.1))
    assert 1 < t.depth() <= 3


def run_flip(seed, flip=50_000, after=20_000, tail=2_000):
    rng = random.Random(seed)
    t = tree(grace=100, seed=seed)
    for _ in range(flip):
        x = point(rng)
        t.learn_one(x, label(x))
    hits = []
    for _ in range(after):
        x = point(rng)
        y = label(x, True)
        hits.append(t.predict(x) == y)
        t.learn_one(x, y)
    return sum(hits[-tail:]) / tail, t.n_switches


def test_recovers_after_label_flip():
    results = [run_flip(seed) for seed in range(20)]
    assert statistics.mean(acc for acc, _ in results) >= 0.9
    assert all(switches >= 1 for _, switches in results)


def test_no_drift_detection_means_no_switch():
    rng = random.Random(1)
    t = tree(grace=100, drift_detection=False)
    for i in range(6000):
        x = point(rng)
        t.learn_one(x, label(x, flipped=i >= 3000))
    assert t.n_switches == 0 and t.n_alternates == 0


def test_leaf_table_sampling():
    t = tree()
    t.learn_one({"x1": 0.1}, "A")
    rng = random.Random(0)
    assert {t.sample({}, rng) for _ in range(50)} == {"A"}

    t = tree(grace=10**6)
    labels = ["manual"] * 200 + ["automated"] * 800
    random.Random(5).shuffle(labels)
    for y in labels:
        t.learn_one({}, y)
    n = 10_000
    k = sum(t.sample({}, rng) == "automated" for _ in range(n))
    assert abs(k / n - 0.8) < 4 * (0.16 / n) ** 0.5
    assert t.predict_proba({}) == {"manual": 0.2, "automated": 0.8}


def test_regression_sampling():
    t = tree(REGRESSION)
    assert t.sample({}, random.Random(0)) is None
    t.learn_one({}, 600)
    assert t.sample({}, random.Random(0)) == 600


def test_target_type_checked():
    with pytest.raises(TargetTypeMismatch):
        tree(REGRESSION).learn_one({}, "slow")
    with pytest.raises(TargetTypeMismatch):
        tree(CLASSIFICATION).learn_one({}, 0.5)
    with pytest.raises(ValueError):
        HoeffdingAdaptiveTree("clustering", FEATURES)


def test_missing_features_are_tolerated():
    rng = random.Random(0)
    t = tree(grace=20)
    for _ in range(400):
        x = point(rng)
        if rng.random() < 0.3:
            del x["x1"]
        t.learn_one(x, label(x) if "x1" in x else "A")
    assert t.predict({}) in ("A", "B")


@settings(max_examples=20)
@given(st.integers(0, 10**6))
def test_batch_fit_is_deterministic(seed):
    rng = random.Random(seed)
    rows = []
    for _ in range(300):
        x = point(rng)
        rows.append((x, 60.0 * (1 + x["x1"]) + rng.random()))
    a = tree(REGRESSION, grace=50, drift_detection=False).fit_batch(rows)
    b = tree(REGRESSION, grace=50, drift_detection=False).fit_batch(rows)
    assert a.to_dict() == b.to_dict()
    assert sum(leaf.n_seen for leaf in a.leaves()) == len(rows)
