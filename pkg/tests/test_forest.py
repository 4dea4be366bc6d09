"""Bagged forest: determinism, performance, importances, persistence."""

import numpy as np
import pytest

from hydrodetect.forest import ForestConfig, RandomForest, _resolve_max_features
from hydrodetect.metrics import roc_auc


def _separable(seed, n=400, d=6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 1] + 0.7 * X[:, 3] + rng.normal(scale=0.3, size=n) > 0.4).astype(np.int64)
    return X, y


def test_max_features_rule():
    assert _resolve_max_features("sqrt", 93) == 10
    assert _resolve_max_features("sqrt", 9) == 3
    assert _resolve_max_features("all", 7) == 7
    assert _resolve_max_features(None, 7) == 7
    assert _resolve_max_features(4, 7) == 4
    assert _resolve_max_features(100, 7) == 7


def test_probabilities_and_performance():
    X, y = _separable(0)
    model = RandomForest(ForestConfig(n_trees=40, seed=1)).fit(X, y)
    probs = model.predict_proba(X)
    assert probs.min() >= 0.0 and probs.max() <= 1.0
    Xv, yv = _separable(99)
    assert roc_auc(yv, model.predict_proba(Xv)) > 0.9
    np.testing.assert_array_equal(model.predict(X), (probs >= 0.5).astype(np.int64))


def test_determinism_per_seed():
    X, y = _separable(1)
    a = RandomForest(ForestConfig(n_trees=10, seed=5)).fit(X, y)
    b = RandomForest(ForestConfig(n_trees=10, seed=5)).fit(X, y)
    c = RandomForest(ForestConfig(n_trees=10, seed=6)).fit(X, y)
    probe = np.random.default_rng(0).normal(size=(50, 6))
    np.testing.assert_array_equal(a.predict_proba(probe), b.predict_proba(probe))
    assert not np.array_equal(a.predict_proba(probe), c.predict_proba(probe))


def test_importances():
    X, y = _separable(2)
    model = RandomForest(ForestConfig(n_trees=50, seed=0)).fit(X, y)
    imp = model.feature_importances_
    assert imp.shape == (6,)
    assert (imp >= 0).all()
    assert imp.sum() == pytest.approx(1.0, abs=1e-12)
    assert set(np.argsort(-imp)[:2]) == {1, 3}


def test_monotone_transform_invariance():
    """Axis-wise strictly increasing transforms preserve the predictions on
    the training points (splits depend only on value order)."""
    X, y = _separable(3, n=150, d=4)
    cfg = ForestConfig(n_trees=5, bootstrap=False, max_features="all", seed=2)
    base = RandomForest(cfg).fit(X, y).predict_proba(X)
    Xt = np.column_stack([np.exp(X[:, 0]), 3.0 * X[:, 1] + 7.0, X[:, 2] ** 3,
                          np.arctan(X[:, 3])])
    transformed = RandomForest(cfg).fit(Xt, y).predict_proba(Xt)
    np.testing.assert_allclose(transformed, base, atol=1e-12)


def test_payload_round_trip():
    X, y = _separable(4, n=200)
    model = RandomForest(ForestConfig(n_trees=8, max_depth=6, seed=3)).fit(
        X, y, feature_names=[f"ch{j}" for j in range(6)])
    clone = RandomForest.from_payload(model.to_payload())
    probe = np.random.default_rng(1).normal(size=(80, 6))
    np.testing.assert_array_equal(model.predict_proba(probe),
                                  clone.predict_proba(probe))
    assert clone.feature_names_ == model.feature_names_


def test_validation():
    with pytest.raises(ValueError):
        ForestConfig(n_trees=0)
    model = RandomForest(ForestConfig(n_trees=2))
    with pytest.raises(ValueError, match="empty"):
        model.fit(np.zeros((0, 3)), np.zeros(0))
    X, y = _separable(5, n=30)
    model.fit(X, y)
    with pytest.raises(ValueError, match="expected 6"):
        model.predict_proba(np.zeros((4, 2)))
    with pytest.raises(ValueError, match="not fitted"):
        RandomForest().predict_proba(np.zeros((2, 2)))
