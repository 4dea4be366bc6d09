"""Shapley attributions: axioms on enumerable models, estimator agreement."""

import numpy as np
import pytest

from hydrodetect.explain import (
    exact_shapley, global_mean_abs_attribution, permutation_importance,
    shapley_sampling,
)


def linear_fn(w, b=0.0):
    w = np.asarray(w, dtype=np.float64)
    return lambda X: np.atleast_2d(X) @ w + b


class TestExactShapley:
    def test_linear_model_closed_form(self):
        """For f(x) = w.x the value of feature j is w_j (x_j - mean bg_j)."""
        rng = np.random.default_rng(0)
        w = np.array([2.0, -1.0, 0.5, 3.0])
        x = rng.normal(size=4)
        background = rng.normal(size=(20, 4))
        att = exact_shapley(linear_fn(w, b=1.0), x, background)
        np.testing.assert_allclose(att.values, w * (x - background.mean(0)),
                                   atol=1e-9)

    def test_efficiency(self):
        rng = np.random.default_rng(1)

        def f(X):
            X = np.atleast_2d(X)
            return np.tanh(X[:, 0] * X[:, 1]) + 0.3 * X[:, 2] ** 2

        x = rng.normal(size=3)
        background = rng.normal(size=(15, 3))
        att = exact_shapley(f, x, background)
        assert att.values.sum() == pytest.approx(
            att.explained_output - att.baseline, abs=1e-9)

    def test_symmetry(self):
        """Exchangeable features receive equal credit."""
        def f(X):
            X = np.atleast_2d(X)
            return X[:, 0] + X[:, 1] + 5.0 * X[:, 0] * X[:, 1]

        x = np.array([0.7, 0.7, -1.0])
        background = np.zeros((1, 3))
        att = exact_shapley(f, x, background)
        assert att.values[0] == pytest.approx(att.values[1], abs=1e-12)

    def test_dummy(self):
        """A feature the model ignores gets exactly zero."""
        rng = np.random.default_rng(2)
        f = linear_fn([1.5, 0.0, -2.0])
        att = exact_shapley(f, rng.normal(size=3), rng.normal(size=(10, 3)))
        assert att.values[1] == 0.0

    def test_subset_limit(self):
        with pytest.raises(ValueError, match="enumeration limit"):
            exact_shapley(linear_fn(np.ones(20)), np.zeros(20), np.zeros((2, 20)))

    def test_feature_subset(self):
        w = np.array([1.0, 2.0, 3.0])
        x = np.array([1.0, 1.0, 1.0])
        background = np.zeros((1, 3))
        att = exact_shapley(linear_fn(w), x, background, feature_subset=[0, 2])
        np.testing.assert_allclose(att.values, [1.0, 3.0], atol=1e-12)

    def test_empty_background(self):
        with pytest.raises(ValueError, match="background"):
            exact_shapley(linear_fn([1.0]), np.zeros(1), np.zeros((0, 1)))


class TestSampling:
    def test_linear_model_is_exact(self):
        """Every permutation gives the same marginal for a linear model, so
        the sampled estimate is exact with zero variance across orders."""
        rng = np.random.default_rng(3)
        w = np.array([1.0, -2.0, 0.5])
        x = rng.normal(size=3)
        background = np.tile(rng.normal(size=3), (4, 1))    # single background point
        att = shapley_sampling(linear_fn(w), x, background, n_samples=8, seed=0)
        np.testing.assert_allclose(att.values, w * (x - background[0]), atol=1e-9)

    def test_agrees_with_exact_within_4_se(self):
        rng = np.random.default_rng(4)

        def f(X):
            X = np.atleast_2d(X)
            return np.tanh(X[:, 0] * X[:, 1] - X[:, 2]) + 0.2 * X[:, 3]

        x = rng.normal(size=4)
        background = rng.normal(size=(12, 4))
        exact = exact_shapley(f, x, background)
        sampled = shapley_sampling(f, x, background, n_samples=600, seed=1)
        se = np.maximum(sampled.std_errors, 1e-9)
        assert (np.abs(sampled.values - exact.values) <= 4.0 * se).all()

    def test_determinism(self):
        rng = np.random.default_rng(5)
        f = linear_fn([1.0, 2.0])
        x = rng.normal(size=2)
        background = rng.normal(size=(6, 2))
        a = shapley_sampling(f, x, background, n_samples=16, seed=3)
        b = shapley_sampling(f, x, background, n_samples=16, seed=3)
        np.testing.assert_array_equal(a.values, b.values)

    def test_ranking_and_dict(self):
        att = shapley_sampling(linear_fn([5.0, -0.1]), np.ones(2),
                               np.zeros((3, 2)), n_samples=8, seed=0,
                               feature_names=["big", "small"])
        assert att.ranking()[0][0] == "big"
        d = att.to_dict()
        assert d["features"][0]["name"] == "big"
        assert d["features"][0]["rank"] == 1


class TestGlobal:
    def test_informative_features_dominate(self):
        rng = np.random.default_rng(6)
        f = linear_fn([4.0, 0.0, -3.0, 0.1])
        rows = rng.normal(size=(10, 4))
        background = rng.normal(size=(15, 4))
        att = global_mean_abs_attribution(f, rows, background, n_samples=12,
                                          seed=0, feature_names=list("abcd"))
        top2 = [n for n, _ in att.ranking()[:2]]
        assert set(top2) == {"a", "c"}
        assert (att.values >= 0).all()


class TestPermutationImportance:
    def test_signal_beats_noise(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(300, 3))
        y = (X[:, 0] > 0).astype(np.int64)

        def metric(labels, scores):
            return float((labels == (scores > 0)).mean())

        scores = permutation_importance(linear_fn([3.0, 0.0, 0.0]), X, y,
                                        metric, n_repeats=3, seed=0)
        assert scores[0] > 0.2
        assert abs(scores[1]) < 0.05 and abs(scores[2]) < 0.05
