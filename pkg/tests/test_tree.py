"""Tree growing: split selection oracles, routing, serialization."""

import numpy as np
import pytest

import hydrodetect.tree as treemod
from hydrodetect.tree import (
    Tree, best_gini_split, grow_classification_tree, grow_newton_tree, presort,
)


def gini(y):
    if len(y) == 0:
        return 0.0
    p = y.mean()
    return 2.0 * p * (1.0 - p)


def brute_force_gini_split(X, y, min_samples_leaf=1):
    """Enumerate every (feature, midpoint) candidate and return the best
    (decrease, feature, threshold) with lowest-threshold/lowest-feature ties."""
    m, d = X.shape
    parent = gini(y)
    best = None
    for j in range(d):
        values = np.unique(X[:, j])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = 0.5 * (lo + hi)
            if thr <= lo:
                thr = lo
            left = X[:, j] <= thr
            nl, nr = left.sum(), m - left.sum()
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            decrease = parent - (nl * gini(y[left]) + nr * gini(y[~left])) / m
            key = (-decrease, j, thr)
            if best is None or key < best[0]:
                best = (key, j, thr, decrease)
    if best is None or best[3] <= treemod.GAIN_TOL:
        return None
    return best[1], best[2], best[3]


class TestGiniSplit:
    def test_against_brute_force(self):
        rng = np.random.default_rng(0)
        for trial in range(50):
            m = int(rng.integers(4, 40))
            d = int(rng.integers(1, 5))
            X = np.round(rng.normal(size=(m, d)), 1)
            y = rng.integers(0, 2, size=m)
            expected = brute_force_gini_split(X, y)
            got = best_gini_split(X, y, np.arange(d), min_samples_leaf=1)
            if expected is None:
                assert got is None
            else:
                assert got is not None, trial
                feat, thr, dec, left = got
                assert (feat, thr) == (expected[0], expected[1])
                assert dec == pytest.approx(expected[2], abs=1e-9)
                np.testing.assert_array_equal(left, X[:, feat] <= thr)

    def test_min_samples_leaf(self):
        X = np.arange(10.0)[:, None]
        y = np.array([0] * 5 + [1] * 5)
        found = best_gini_split(X, y, np.array([0]), min_samples_leaf=3)
        feat, thr, _, left = found
        assert 3 <= left.sum() <= 7
        assert best_gini_split(X, y, np.array([0]), min_samples_leaf=6) is None

    def test_no_improving_split(self):
        X = np.array([[1.0], [1.0], [1.0]])
        y = np.array([0, 1, 0])
        assert best_gini_split(X, y, np.array([0]), 1) is None


class TestTreeStructure:
    def test_routing_rule(self):
        tree = Tree()
        root = tree.add_node()
        tree.feature[root] = 0
        tree.threshold[root] = 2.0
        left, right = tree.add_node(), tree.add_node()
        tree.left[root], tree.right[root] = left, right
        tree.value[left], tree.value[right] = 0.1, 0.9
        tree.finalize()
        out = tree.predict_value(np.array([[1.9], [2.0], [2.1]]))
        assert out.tolist() == [0.1, 0.1, 0.9]    # boundary value goes left

    def test_serialization_round_trip(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(120, 4))
        y = (X[:, 0] * X[:, 1] > 0).astype(np.int64)
        tree = grow_classification_tree(X, y, rng, max_depth=5,
                                        min_samples_leaf=2, max_features=None)
        clone = Tree.from_dict(tree.to_dict())
        probe = rng.normal(size=(300, 4))
        np.testing.assert_array_equal(tree.predict_value(probe),
                                      clone.predict_value(probe))

    def test_depth_respected(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(200, 3))
        y = rng.integers(0, 2, size=200)
        tree = grow_classification_tree(X, y, rng, max_depth=3,
                                        min_samples_leaf=1, max_features=None)
        assert tree.depth() <= 3

    def test_pure_node_stops(self):
        X = np.arange(6.0)[:, None]
        y = np.zeros(6, dtype=np.int64)
        tree = grow_classification_tree(X, y, np.random.default_rng(0),
                                        max_depth=None, min_samples_leaf=1,
                                        max_features=None)
        assert tree.n_nodes == 1
        assert tree.value[0] == 0.0

    def test_perfect_fit_on_separable(self):
        X = np.arange(20.0)[:, None]
        y = (X[:, 0] >= 11).astype(np.int64)
        tree = grow_classification_tree(X, y, np.random.default_rng(0),
                                        max_depth=None, min_samples_leaf=1,
                                        max_features=None)
        np.testing.assert_array_equal(tree.predict_value(X), y.astype(float))


class TestNewtonTree:
    def _random_case(self, rng, with_ties):
        m = int(rng.integers(10, 300))
        d = int(rng.integers(1, 8))
        X = rng.normal(size=(m, d))
        if with_ties:
            X = np.round(X, 1)
        g = rng.normal(size=m)
        h = rng.uniform(0.01, 0.3, size=m)
        return X, g, h

    def test_levelwise_matches_recursive(self):
        """The accelerated level-wise grower is checked against the plain
        recursive reference on random cases, including heavy value ties."""
        if not treemod.HAVE_NUMBA:
            pytest.skip("accelerated grower unavailable")
        rng = np.random.default_rng(3)
        for trial in range(25):
            X, g, h = self._random_case(rng, with_ties=trial % 2 == 0)
            fast = treemod._grow_newton_tree_levelwise(
                X, g, h, presort(X), 5, 1.0, 0.0, 1e-16)
            ref = treemod._grow_newton_tree_recursive(X, g, h, 5, 1.0, 0.0)
            self._assert_same_tree(fast.to_dict(), ref.to_dict())

    def _assert_same_tree(self, a, b, path="root"):
        assert ("value" in a) == ("value" in b), path
        if "value" in a:
            assert a["value"] == pytest.approx(b["value"], rel=1e-9, abs=1e-12), path
            return
        assert a["feature"] == b["feature"], path
        assert a["threshold"] == b["threshold"], path
        self._assert_same_tree(a["left"], b["left"], path + "/L")
        self._assert_same_tree(a["right"], b["right"], path + "/R")

    def test_depth_zero_leaf_weight(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(50, 3))
        g = rng.normal(size=50)
        h = rng.uniform(0.05, 0.25, size=50)
        lam = 1.3
        tree = grow_newton_tree(X, g, h, max_depth=0, lambda_l2=lam,
                                gamma_min_gain=0.0)
        assert tree.n_nodes == 1
        assert tree.value[0] == pytest.approx(-g.sum() / (h.sum() + lam), abs=1e-12)

    def test_gamma_blocks_weak_splits(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(100, 2))
        g = rng.normal(scale=0.01, size=100)
        h = rng.uniform(0.2, 0.25, size=100)
        tree = grow_newton_tree(X, g, h, max_depth=4, lambda_l2=1.0,
                                gamma_min_gain=1e9)
        assert tree.n_nodes == 1

    def test_split_reduces_objective(self):
        """The chosen split's children score at least as well as the parent
        under the regularized second-order objective."""
        rng = np.random.default_rng(6)
        X = rng.normal(size=(150, 4))
        g = rng.normal(size=150) + X[:, 1]
        h = rng.uniform(0.1, 0.3, size=150)
        lam = 1.0

        def obj(gs, hs):
            return -0.5 * gs.sum() ** 2 / (hs.sum() + lam)

        tree = grow_newton_tree(X, g, h, max_depth=1, lambda_l2=lam,
                                gamma_min_gain=0.0)
        assert tree.n_nodes == 3
        feat, thr = int(tree.feature[0]), float(tree.threshold[0])
        left = X[:, feat] <= thr
        assert obj(g[left], h[left]) + obj(g[~left], h[~left]) < obj(g, h)
