"""CART-style binary trees shared by the forest and boosting learners.

Nodes are stored in flat parallel arrays for vectorized prediction; the
serialized form is the nested node record expected by the model-file
schema. Routing rule everywhere: value <= threshold goes left.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:                  # pragma: no cover - numba is a normal dep
    HAVE_NUMBA = False

LEAF = -1
GAIN_TOL = 1e-12


class Tree:
    """Flat-array binary tree. ``value`` holds the class-1 probability for
    classification trees and the leaf weight for boosted regression trees."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add_node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=np.float64)
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            for child in (self.left[i], self.right[i]):
                if child != LEAF:
                    depths[child] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        """Leaf value for each row by vectorized traversal."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] != LEAF
        return self.value[node]

    def to_dict(self) -> dict:
        def build(i: int) -> dict:
            if self.feature[i] == LEAF:
                return {"value": float(self.value[i])}
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "left": build(int(self.left[i])),
                "right": build(int(self.right[i])),
            }
        return build(0)

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        tree = cls()

        def build(node: dict) -> int:
            i = tree.add_node()
            if "value" in node and "feature" not in node:
                tree.value[i] = node["value"]
                return i
            tree.feature[i] = node["feature"]
            tree.threshold[i] = node["threshold"]
            tree.left[i] = build(node["left"])
            tree.right[i] = build(node["right"])
            return i

        build(d)
        return tree.finalize()


def _gini(pos: float, total: float) -> float:
    if total == 0:
        return 0.0
    p = pos / total
    return 2.0 * p * (1.0 - p)


def best_gini_split(X_node: np.ndarray, y_node: np.ndarray, feat_subset: np.ndarray,
                    min_samples_leaf: int):
    """Best (feature, threshold, decrease) by Gini impurity decrease.

    ``feat_subset`` must be sorted ascending so that exact-gain ties break
    toward the lowest original feature index; within a feature the lowest
    qualifying threshold wins. Returns None when no split improves purity.
    """
    m = len(y_node)
    if m < 2 * min_samples_leaf:
        return None
    Xs = X_node[:, feat_subset]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    ys = y_node[order]

    cum_pos = np.cumsum(ys, axis=0, dtype=np.float64)
    total_pos = cum_pos[-1]
    left_n = np.arange(1, m + 1, dtype=np.float64)[:, None]
    right_n = m - left_n
    right_pos = total_pos[None, :] - cum_pos

    with np.errstate(divide="ignore", invalid="ignore"):
        pl = cum_pos / left_n
        pr = np.where(right_n > 0, right_pos / right_n, 0.0)
    child = left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)
    parent = m * _gini(float(y_node.sum()), m)
    decrease = (parent - child) / m

    valid = np.zeros_like(decrease, dtype=bool)
    valid[:-1] = xs[1:] > xs[:-1]
    lo, hi = min_samples_leaf - 1, m - min_samples_leaf
    if lo > 0:
        valid[:lo] = False
    valid[hi:] = False
    decrease = np.where(valid, decrease, -np.inf)

    if not np.isfinite(decrease).any():
        return None
    col_best_pos = np.argmax(decrease, axis=0)       # first max: lowest threshold
    col_best = decrease[col_best_pos, np.arange(decrease.shape[1])]
    j = int(np.argmax(col_best))                     # first max: lowest feature index
    best = col_best[j]
    if best <= GAIN_TOL:
        return None
    i = int(col_best_pos[j])
    threshold = 0.5 * (xs[i, j] + xs[i + 1, j])
    if threshold <= xs[i, j]:                        # midpoint rounded down to the left value
        threshold = xs[i, j]
    left_mask_local = Xs[:, j] <= threshold
    return int(feat_subset[j]), float(threshold), float(best), left_mask_local


def grow_classification_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
                             max_depth: int | None, min_samples_leaf: int,
                             max_features: int | None,
                             importance: np.ndarray | None = None,
                             n_total: int | None = None) -> Tree:
    """Greedy Gini CART over a random feature subset per node.

    ``importance`` (length n_features) accumulates weighted impurity
    decreases in place when given.
    """
    if len(y) == 0:
        raise ValueError("empty input")
    n, d = X.shape
    if n_total is None:
        n_total = n
    tree = Tree()
    root = tree.add_node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        pos = int(y_node.sum())
        tree.value[node] = pos / len(idx)
        if pos == 0 or pos == len(idx) or (max_depth is not None and depth >= max_depth):
            continue
        if max_features is not None and max_features < d:
            subset = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            subset = np.arange(d)
        found = best_gini_split(X[idx], y_node, subset, min_samples_leaf)
        if found is None:
            continue
        feat, thr, decrease, left_local = found
        if importance is not None:
            importance[feat] += (len(idx) / n_total) * decrease
        tree.feature[node] = feat
        tree.threshold[node] = thr
        left_id = tree.add_node()
        right_id = tree.add_node()
        tree.left[node] = left_id
        tree.right[node] = right_id
        stack.append((left_id, idx[left_local], depth + 1))
        stack.append((right_id, idx[~left_local], depth + 1))
    return tree.finalize()


def presort(X: np.ndarray) -> np.ndarray:
    """Stable per-column row ordering, computed once and reused across the
    boosting rounds (the feature matrix never changes between rounds)."""
    return np.argsort(X, axis=0, kind="stable").astype(np.int32)


def grow_newton_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray,
                     max_depth: int, lambda_l2: float, gamma_min_gain: float,
                     hessian_floor: float = 1e-16, order: np.ndarray | None = None) -> Tree:
    """Second-order regression tree: leaf weight -G/(H+lambda), split gain
    0.5*[GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)] - gamma.

    With numba available the tree is grown level-wise from a presorted
    column order (pass ``order=presort(X)`` to amortize the sort); the
    recursive path below is the reference implementation.
    """
    if HAVE_NUMBA:
        if order is None:
            order = presort(X)
        return _grow_newton_tree_levelwise(X, g, h, order, max_depth, lambda_l2,
                                           gamma_min_gain, hessian_floor)
    return _grow_newton_tree_recursive(X, g, h, max_depth, lambda_l2,
                                       gamma_min_gain, hessian_floor)


def _grow_newton_tree_recursive(X: np.ndarray, g: np.ndarray, h: np.ndarray,
                                max_depth: int, lambda_l2: float, gamma_min_gain: float,
                                hessian_floor: float = 1e-16) -> Tree:
    n, d = X.shape
    tree = Tree()
    root = tree.add_node()
    stack = [(root, np.arange(n), 0)]
    feat_subset = np.arange(d)
    while stack:
        node, idx, depth = stack.pop()
        G = float(g[idx].sum())
        H = float(h[idx].sum())
        tree.value[node] = -G / max(H + lambda_l2, hessian_floor)
        if depth >= max_depth or len(idx) < 2:
            continue
        found = _best_newton_split(X[idx], g[idx], h[idx], feat_subset,
                                   lambda_l2, gamma_min_gain)
        if found is None:
            continue
        feat, thr, _, left_local = found
        tree.feature[node] = feat
        tree.threshold[node] = thr
        left_id = tree.add_node()
        right_id = tree.add_node()
        tree.left[node] = left_id
        tree.right[node] = right_id
        stack.append((left_id, idx[left_local], depth + 1))
        stack.append((right_id, idx[~left_local], depth + 1))
    return tree.finalize()


if HAVE_NUMBA:
    @njit(parallel=True, cache=True)
    def _newton_level_kernel(X, order, node_of, n_nodes, g, h, lam, gamma):
        """Best Newton gain/threshold per (feature, active node).

        Scans every column in globally presorted order, keeping running
        left-side sums per node. A split position is valid only where the
        value strictly increases within a node, so the (stable) global
        order restricted to a node matches its local stable sort. Node
        totals are accumulated per feature in that same order so exact
        gain ties break identically to a per-node cumulative-sum scan.
        """
        N, d = X.shape
        best_gain = np.full((d, n_nodes), -np.inf)
        best_thr = np.zeros((d, n_nodes))
        for j in prange(d):
            Gtot = np.zeros(n_nodes)
            Htot = np.zeros(n_nodes)
            for i in range(N):
                r = order[i, j]
                nd = node_of[r]
                if nd >= 0:
                    Gtot[nd] += g[r]
                    Htot[nd] += h[r]
            gl = np.zeros(n_nodes)
            hl = np.zeros(n_nodes)
            cnt = np.zeros(n_nodes, np.int64)
            last_x = np.zeros(n_nodes)
            parent = np.empty(n_nodes)
            for k in range(n_nodes):
                parent[k] = Gtot[k] * Gtot[k] / (Htot[k] + lam)
            for i in range(N):
                r = order[i, j]
                nd = node_of[r]
                if nd < 0:
                    continue
                xv = X[r, j]
                if cnt[nd] > 0 and xv > last_x[nd]:
                    gr = Gtot[nd] - gl[nd]
                    hr = Htot[nd] - hl[nd]
                    gain = 0.5 * (gl[nd] * gl[nd] / (hl[nd] + lam)
                                  + gr * gr / (hr + lam) - parent[nd]) - gamma
                    if gain > best_gain[j, nd]:
                        best_gain[j, nd] = gain
                        thr = 0.5 * (last_x[nd] + xv)
                        if thr <= last_x[nd]:
                            thr = last_x[nd]
                        best_thr[j, nd] = thr
                gl[nd] += g[r]
                hl[nd] += h[r]
                cnt[nd] += 1
                last_x[nd] = xv
        return best_gain, best_thr


def _grow_newton_tree_levelwise(X, g, h, order, max_depth, lambda_l2,
                                gamma_min_gain, hessian_floor):
    X = np.ascontiguousarray(X, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    n = len(g)
    tree = Tree()
    node_of = np.zeros(n, dtype=np.int32)        # level-local node id per row
    level_ids = [tree.add_node()]
    for depth in range(max_depth + 1):
        n_nodes = len(level_ids)
        active = node_of >= 0
        nd_act = node_of[active]
        Gtot = np.bincount(nd_act, weights=g[active], minlength=n_nodes)
        Htot = np.bincount(nd_act, weights=h[active], minlength=n_nodes)
        for k, tid in enumerate(level_ids):
            tree.value[tid] = -Gtot[k] / max(Htot[k] + lambda_l2, hessian_floor)
        if depth == max_depth:
            break
        best_gain, best_thr = _newton_level_kernel(
            X, order, node_of, n_nodes, g, h, lambda_l2, gamma_min_gain)
        best_j = np.argmax(best_gain, axis=0)    # first max: lowest feature index
        node_gain = best_gain[best_j, np.arange(n_nodes)]
        do_split = np.isfinite(node_gain) & (node_gain > GAIN_TOL)
        if not do_split.any():
            break
        split_feat = np.full(n_nodes, -1, dtype=np.int64)
        split_thr = np.zeros(n_nodes)
        child_left = np.full(n_nodes, -1, dtype=np.int32)
        child_right = np.full(n_nodes, -1, dtype=np.int32)
        next_ids = []
        for k in np.flatnonzero(do_split):
            tid = level_ids[k]
            split_feat[k] = best_j[k]
            split_thr[k] = best_thr[best_j[k], k]
            tree.feature[tid] = int(best_j[k])
            tree.threshold[tid] = float(split_thr[k])
            left_id = tree.add_node()
            right_id = tree.add_node()
            tree.left[tid] = left_id
            tree.right[tid] = right_id
            child_left[k] = len(next_ids)
            next_ids.append(left_id)
            child_right[k] = len(next_ids)
            next_ids.append(right_id)
        rows = np.flatnonzero(active)
        nd = node_of[rows]
        has_split = split_feat[nd] >= 0
        new_node_of = np.full(n, -1, dtype=np.int32)
        rr, ndr = rows[has_split], nd[has_split]
        go_left = X[rr, split_feat[ndr]] <= split_thr[ndr]
        new_node_of[rr] = np.where(go_left, child_left[ndr], child_right[ndr])
        node_of = new_node_of
        level_ids = next_ids
    return tree.finalize()


def _best_newton_split(X_node, g_node, h_node, feat_subset, lambda_l2, gamma_min_gain):
    m = len(g_node)
    order = np.argsort(X_node, axis=0, kind="stable")
    xs = np.take_along_axis(X_node, order, axis=0)
    gs = g_node[order]
    hs = h_node[order]
    GL = np.cumsum(gs, axis=0)
    HL = np.cumsum(hs, axis=0)
    G, H = GL[-1], HL[-1]
    GR = G[None, :] - GL
    HR = H[None, :] - HL
    score = GL**2 / (HL + lambda_l2) + GR**2 / (HR + lambda_l2)
    gain = 0.5 * (score - (G**2 / (H + lambda_l2))[None, :]) - gamma_min_gain

    valid = np.zeros_like(gain, dtype=bool)
    valid[:-1] = xs[1:] > xs[:-1]
    gain = np.where(valid, gain, -np.inf)
    if not np.isfinite(gain).any():
        return None
    col_best_pos = np.argmax(gain, axis=0)
    col_best = gain[col_best_pos, np.arange(gain.shape[1])]
    j = int(np.argmax(col_best))
    best = col_best[j]
    if best <= GAIN_TOL:
        return None
    i = int(col_best_pos[j])
    threshold = 0.5 * (xs[i, j] + xs[i + 1, j])
    if threshold <= xs[i, j]:
        threshold = xs[i, j]
    left_local = X_node[:, j] <= threshold
    return int(feat_subset[j]), float(threshold), float(best), left_local
