"""Model-agnostic explainability: permutation importance and interventional
Shapley attributions (Monte-Carlo sampling estimator plus an exact
subset-enumeration oracle for small feature counts).

All functions take a plain ``predict_fn(X) -> scores`` so they apply
identically to any fitted model, including stacked ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Attribution:
    feature_names: list[str]
    values: np.ndarray              # signed per-feature contributions
    baseline: float                 # expected model output over the background
    explained_output: float
    std_errors: np.ndarray | None = None

    def ranking(self) -> list[tuple[str, float]]:
        order = np.argsort(-np.abs(self.values), kind="stable")
        return [(self.feature_names[i], float(self.values[i])) for i in order]

    def to_dict(self) -> dict:
        order = np.argsort(-np.abs(self.values), kind="stable")
        return {
            "baseline": self.baseline,
            "explained_output": self.explained_output,
            "features": [
                {
                    "name": self.feature_names[i],
                    "value": float(self.values[i]),
                    "std_error": None if self.std_errors is None else float(self.std_errors[i]),
                    "rank": rank + 1,
                }
                for rank, i in enumerate(order)
            ],
        }


def permutation_importance(predict_fn, X, y, metric_fn, n_repeats: int = 5,
                           seed: int = 0) -> np.ndarray:
    """Mean metric drop when one feature column is shuffled."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    baseline = metric_fn(y, predict_fn(X))
    scores = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        drops = []
        for _ in range(n_repeats):
            Xp = X.copy()
            Xp[:, j] = Xp[rng.permutation(len(X)), j]
            drops.append(baseline - metric_fn(y, predict_fn(Xp)))
        scores[j] = np.mean(drops)
    return scores


def shapley_sampling(predict_fn, x, background, n_samples: int = 64, seed: int = 0,
                     feature_names=None, chunk: int = 16384) -> Attribution:
    """Monte-Carlo permutation estimator of interventional Shapley values.

    Each sample draws a feature ordering and a background row; walking the
    ordering from all-background to all-x yields one marginal contribution
    per feature. Contributions are averaged over samples and reported with
    their per-feature standard errors.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.size == 0:
        raise ValueError("background set is empty")
    d = len(x)
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(d)]
    rng = np.random.default_rng(seed)

    perms = np.array([rng.permutation(d) for _ in range(n_samples)])
    b_rows = background[rng.integers(0, len(background), size=n_samples)]

    # composite rows: for each sample, d+1 points from all-background to all-x
    composites = np.empty((n_samples, d + 1, d))
    for s in range(n_samples):
        z = b_rows[s].copy()
        composites[s, 0] = z
        for k, j in enumerate(perms[s]):
            z[j] = x[j]
            composites[s, k + 1] = z

    flat = composites.reshape(-1, d)
    preds = np.empty(len(flat))
    for start in range(0, len(flat), chunk):
        preds[start:start + chunk] = predict_fn(flat[start:start + chunk])
    preds = preds.reshape(n_samples, d + 1)

    contribs = np.zeros((n_samples, d))
    steps = preds[:, 1:] - preds[:, :-1]
    for s in range(n_samples):
        contribs[s, perms[s]] = steps[s]

    values = contribs.mean(axis=0)
    std_errors = contribs.std(axis=0, ddof=1) / math.sqrt(n_samples) if n_samples > 1 else np.zeros(d)
    baseline = float(np.mean(predict_fn(background)))
    explained = float(predict_fn(x[None, :])[0])
    return Attribution(feature_names=list(feature_names), values=values,
                       baseline=baseline, explained_output=explained,
                       std_errors=std_errors)


def exact_shapley(predict_fn, x, background, feature_subset=None,
                  feature_names=None, max_subset: int = 12) -> Attribution:
    """Exact interventional Shapley values by full subset enumeration.

    Only the features in ``feature_subset`` are explained (others stay at
    their values from ``x``); limited to 2^12 coalitions.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.size == 0:
        raise ValueError("background set is empty")
    d_all = len(x)
    if feature_subset is None:
        feature_subset = list(range(d_all))
    feature_subset = list(feature_subset)
    d = len(feature_subset)
    if d > max_subset:
        raise ValueError(f"feature subset of {d} exceeds the {max_subset}-feature enumeration limit")
    if feature_names is None:
        feature_names = [f"f{j}" for j in feature_subset]

    n_coalitions = 1 << d
    rows = np.tile(x, (n_coalitions * len(background), 1))
    for c in range(n_coalitions):
        block = slice(c * len(background), (c + 1) * len(background))
        for pos, j in enumerate(feature_subset):
            if not (c >> pos) & 1:
                rows[block, j] = background[:, j]
    preds = predict_fn(rows).reshape(n_coalitions, len(background)).mean(axis=1)

    values = np.zeros(d)
    fact = [math.factorial(i) for i in range(d + 1)]
    for c in range(n_coalitions):
        size = bin(c).count("1")
        for pos in range(d):
            if (c >> pos) & 1:
                continue
            weight = fact[size] * fact[d - size - 1] / fact[d]
            values[pos] += weight * (preds[c | (1 << pos)] - preds[c])

    return Attribution(feature_names=list(feature_names), values=values,
                       baseline=float(preds[0]),
                       explained_output=float(preds[n_coalitions - 1]))


def global_mean_abs_attribution(predict_fn, rows, background, n_samples: int = 16,
                                seed: int = 0, feature_names=None) -> Attribution:
    """Mean absolute sampled-Shapley attribution over an evaluation sample,
    the bar-style global feature ranking."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    acc = None
    rng = np.random.default_rng(seed)
    for i, row in enumerate(rows):
        att = shapley_sampling(predict_fn, row, background, n_samples=n_samples,
                               seed=int(rng.integers(2**31)), feature_names=feature_names)
        acc = np.abs(att.values) if acc is None else acc + np.abs(att.values)
    values = acc / len(rows)
    baseline = float(np.mean(predict_fn(background)))
    return Attribution(feature_names=att.feature_names, values=values,
                       baseline=baseline, explained_output=float("nan"))
