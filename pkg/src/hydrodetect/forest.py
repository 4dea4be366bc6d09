"""Bagged random forest of Gini CART trees with impurity importances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import rng as rngmod
from .tree import Tree, grow_classification_tree


@dataclass
class ForestConfig:
    n_trees: int = 300
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: str | int = "sqrt"
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestConfig":
        return cls(**d)


def _resolve_max_features(rule, d: int) -> int:
    if rule == "sqrt":
        return min(d, math.ceil(math.sqrt(d)))
    if rule == "all" or rule is None:
        return d
    return min(d, int(rule))


class RandomForest(BaseEstimator):
    """Forest classifier: probability = mean leaf class-1 probability."""

    def __init__(self, config: ForestConfig | None = None):
        self.config = config or ForestConfig()

    def fit(self, X, y, feature_names=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(X) == 0:
            raise ValueError("empty input")
        cfg = self.config
        n, d = X.shape
        self.feature_names_ = list(feature_names) if feature_names else [f"f{j}" for j in range(d)]
        k = _resolve_max_features(cfg.max_features, d)
        streams = rngmod.spawn(np.random.default_rng(cfg.seed), cfg.n_trees)

        self.trees_ = []
        importance = np.zeros(d)
        for t in range(cfg.n_trees):
            tree_rng = streams[t]
            if cfg.bootstrap:
                sample = tree_rng.integers(0, n, size=n)
                Xb, yb = X[sample], y[sample]
            else:
                Xb, yb = X, y
            tree_importance = np.zeros(d)
            tree = grow_classification_tree(
                Xb, yb, tree_rng,
                max_depth=cfg.max_depth,
                min_samples_leaf=cfg.min_samples_leaf,
                max_features=k,
                importance=tree_importance,
            )
            total = tree_importance.sum()
            if total > 0:
                importance += tree_importance / total
            self.trees_.append(tree)

        total = importance.sum()
        self.feature_importances_ = importance / total if total > 0 else np.full(d, 1.0 / d)
        self.n_features_ = d
        return self

    def _check_fitted(self, X):
        if not hasattr(self, "trees_"):
            raise ValueError("model is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Class-1 probability per row (mean over trees)."""
        X = self._check_fitted(X)
        acc = np.zeros(len(X))
        for tree in self.trees_:
            acc += tree.predict_value(X)
        return acc / len(self.trees_)

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)

    def to_payload(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "feature_names": self.feature_names_,
            "feature_importances": self.feature_importances_.tolist(),
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "RandomForest":
        model = cls(config=ForestConfig.from_dict(payload["config"]))
        model.feature_names_ = list(payload["feature_names"])
        model.feature_importances_ = np.asarray(payload["feature_importances"])
        model.trees_ = [Tree.from_dict(d) for d in payload["trees"]]
        model.n_features_ = len(model.feature_names_)
        return model
