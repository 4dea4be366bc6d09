"""Second-order (Newton) gradient-boosted trees with logistic loss.

Each round fits an exact-greedy regression tree to the per-sample
gradients g = p - y and Hessians h = p(1 - p); leaf weights are the
regularized Newton step -G/(H + lambda).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .tree import HAVE_NUMBA, Tree, grow_newton_tree, presort

HESSIAN_FLOOR = 1e-16


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(y: np.ndarray, margin: np.ndarray) -> float:
    """Mean negative log-likelihood, numerically stable in the margins."""
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


@dataclass
class GbtConfig:
    n_rounds: int = 500
    max_depth: int = 6
    learning_rate: float = 0.05
    lambda_l2: float = 1.0
    gamma_min_gain: float = 0.0
    base_score: float | None = None   # log-odds; None = logit of the training prior
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.lambda_l2 < 0:
            raise ValueError("lambda_l2 must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_rounds": self.n_rounds,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "lambda_l2": self.lambda_l2,
            "gamma_min_gain": self.gamma_min_gain,
            "base_score": self.base_score,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtConfig":
        return cls(**d)


class GradientBoosting(BaseEstimator):
    def __init__(self, config: GbtConfig | None = None):
        self.config = config or GbtConfig()

    def fit(self, X, y, feature_names=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if len(X) == 0:
            raise ValueError("empty input")
        cfg = self.config
        self.feature_names_ = list(feature_names) if feature_names else [f"f{j}" for j in range(X.shape[1])]
        self.n_features_ = X.shape[1]

        if cfg.base_score is not None:
            base = float(cfg.base_score)
        else:
            prior = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
            base = float(np.log(prior / (1 - prior)))
        self.base_score_ = base

        margin = np.full(len(y), base)
        self.trees_ = []
        self.train_loss_ = [logistic_loss(y, margin)]
        order = presort(X) if HAVE_NUMBA else None
        for _ in range(cfg.n_rounds):
            p = sigmoid(margin)
            g = p - y
            h = p * (1.0 - p)
            tree = grow_newton_tree(
                X, g, h,
                max_depth=cfg.max_depth,
                lambda_l2=cfg.lambda_l2,
                gamma_min_gain=cfg.gamma_min_gain,
                hessian_floor=HESSIAN_FLOOR,
                order=order,
            )
            margin = margin + cfg.learning_rate * tree.predict_value(X)
            self.trees_.append(tree)
            self.train_loss_.append(logistic_loss(y, margin))
        return self

    def _check_fitted(self, X):
        if not hasattr(self, "trees_"):
            raise ValueError("model is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return X

    def predict_margin(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        margin = np.full(len(X), self.base_score_)
        for tree in self.trees_:
            margin += self.config.learning_rate * tree.predict_value(X)
        return margin

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.predict_margin(X))

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)

    def to_payload(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "feature_names": self.feature_names_,
            "base_score": self.base_score_,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "GradientBoosting":
        model = cls(config=GbtConfig.from_dict(payload["config"]))
        model.feature_names_ = list(payload["feature_names"])
        model.base_score_ = float(payload["base_score"])
        model.trees_ = [Tree.from_dict(d) for d in payload["trees"]]
        model.n_features_ = len(model.feature_names_)
        return model
