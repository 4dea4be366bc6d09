"""L2-penalized logistic regression fitted by damped Newton iterations.

Used as the stacking meta-learner; the intercept is not penalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .gbt import sigmoid


@dataclass
class LogisticConfig:
    l2: float = 1.0
    max_iter: int = 100
    tol: float = 1e-8               # gradient-norm stopping tolerance

    def to_dict(self) -> dict:
        return {"l2": self.l2, "max_iter": self.max_iter, "tol": self.tol}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticConfig":
        return cls(**d)


class LogisticRegressionNewton(BaseEstimator):
    def __init__(self, config: LogisticConfig | None = None):
        self.config = config or LogisticConfig()

    def _objective(self, theta, Xb, y):
        z = Xb @ theta
        nll = np.sum(np.logaddexp(0.0, z) - y * z)
        return nll + 0.5 * self.config.l2 * np.sum(theta[1:] ** 2)

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("need at least one feature column")
        if len(np.unique(y)) < 2:
            raise ValueError("labels contain a single class")
        cfg = self.config
        n, d = X.shape
        Xb = np.hstack([np.ones((n, 1)), X])
        theta = np.zeros(d + 1)
        penalty = np.concatenate([[0.0], np.full(d, cfg.l2)])

        obj = self._objective(theta, Xb, y)
        for _ in range(cfg.max_iter):
            p = sigmoid(Xb @ theta)
            grad = Xb.T @ (p - y) + penalty * theta
            if np.linalg.norm(grad) < cfg.tol:
                break
            w = np.maximum(p * (1.0 - p), 1e-12)
            H = (Xb * w[:, None]).T @ Xb + np.diag(penalty)
            step = np.linalg.solve(H, grad)
            # damp: halve until the penalized objective decreases
            alpha = 1.0
            for _ in range(50):
                candidate = theta - alpha * step
                new_obj = self._objective(candidate, Xb, y)
                if new_obj <= obj:
                    theta, obj = candidate, new_obj
                    break
                alpha *= 0.5
            else:
                break
        self.intercept_ = float(theta[0])
        self.coef_ = theta[1:]
        return self

    def decision_function(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise ValueError("model is not fitted")
        X = np.asarray(X, dtype=np.float64)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def to_payload(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "intercept": self.intercept_,
            "coef": self.coef_.tolist(),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "LogisticRegressionNewton":
        model = cls(config=LogisticConfig.from_dict(payload["config"]))
        model.intercept_ = float(payload["intercept"])
        model.coef_ = np.asarray(payload["coef"], dtype=np.float64)
        return model
