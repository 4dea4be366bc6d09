"""Column scalers fitted on training rows only.

Two schemes: z-score standardization for the tree learners and min-max
scaling to [0, 1] for the recurrent learner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

EPS_STD = 1e-12


@dataclass
class ScalerParams:
    kind: str                       # "zscore" | "minmax"
    columns: list[str]
    center: np.ndarray              # mean (zscore) or min (minmax)
    scale: np.ndarray               # std (zscore) or max - min (minmax); pre-guard values
    degenerate: np.ndarray = field(default=None)  # bool mask of near-constant columns

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "columns": list(self.columns),
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        center = np.asarray(d["center"], dtype=np.float64)
        scale = np.asarray(d["scale"], dtype=np.float64)
        return cls(
            kind=d["kind"],
            columns=list(d["columns"]),
            center=center,
            scale=scale,
            degenerate=np.abs(scale) < EPS_STD,
        )


class Scaler(BaseEstimator):
    """Fit/transform/inverse_transform column scaler.

    Near-constant columns (spread below ``EPS_STD``) transform to zero
    instead of raising: pump-status channels can be constant in subsets.
    """

    def __init__(self, kind="zscore"):
        if kind not in ("zscore", "minmax"):
            raise ValueError(f"unknown scaler kind {kind!r}")
        self.kind = kind

    @classmethod
    def from_params(cls, params: ScalerParams) -> "Scaler":
        scaler = cls(kind=params.kind)
        if params.degenerate is None:
            params.degenerate = np.abs(params.scale) < EPS_STD
        scaler.params_ = params
        return scaler

    def fit(self, X, columns=None):
        X = np.asarray(X, dtype=np.float64)
        if X.size == 0:
            raise ValueError("cannot fit a scaler on an empty set")
        if columns is None:
            columns = [f"c{j}" for j in range(X.shape[1])]
        if self.kind == "zscore":
            center = X.mean(axis=0)
            scale = X.std(axis=0)
        else:
            center = X.min(axis=0)
            scale = X.max(axis=0) - center
        self.params_ = ScalerParams(
            kind=self.kind,
            columns=list(columns),
            center=center,
            scale=scale,
            degenerate=np.abs(scale) < EPS_STD,
        )
        return self

    def _check(self, X, columns):
        if not hasattr(self, "params_"):
            raise ValueError("scaler is not fitted")
        p = self.params_
        if columns is not None and list(columns) != p.columns:
            unseen = [c for c in columns if c not in p.columns]
            raise ValueError(f"column mismatch; unseen columns: {unseen}")
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != len(p.columns):
            raise ValueError(f"expected {len(p.columns)} columns, got {X.shape[1]}")
        return X, p

    def transform(self, X, columns=None):
        X, p = self._check(X, columns)
        safe = np.where(p.degenerate, 1.0, p.scale)
        out = (X - p.center) / safe
        out[:, p.degenerate] = 0.0
        return out

    def inverse_transform(self, X, columns=None):
        X, p = self._check(X, columns)
        safe = np.where(p.degenerate, 0.0, p.scale)
        return X * safe + p.center
