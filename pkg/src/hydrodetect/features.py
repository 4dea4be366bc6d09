"""Exploratory statistics and temporal feature engineering.

Derived columns are causal: every recipe (lags, first difference, trailing
rolling statistics) uses only the current and earlier rows, so an online
detector could compute them in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .data import TimeSeriesFrame

RECIPES = ("lag1", "lag3", "d1", "mean", "std")


def pearson_correlation_matrix(frame: TimeSeriesFrame, include_labels: bool = False) -> np.ndarray:
    """Pearson correlation over channels (optionally plus the label column).

    Constant columns correlate 0 with everything by convention; the
    diagonal is 1 throughout.
    """
    if len(frame) < 2:
        raise ValueError("need at least 2 rows for correlation")
    M = frame.X
    if include_labels:
        M = np.hstack([M, frame.y[:, None].astype(np.float64)])
    centered = M - M.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    constant = norms < 1e-12
    safe = np.where(constant, 1.0, norms)
    C = (centered / safe).T @ (centered / safe)
    C[constant, :] = 0.0
    C[:, constant] = 0.0
    np.fill_diagonal(C, 1.0)
    return np.clip(C, -1.0, 1.0)


def rolling_mean(series: np.ndarray, window: int) -> np.ndarray:
    """Trailing rolling mean; the first window-1 positions are NaN."""
    if window < 1:
        raise ValueError("window must be >= 1")
    series = np.asarray(series, dtype=np.float64)
    if window > len(series):
        raise ValueError(f"window {window} longer than series of length {len(series)}")
    out = np.full(len(series), np.nan)
    view = np.lib.stride_tricks.sliding_window_view(series, window)
    out[window - 1:] = view.mean(axis=1)
    return out


def rolling_std(series: np.ndarray, window: int) -> np.ndarray:
    """Trailing rolling sample standard deviation (ddof=1); NaN until filled."""
    if window < 2:
        raise ValueError("window must be >= 2")
    series = np.asarray(series, dtype=np.float64)
    if window > len(series):
        raise ValueError(f"window {window} longer than series of length {len(series)}")
    out = np.full(len(series), np.nan)
    view = np.lib.stride_tricks.sliding_window_view(series, window)
    out[window - 1:] = view.std(axis=1, ddof=1)
    return out


@dataclass
class FeatureSpec:
    """Recipe set applied to each base feature.

    Derived names are ``<base>_lag1``, ``<base>_lag3``, ``<base>_d1``,
    ``<base>_mean_<w>``, ``<base>_std_<w>`` and parse back uniquely.
    """

    base_features: list[str]
    lags: tuple[int, ...] = (1, 3)
    first_difference: bool = True
    rolling_window: int = 5
    rolling_mean: bool = True
    rolling_std: bool = True
    fill: str = "ffill_bfill"

    def derived_names(self) -> list[str]:
        names = []
        for base in self.base_features:
            for lag in self.lags:
                names.append(f"{base}_lag{lag}")
            if self.first_difference:
                names.append(f"{base}_d1")
            if self.rolling_mean:
                names.append(f"{base}_mean_{self.rolling_window}")
            if self.rolling_std:
                names.append(f"{base}_std_{self.rolling_window}")
        return names

    def to_dict(self) -> dict:
        return {
            "base_features": list(self.base_features),
            "lags": list(self.lags),
            "first_difference": self.first_difference,
            "rolling_window": self.rolling_window,
            "rolling_mean": self.rolling_mean,
            "rolling_std": self.rolling_std,
            "fill": self.fill,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        d = dict(d)
        d["lags"] = tuple(d.get("lags", (1, 3)))
        return cls(**d)


def parse_derived_name(name: str, spec: FeatureSpec) -> tuple[str, str] | None:
    """Return (base, recipe) if ``name`` is one of the spec's derived columns."""
    for base in spec.base_features:
        if not name.startswith(base + "_"):
            continue
        suffix = name[len(base) + 1:]
        if suffix in (f"lag{lag}" for lag in spec.lags):
            return base, suffix
        if suffix == "d1":
            return base, "d1"
        if suffix == f"mean_{spec.rolling_window}":
            return base, "mean"
        if suffix == f"std_{spec.rolling_window}":
            return base, "std"
    return None


def engineer_temporal(frame: TimeSeriesFrame, spec: FeatureSpec) -> TimeSeriesFrame:
    """Append the spec's derived columns; originals are kept untouched.

    Leading undefined entries (from lags and rolling windows) are
    forward-filled then backward-filled.
    """
    missing = [b for b in spec.base_features if b not in frame.channel_names]
    if missing:
        raise ValueError(f"unknown base feature(s): {missing}")
    if spec.rolling_window > len(frame):
        raise ValueError("rolling window longer than frame")

    cols = {}
    for base in spec.base_features:
        x = frame.column(base)
        lagged = {}
        for lag in spec.lags:
            shifted = np.full(len(x), np.nan)
            shifted[lag:] = x[:-lag]
            lagged[lag] = shifted
            cols[f"{base}_lag{lag}"] = shifted
        if spec.first_difference:
            ref = lagged.get(1)
            if ref is None:
                ref = np.full(len(x), np.nan)
                ref[1:] = x[:-1]
            cols[f"{base}_d1"] = x - ref
        if spec.rolling_mean:
            cols[f"{base}_mean_{spec.rolling_window}"] = rolling_mean(x, spec.rolling_window)
        if spec.rolling_std:
            cols[f"{base}_std_{spec.rolling_window}"] = rolling_std(x, spec.rolling_window)

    derived = pd.DataFrame(cols, columns=spec.derived_names())
    if spec.fill == "ffill_bfill":
        derived = derived.ffill().bfill()
    return frame.with_columns(list(derived.columns), derived.to_numpy(dtype=np.float64))


@dataclass
class RankedFeatures:
    """Features ordered by impurity importance with High/Medium/Low tiers."""

    names: list[str]
    scores: np.ndarray
    tiers: list[str] = field(default_factory=list)
    k: int = 0

    def top(self, n: int) -> list[str]:
        return self.names[:n]


def rank_features_by_importance(frame: TimeSeriesFrame, forest_config, k: int,
                                row_indices=None) -> RankedFeatures:
    """Rank raw features by mean impurity-decrease importance.

    Tiers: High = top k; Medium = remaining features scoring at least 50%
    of the k-th score; Low = the rest.
    """
    from .forest import RandomForest

    if k > len(frame.channel_names):
        raise ValueError(f"k={k} exceeds feature count {len(frame.channel_names)}")
    X, y = frame.X, frame.y
    if row_indices is not None:
        X, y = X[row_indices], y[row_indices]
    model = RandomForest(config=forest_config).fit(X, y, feature_names=frame.channel_names)
    scores = model.feature_importances_
    order = np.argsort(-scores, kind="stable")
    names = [frame.channel_names[i] for i in order]
    sorted_scores = scores[order]
    cutoff = 0.5 * sorted_scores[k - 1] if k >= 1 else np.inf
    tiers = []
    for rank, s in enumerate(sorted_scores):
        if rank < k:
            tiers.append("High")
        elif s >= cutoff:
            tiers.append("Medium")
        else:
            tiers.append("Low")
    return RankedFeatures(names=names, scores=sorted_scores, tiers=tiers, k=k)
