"""Minority-class oversampling by nearest-neighbor interpolation.

Synthetic rows are convex combinations of a minority seed point and one of
its k nearest minority neighbors. Applied to the training split only;
neighbor search is exact brute-force Euclidean (the minority class here is
a few hundred rows).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0      # minority target as a fraction of the majority count
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0 < self.target_ratio <= 1:
            raise ValueError("target_ratio must be in (0, 1]")

    def to_dict(self) -> dict:
        return {"k_neighbors": self.k_neighbors, "target_ratio": self.target_ratio,
                "seed": self.seed}


def _neighbor_table(M: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest neighbors of each row (self excluded)."""
    sq = (M**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (M @ M.T)
    np.fill_diagonal(d2, np.inf)
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


def smote_oversample(X, y, cfg: SmoteConfig) -> tuple[np.ndarray, np.ndarray]:
    """Append synthetic minority rows until minority = round(ratio * majority).

    Original rows are preserved verbatim and come first in the output.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise ValueError(f"expected exactly two classes, got {list(classes)}")
    minority = classes[np.argmin(counts)]
    min_idx = np.flatnonzero(y == minority)
    n_min, n_maj = counts.min(), counts.max()
    if n_min < 2:
        raise ValueError("minority class needs at least 2 members")

    k = cfg.k_neighbors
    if n_min <= k:
        k = int(n_min - 1)
        warnings.warn(
            f"k_neighbors reduced to {k}: minority class has only {n_min} members",
            stacklevel=2,
        )

    n_new = int(round(cfg.target_ratio * n_maj)) - n_min
    if n_new <= 0:
        return X.copy(), y.copy()

    M = X[min_idx]
    nn = _neighbor_table(M, k)
    rng = np.random.default_rng(cfg.seed)
    seeds = rng.integers(0, n_min, size=n_new)
    picks = rng.integers(0, k, size=n_new)
    lam = rng.uniform(0.0, 1.0, size=n_new)
    base = M[seeds]
    other = M[nn[seeds, picks]]
    synthetic = base + lam[:, None] * (other - base)

    X_out = np.vstack([X, synthetic])
    y_out = np.concatenate([y, np.full(n_new, minority, dtype=np.int64)])
    return X_out, y_out
