"""Simple-average and stacked combinations of the base learners.

Each member owns its full preprocessing: the tree learners standardize and
(optionally) SMOTE-resample their training rows; the recurrent learner
min-max scales rows and trains on windows whose end row lies in its
training set. The stacked combiner fits a logistic meta-learner on
out-of-fold base predictions over the training split, then refits every
member on the full training split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import rng as rngmod
from .data import TimeSeriesFrame
from .forest import ForestConfig, RandomForest
from .gbt import GbtConfig, GradientBoosting
from .linear import LogisticConfig, LogisticRegressionNewton
from .lstm import LstmClassifier, LstmConfig
from .scaling import Scaler
from .smote import SmoteConfig, smote_oversample

MEMBER_ORDER = ("forest", "gbt", "lstm")


def average_ensemble(member_probs) -> np.ndarray:
    """Unweighted per-row mean of equally long probability vectors."""
    member_probs = [np.asarray(p, dtype=np.float64) for p in member_probs]
    lengths = {len(p) for p in member_probs}
    if len(lengths) != 1:
        raise ValueError(f"member probability vectors differ in length: {sorted(lengths)}")
    return np.mean(member_probs, axis=0)


class TreeMember:
    """Standardize -> (SMOTE) -> tree model, for 'forest' and 'gbt'."""

    def __init__(self, name: str, model_config, smote_config: SmoteConfig | None):
        self.name = name
        self.model_config = model_config
        self.smote_config = smote_config

    def _new_model(self):
        if self.name == "forest":
            return RandomForest(config=self.model_config)
        return GradientBoosting(config=self.model_config)

    def fit(self, frame: TimeSeriesFrame, train_idx: np.ndarray):
        self.scaler_ = Scaler(kind="zscore").fit(frame.X[train_idx], frame.channel_names)
        X = self.scaler_.transform(frame.X[train_idx])
        y = frame.y[train_idx]
        if self.smote_config is not None:
            X, y = smote_oversample(X, y, self.smote_config)
        self.post_resample_counts_ = {0: int((y == 0).sum()), 1: int((y == 1).sum())}
        self.model_ = self._new_model().fit(X, y, feature_names=frame.channel_names)
        return self

    def predict_proba(self, frame: TimeSeriesFrame, idx: np.ndarray) -> np.ndarray:
        return self.model_.predict_proba(self.scaler_.transform(frame.X[idx]))


class LstmMember:
    """Min-max scale rows -> windowed recurrent classifier.

    Windows are built over the full ordered frame (feature context only);
    training labels come exclusively from the member's training rows.
    """

    def __init__(self, config: LstmConfig, smote_config: SmoteConfig | None = None,
                 train_on_resampled: bool = False):
        self.config = config
        self.smote_config = smote_config
        self.train_on_resampled = train_on_resampled

    def fit(self, frame: TimeSeriesFrame, train_idx: np.ndarray):
        self.scaler_ = Scaler(kind="minmax").fit(frame.X[train_idx], frame.channel_names)
        clf = LstmClassifier(config=self.config)
        if self.train_on_resampled and self.smote_config is not None:
            # alternative path: resampled rows lose temporal ordering but
            # are windowed in output order anyway
            Xr, yr = smote_oversample(self.scaler_.transform(frame.X[train_idx]),
                                      frame.y[train_idx], self.smote_config)
            clf.fit(Xr, yr, feature_names=frame.channel_names)
        else:
            mask = np.zeros(len(frame), dtype=bool)
            mask[train_idx] = True
            clf.fit(self.scaler_.transform(frame.X), frame.y, row_mask=mask,
                    feature_names=frame.channel_names)
        self.model_ = clf
        return self

    def predict_proba(self, frame: TimeSeriesFrame, idx: np.ndarray) -> np.ndarray:
        probs = self.model_.predict_proba(self.scaler_.transform(frame.X))
        return probs[idx]


@dataclass
class StackConfig:
    members: tuple = ("forest", "gbt", "lstm")
    combiner: str = "stacked"           # "stacked" | "average"
    meta: LogisticConfig = field(default_factory=LogisticConfig)
    oof_folds: int = 5
    seed: int = 0
    forest: ForestConfig = field(default_factory=ForestConfig)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    lstm: LstmConfig = field(default_factory=LstmConfig)
    smote: SmoteConfig | None = field(default_factory=SmoteConfig)
    lstm_on_resampled: bool = False

    def __post_init__(self):
        unknown = [m for m in self.members if m not in MEMBER_ORDER]
        if unknown:
            raise ValueError(f"unknown member(s): {unknown}")
        if self.combiner not in ("stacked", "average"):
            raise ValueError(f"unknown combiner {self.combiner!r}")
        if self.oof_folds < 2:
            raise ValueError("oof_folds must be >= 2")
        # keep the serialized meta-feature order canonical
        self.members = tuple(m for m in MEMBER_ORDER if m in self.members)


class MemberTrainingError(RuntimeError):
    def __init__(self, member: str, cause: Exception):
        super().__init__(f"member {member!r} failed to train: {cause}")
        self.member = member


def _stratified_folds(y: np.ndarray, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per row, balanced per class."""
    fold = np.empty(len(y), dtype=np.int64)
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        fold[idx] = np.arange(len(idx)) % n_folds
    return fold


class StackedEnsemble(BaseEstimator):
    def __init__(self, config: StackConfig | None = None):
        self.config = config or StackConfig()

    def _make_member(self, name: str, seed_offset: int):
        cfg = self.config
        seed = int(rngmod.substream(cfg.seed, f"member.{name}.{seed_offset}").integers(2**31))
        if name == "forest":
            c = ForestConfig(**{**cfg.forest.to_dict(), "seed": seed})
            smote = None if cfg.smote is None else SmoteConfig(**{**cfg.smote.to_dict(), "seed": seed})
            return TreeMember("forest", c, smote)
        if name == "gbt":
            c = GbtConfig(**{**cfg.gbt.to_dict(), "seed": seed})
            smote = None if cfg.smote is None else SmoteConfig(**{**cfg.smote.to_dict(), "seed": seed})
            return TreeMember("gbt", c, smote)
        c = LstmConfig.from_dict({**cfg.lstm.to_dict(), "seed": seed})
        smote = None if cfg.smote is None else SmoteConfig(**{**cfg.smote.to_dict(), "seed": seed})
        return LstmMember(c, smote, train_on_resampled=cfg.lstm_on_resampled)

    def _fit_member(self, name: str, seed_offset: int, frame, idx):
        try:
            return self._make_member(name, seed_offset).fit(frame, idx)
        except Exception as exc:                     # noqa: BLE001 - re-raised with identity
            raise MemberTrainingError(name, exc) from exc

    def fit(self, frame: TimeSeriesFrame, train_idx, prefit_members: dict | None = None):
        """``prefit_members`` may supply members already fitted on exactly
        ``train_idx``; they are reused as the final-layer members while the
        out-of-fold meta-training still refits per fold."""
        cfg = self.config
        train_idx = np.asarray(train_idx)
        y_train = frame.y[train_idx]

        if cfg.combiner == "stacked":
            fold_rng = rngmod.substream(cfg.seed, "stack.folds")
            fold_of = _stratified_folds(y_train, cfg.oof_folds, fold_rng)
            oof = np.full((len(train_idx), len(cfg.members)), np.nan)
            self.fold_of_row_ = dict(zip(train_idx.tolist(), fold_of.tolist()))
            self.fold_train_rows_ = {}
            for k in range(cfg.oof_folds):
                fit_rows = train_idx[fold_of != k]
                held_rows = train_idx[fold_of == k]
                self.fold_train_rows_[k] = set(fit_rows.tolist())
                for j, name in enumerate(cfg.members):
                    member = self._fit_member(name, seed_offset=k + 1, frame=frame, idx=fit_rows)
                    oof[fold_of == k, j] = member.predict_proba(frame, held_rows)
            self.meta_ = LogisticRegressionNewton(config=cfg.meta).fit(oof, y_train)
            self.oof_predictions_ = oof

        prefit_members = prefit_members or {}
        self.members_ = {
            name: prefit_members[name] if name in prefit_members
            else self._fit_member(name, seed_offset=0, frame=frame, idx=train_idx)
            for name in cfg.members
        }
        self.member_order_ = list(cfg.members)
        return self

    def member_probabilities(self, frame: TimeSeriesFrame, idx) -> np.ndarray:
        if not hasattr(self, "members_"):
            raise ValueError("ensemble is not fitted")
        idx = np.asarray(idx)
        return np.column_stack([
            self.members_[name].predict_proba(frame, idx) for name in self.member_order_
        ])

    def predict_proba(self, frame: TimeSeriesFrame, idx) -> np.ndarray:
        probs = self.member_probabilities(frame, idx)
        if self.config.combiner == "average":
            return probs.mean(axis=1)
        return self.meta_.predict_proba(probs)

    def predict(self, frame: TimeSeriesFrame, idx, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(frame, idx) >= threshold).astype(np.int64)
