"""Hybrid stacked-ensemble cyber-attack detection for water-distribution
SCADA telemetry: temporal feature engineering, minority oversampling,
random forest + Newton-boosted trees + LSTM base learners, a logistic
stacking meta-learner, imbalance-aware metrics and Shapley explainability.
"""

from .data import (
    SENSOR_COLUMNS, SchemaError, SplitIndices, TimeSeriesFrame,
    class_balance, load_batadal, save_batadal, stratified_split,
)
from .ensemble import StackConfig, StackedEnsemble, average_ensemble
from .explain import Attribution, exact_shapley, permutation_importance, shapley_sampling
from .features import (
    FeatureSpec, RankedFeatures, engineer_temporal, pearson_correlation_matrix,
    rank_features_by_importance, rolling_mean, rolling_std,
)
from .forest import ForestConfig, RandomForest
from .gbt import GbtConfig, GradientBoosting
from .linear import LogisticConfig, LogisticRegressionNewton
from .lstm import LstmClassifier, LstmConfig, SequenceBatch, make_windows, train_lstm
from .metrics import (
    ConfusionMatrix, MetricsReport, confusion, evaluate_scores, prf1, roc_auc, roc_curve,
)
from .scaling import Scaler, ScalerParams
from .smote import SmoteConfig, smote_oversample

__version__ = "0.1.0"

__all__ = [
    "SENSOR_COLUMNS", "SchemaError", "SplitIndices", "TimeSeriesFrame",
    "class_balance", "load_batadal", "save_batadal", "stratified_split",
    "StackConfig", "StackedEnsemble", "average_ensemble",
    "Attribution", "exact_shapley", "permutation_importance", "shapley_sampling",
    "FeatureSpec", "RankedFeatures", "engineer_temporal",
    "pearson_correlation_matrix", "rank_features_by_importance",
    "rolling_mean", "rolling_std",
    "ForestConfig", "RandomForest", "GbtConfig", "GradientBoosting",
    "LogisticConfig", "LogisticRegressionNewton",
    "LstmClassifier", "LstmConfig", "SequenceBatch", "make_windows", "train_lstm",
    "ConfusionMatrix", "MetricsReport", "confusion", "evaluate_scores",
    "prf1", "roc_auc", "roc_curve",
    "Scaler", "ScalerParams", "SmoteConfig", "smote_oversample",
]
