"""Correlation, rolling statistics, temporal feature recipes and ranking."""

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrodetect.data import TimeSeriesFrame
from hydrodetect.features import (
    FeatureSpec, engineer_temporal, parse_derived_name,
    pearson_correlation_matrix, rank_features_by_importance,
    rolling_mean, rolling_std,
)
from hydrodetect.forest import ForestConfig


def _frame(X, y=None, names=None):
    n = len(X)
    return TimeSeriesFrame(
        timestamps=np.arange(n).astype("datetime64[s]"),
        channel_names=names or [f"s{j}" for j in range(X.shape[1])],
        X=X,
        y=np.zeros(n, dtype=np.int64) if y is None else y,
    )


class TestCorrelation:
    def test_matches_corrcoef(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(200, 5))
        C = pearson_correlation_matrix(_frame(X))
        np.testing.assert_allclose(C, np.corrcoef(X, rowvar=False), atol=1e-10)

    def test_constant_column_convention(self):
        X = np.column_stack([np.ones(30), np.arange(30.0)])
        C = pearson_correlation_matrix(_frame(X))
        assert C[0, 1] == 0.0 and C[1, 0] == 0.0
        assert C[0, 0] == 1.0

    def test_label_column(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(100, 2))
        y = (X[:, 0] > 0).astype(np.int64)
        C = pearson_correlation_matrix(_frame(X, y), include_labels=True)
        assert C.shape == (3, 3)
        assert C[0, 2] > 0.5

    def test_too_short(self):
        with pytest.raises(ValueError):
            pearson_correlation_matrix(_frame(np.zeros((1, 2))))


class TestRolling:
    def test_against_pandas(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=80)
        s = pd.Series(x)
        np.testing.assert_allclose(rolling_mean(x, 5),
                                   s.rolling(5).mean().to_numpy(), equal_nan=True)
        np.testing.assert_allclose(rolling_std(x, 5),
                                   s.rolling(5).std(ddof=1).to_numpy(),
                                   equal_nan=True, atol=1e-12)

    def test_nan_lead_in(self):
        out = rolling_mean(np.arange(10.0), 4)
        assert np.isnan(out[:3]).all() and not np.isnan(out[3:]).any()

    def test_window_validation(self):
        with pytest.raises(ValueError):
            rolling_mean(np.arange(5.0), 0)
        with pytest.raises(ValueError):
            rolling_std(np.arange(5.0), 1)
        with pytest.raises(ValueError):
            rolling_mean(np.arange(3.0), 4)


class TestEngineering:
    def _engineered(self, x):
        frame = _frame(x[:, None], names=["s"])
        spec = FeatureSpec(base_features=["s"])
        return engineer_temporal(frame, spec), spec

    def test_recipe_values(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=60)
        out, _ = self._engineered(x)
        np.testing.assert_allclose(out.column("s_lag1")[1:], x[:-1])
        np.testing.assert_allclose(out.column("s_lag3")[3:], x[:-3])
        np.testing.assert_allclose(out.column("s_d1")[1:], x[1:] - x[:-1])
        np.testing.assert_allclose(out.column("s_mean_5")[4:],
                                   pd.Series(x).rolling(5).mean().to_numpy()[4:])
        np.testing.assert_allclose(out.column("s_std_5")[4:],
                                   pd.Series(x).rolling(5).std().to_numpy()[4:],
                                   atol=1e-12)

    def test_fill_and_originals_untouched(self):
        x = np.arange(20.0)
        out, spec = self._engineered(x)
        assert not np.isnan(out.X).any()
        # backfill copies the first defined value into the lead-in
        assert out.column("s_lag3")[0] == out.column("s_lag3")[3]
        np.testing.assert_array_equal(out.column("s"), x)
        assert out.channel_names == ["s"] + spec.derived_names()

    def test_causality(self):
        """Derived values at row t never depend on rows after t."""
        rng = np.random.default_rng(4)
        x = rng.normal(size=40)
        out_a, _ = self._engineered(x)
        x2 = x.copy()
        x2[30:] += 100.0
        out_b, _ = self._engineered(x2)
        np.testing.assert_array_equal(out_a.X[:30, 1:], out_b.X[:30, 1:])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_causality_property(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(12, 50))
        cut = int(rng.integers(6, n))
        x = rng.normal(size=n)
        x2 = x.copy()
        x2[cut:] = rng.normal(size=n - cut) * 10
        out_a, _ = self._engineered(x)
        out_b, _ = self._engineered(x2)
        np.testing.assert_array_equal(out_a.X[:cut, 1:], out_b.X[:cut, 1:])

    def test_unknown_base(self):
        frame = _frame(np.zeros((10, 1)), names=["s"])
        with pytest.raises(ValueError, match="unknown base"):
            engineer_temporal(frame, FeatureSpec(base_features=["nope"]))

    def test_full_pipeline_feature_count(self, prepared):
        # 43 raw channels + 10 bases x 5 recipes
        assert len(prepared.frame.channel_names) == 93
        assert not np.isnan(prepared.frame.X).any()

    def test_spec_round_trip_and_parse(self):
        spec = FeatureSpec(base_features=["a", "a_x"], rolling_window=7)
        assert FeatureSpec.from_dict(spec.to_dict()) == spec
        assert parse_derived_name("a_lag3", spec) == ("a", "lag3")
        assert parse_derived_name("a_x_mean_7", spec) == ("a_x", "mean")
        assert parse_derived_name("a_mean_5", spec) is None
        assert parse_derived_name("b_d1", spec) is None


class TestRanking:
    def test_informative_features_rank_high(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(500, 6))
        y = (X[:, 2] + 0.8 * X[:, 4] > 0.5).astype(np.int64)
        frame = _frame(X, y)
        ranked = rank_features_by_importance(
            frame, ForestConfig(n_trees=30, max_depth=8, seed=0), k=2)
        assert set(ranked.top(2)) == {"s2", "s4"}
        assert ranked.tiers[:2] == ["High", "High"]
        assert len(ranked.names) == 6
        assert ranked.scores[0] >= ranked.scores[-1]

    def test_tier_rules(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(300, 4))
        y = (X[:, 0] > 0).astype(np.int64)
        ranked = rank_features_by_importance(
            _frame(X, y), ForestConfig(n_trees=20, max_depth=6, seed=1), k=1)
        cutoff = 0.5 * ranked.scores[0]
        for score, tier in zip(ranked.scores[1:], ranked.tiers[1:]):
            assert tier == ("Medium" if score >= cutoff else "Low")

    def test_k_too_large(self):
        frame = _frame(np.zeros((10, 2)), np.array([0, 1] * 5))
        with pytest.raises(ValueError, match="k=5"):
            rank_features_by_importance(frame, ForestConfig(n_trees=2), k=5)
