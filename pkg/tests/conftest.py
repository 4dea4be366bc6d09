"""Shared fixtures: the synthetic data corpus and one trained pipeline.

The expensive fixtures are session-scoped so the acceptance tests and the
module tests share a single data generation and a single training pass.
"""

import numpy as np
import pytest

from hydrodetect.data import load_batadal
from hydrodetect.ensemble import StackedEnsemble
from hydrodetect.pipeline import (
    build_member, build_stack_config, prepare, resolve_config,
)
from hydrodetect.synthdata import generate_dataset

# Reduced-but-faithful training configuration for the test runs: same
# algorithms and pipeline stages as the defaults, fewer trees/rounds/epochs
# so the whole suite stays in the minutes range.
TEST_MODEL_OVERRIDES = {
    "forest": {"n_trees": 50, "max_depth": 14},
    "gbt": {"n_rounds": 80, "learning_rate": 0.05},
    "lstm": {"hidden_units": 32, "epochs": 3},
}

TRI_STACK_ITEM = {"members": ["forest", "gbt", "lstm"], "combiner": "stacked",
                  "oof_folds": 3, "meta_l2": 1.0}


@pytest.fixture(scope="session")
def data_paths(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    return generate_dataset(out, seed=7)


@pytest.fixture(scope="session")
def frame_raw(data_paths):
    return load_batadal(data_paths)


@pytest.fixture(scope="session")
def base_config(data_paths):
    return resolve_config({
        "data": {"paths": [str(p) for p in data_paths]},
        "models": TEST_MODEL_OVERRIDES,
        "ensembles": [dict(TRI_STACK_ITEM)],
    })


@pytest.fixture(scope="session")
def prepared(base_config):
    return prepare(base_config)


@pytest.fixture(scope="session")
def trained_members(base_config, prepared):
    return {
        name: build_member(name, base_config, prepared.seeds).fit(
            prepared.frame, prepared.split.train)
        for name in ("forest", "gbt", "lstm")
    }


@pytest.fixture(scope="session")
def member_valid_scores(prepared, trained_members):
    idx = prepared.split.valid
    return {name: m.predict_proba(prepared.frame, idx)
            for name, m in trained_members.items()}


@pytest.fixture(scope="session")
def stacked_tri(base_config, prepared, trained_members):
    import hydrodetect.rng as rngmod

    seed = int(rngmod.substream(base_config["seed"], "stack.stacked_forest+gbt+lstm")
               .integers(2**31))
    cfg = build_stack_config(TRI_STACK_ITEM, base_config, seed)
    return StackedEnsemble(config=cfg).fit(
        prepared.frame, prepared.split.train, prefit_members=trained_members)


@pytest.fixture(scope="session")
def small_frame(frame_raw):
    """First 600 rows of the attack-bearing file plus its first attack window."""
    start = frame_raw.file_boundaries[1]
    rows = np.arange(start, start + 600)
    from hydrodetect.data import TimeSeriesFrame
    return TimeSeriesFrame(
        timestamps=frame_raw.timestamps[rows],
        channel_names=list(frame_raw.channel_names),
        X=frame_raw.X[rows],
        y=frame_raw.y[rows],
    )
