"""Configuration handling and pipeline orchestration.

Stage order: load -> stratified split -> raw-feature ranking (training
rows only) -> temporal feature engineering -> per-member scaling/SMOTE ->
model fitting -> evaluation. All randomness flows from one root seed via
named substreams, recorded in the training manifest.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .data import SplitIndices, TimeSeriesFrame, class_balance, load_batadal, stratified_split
from .ensemble import LstmMember, StackConfig, StackedEnsemble, TreeMember, average_ensemble
from .features import FeatureSpec, RankedFeatures, engineer_temporal, rank_features_by_importance
from .forest import ForestConfig, RandomForest
from .gbt import GbtConfig, GradientBoosting
from .linear import LogisticConfig, LogisticRegressionNewton
from .lstm import LstmClassifier, LstmConfig
from .persist import fingerprint_paths, load_model_file, save_model_file
from .scaling import Scaler, ScalerParams
from .smote import SmoteConfig

ENV_PREFIX = "HYDRODETECT"


class ConfigError(ValueError):
    pass


DEFAULT_ENSEMBLES = [
    {"members": members, "combiner": combiner, "oof_folds": 5, "meta_l2": 1.0}
    for combiner in ("stacked", "average")
    for members in (["forest", "lstm"], ["forest", "gbt"], ["gbt", "lstm"],
                    ["forest", "gbt", "lstm"])
]


def default_config() -> dict:
    return {
        "seed": 42,
        "data": {"paths": []},
        "split": {"ratio": 0.8},
        "features": {
            "top_k": 10,
            "lags": [1, 3],
            "rolling_window": 5,
            "rank_forest": {"n_trees": 50, "max_depth": 12},
        },
        "smote": {"enabled": True, "k_neighbors": 5, "target_ratio": 1.0},
        "models": {
            "forest": {"n_trees": 300, "max_depth": None, "min_samples_leaf": 1,
                       "max_features": "sqrt", "bootstrap": True},
            "gbt": {"n_rounds": 500, "max_depth": 6, "learning_rate": 0.05,
                    "lambda_l2": 1.0, "gamma_min_gain": 0.0, "base_score": None},
            "lstm": {"hidden_units": 64, "dropout_rate": 0.2, "seq_len": 10,
                     "epochs": 30, "batch_size": 64, "learning_rate": 0.001,
                     "class_weights": "balanced", "optimizer": "adam",
                     "on_resampled": False},
        },
        "ensembles": copy.deepcopy(DEFAULT_ENSEMBLES),
        "threshold": 0.5,
        "output_dir": "runs/latest",
        "explain": {"n_rows": 200, "n_samples": 16, "background_rows": 100, "top_n": 20},
    }


ENSEMBLE_ITEM_KEYS = {"members", "combiner", "oof_folds", "meta_l2"}


def _check_unknown(user, template, path=""):
    if isinstance(template, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"config node {path or '<root>'} must be a mapping")
        for key, value in user.items():
            if key not in template:
                raise ConfigError(f"unknown config key: {path}{key}")
            _check_unknown(value, template[key], f"{path}{key}.")


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve_config(user_config: dict | None = None, env: dict | None = None,
                   overrides: dict | None = None) -> dict:
    """Defaults <- config file <- environment <- CLI overrides, validated."""
    defaults = default_config()
    user_config = user_config or {}
    _check_unknown(user_config, defaults)
    cfg = _merge(defaults, user_config)

    env = dict(os.environ if env is None else env)
    for key, raw in sorted(env.items()):
        if not key.startswith(ENV_PREFIX + "__"):
            continue
        parts = key[len(ENV_PREFIX) + 2:].split("__")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config path in {key}")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigError(f"unknown config path in {key}")
        node[parts[-1]] = value

    for path, value in (overrides or {}).items():
        node = cfg
        parts = path.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value

    for item in cfg["ensembles"]:
        unknown = set(item) - ENSEMBLE_ITEM_KEYS
        if unknown:
            raise ConfigError(f"unknown ensemble config key(s): {sorted(unknown)}")
    if not cfg["data"]["paths"]:
        raise ConfigError("data.paths must list at least one input file")
    if not 0 < cfg["split"]["ratio"] < 1:
        raise ConfigError("split.ratio must be in (0, 1)")
    return cfg


def derived_seeds(root_seed: int) -> dict:
    return {
        name: int(rngmod.substream(root_seed, name).integers(2**31))
        for name in ("split", "rank", "smote", "forest", "gbt", "lstm", "stack", "explain")
    }


@dataclass
class PreparedData:
    frame_raw: TimeSeriesFrame
    frame: TimeSeriesFrame          # engineered
    split: SplitIndices
    ranked: RankedFeatures
    spec: FeatureSpec
    fingerprint: str
    seeds: dict


def prepare(cfg: dict) -> PreparedData:
    seeds = derived_seeds(cfg["seed"])
    frame_raw = load_batadal(cfg["data"]["paths"])
    fingerprint = fingerprint_paths(cfg["data"]["paths"])
    split = stratified_split(frame_raw, cfg["split"]["ratio"], seeds["split"])

    fcfg = cfg["features"]
    rank_cfg = ForestConfig(seed=seeds["rank"], **fcfg["rank_forest"])
    ranked = rank_features_by_importance(frame_raw, rank_cfg, fcfg["top_k"],
                                         row_indices=split.train)
    spec = FeatureSpec(
        base_features=ranked.top(fcfg["top_k"]),
        lags=tuple(fcfg["lags"]),
        rolling_window=fcfg["rolling_window"],
    )
    frame = engineer_temporal(frame_raw, spec)
    return PreparedData(frame_raw=frame_raw, frame=frame, split=split,
                        ranked=ranked, spec=spec, fingerprint=fingerprint,
                        seeds=seeds)


def _smote_config(cfg: dict, seed: int) -> SmoteConfig | None:
    s = cfg["smote"]
    if not s["enabled"]:
        return None
    return SmoteConfig(k_neighbors=s["k_neighbors"], target_ratio=s["target_ratio"],
                       seed=seed)


def build_member(name: str, cfg: dict, seeds: dict):
    mcfg = dict(cfg["models"][name])
    if name == "forest":
        return TreeMember("forest", ForestConfig(seed=seeds["forest"], **mcfg),
                          _smote_config(cfg, seeds["smote"]))
    if name == "gbt":
        return TreeMember("gbt", GbtConfig(seed=seeds["gbt"], **mcfg),
                          _smote_config(cfg, seeds["smote"]))
    if name == "lstm":
        on_resampled = mcfg.pop("on_resampled", False)
        return LstmMember(LstmConfig(seed=seeds["lstm"], **mcfg),
                          smote_config=_smote_config(cfg, seeds["smote"]),
                          train_on_resampled=on_resampled)
    raise ConfigError(f"unknown model name {name!r}")


def build_stack_config(item: dict, cfg: dict, seed: int) -> StackConfig:
    models = cfg["models"]
    lstm_cfg = dict(models["lstm"])
    on_resampled = lstm_cfg.pop("on_resampled", False)
    smote = cfg["smote"]
    return StackConfig(
        members=tuple(item["members"]),
        combiner=item["combiner"],
        meta=LogisticConfig(l2=item.get("meta_l2", 1.0)),
        oof_folds=item.get("oof_folds", 5),
        seed=seed,
        forest=ForestConfig(seed=0, **models["forest"]),
        gbt=GbtConfig(seed=0, **models["gbt"]),
        lstm=LstmConfig(seed=0, **lstm_cfg),
        smote=SmoteConfig(k_neighbors=smote["k_neighbors"],
                          target_ratio=smote["target_ratio"], seed=0)
        if smote["enabled"] else None,
        lstm_on_resampled=on_resampled,
    )


def ensemble_id(item: dict) -> str:
    return f"{item['combiner']}_" + "+".join(
        m for m in ("forest", "gbt", "lstm") if m in item["members"]
    )


# --- model-file glue -------------------------------------------------------

def member_payload(name: str, member) -> tuple[dict, ScalerParams]:
    return member.model_.to_payload(), member.scaler_.params_


def save_member(path, name: str, member, manifest: dict) -> None:
    payload, scaler_params = member_payload(name, member)
    save_model_file(path, name, payload, member.model_.feature_names_,
                    scaler_params, manifest)


def member_from_doc(doc: dict):
    kind = doc["kind"]
    scaler = Scaler.from_params(ScalerParams.from_dict(doc["scaler"]))
    if kind == "forest":
        member = TreeMember("forest", None, None)
        member.model_ = RandomForest.from_payload(doc["payload"])
    elif kind == "gbt":
        member = TreeMember("gbt", None, None)
        member.model_ = GradientBoosting.from_payload(doc["payload"])
    elif kind == "lstm":
        member = LstmMember(LstmConfig.from_dict(doc["payload"]["config"]))
        member.model_ = LstmClassifier.from_payload(doc["payload"])
    else:
        raise ValueError(f"unknown member kind {kind!r}")
    member.scaler_ = scaler
    return member


def save_ensemble(out_dir: Path, name: str, model: StackedEnsemble, manifest: dict) -> Path:
    out_dir = Path(out_dir)
    member_files = {}
    for member_name in model.member_order_:
        fname = f"{name}_member_{member_name}.json"
        save_member(out_dir / fname, member_name, model.members_[member_name], manifest)
        member_files[member_name] = fname
    payload = {
        "combiner": model.config.combiner,
        "member_order": model.member_order_,
        "member_files": member_files,
        "meta": model.meta_.to_payload() if model.config.combiner == "stacked" else None,
    }
    path = out_dir / f"{name}.json"
    save_model_file(path, "ensemble", payload, [], None, manifest)
    return path


def predict_from_doc(doc: dict, frame: TimeSeriesFrame, idx, base_dir=None) -> np.ndarray:
    """Class-1 probabilities for the given rows from a loaded model file."""
    idx = np.asarray(idx)
    kind = doc["kind"]
    if kind in ("forest", "gbt", "lstm"):
        expected = doc["feature_names"]
        missing = [c for c in expected if c not in frame.channel_names]
        if missing:
            raise ValueError(f"data is missing model feature column(s): {missing}")
        member = member_from_doc(doc)
        if list(frame.channel_names) != list(expected):
            order = [frame.channel_names.index(c) for c in expected]
            frame = TimeSeriesFrame(frame.timestamps, list(expected),
                                    frame.X[:, order], frame.y,
                                    list(frame.file_boundaries))
        return member.predict_proba(frame, idx)
    if kind == "ensemble":
        payload = doc["payload"]
        probs = []
        for member_name in payload["member_order"]:
            member_doc = load_model_file(Path(base_dir) / payload["member_files"][member_name])
            probs.append(predict_from_doc(member_doc, frame, idx, base_dir))
        if payload["combiner"] == "average":
            return average_ensemble(probs)
        meta = LogisticRegressionNewton.from_payload(payload["meta"])
        return meta.predict_proba(np.column_stack(probs))
    raise ValueError(f"unknown model kind {kind!r}")


def build_manifest(cfg: dict, prepared: PreparedData, extra: dict | None = None) -> dict:
    c0, c1, frac = class_balance(prepared.frame_raw)
    manifest = {
        "root_seed": cfg["seed"],
        "derived_seeds": prepared.seeds,
        "data_fingerprint": prepared.fingerprint,
        "class_balance": {"normal": c0, "attack": c1, "minority_fraction": frac},
        "split": {
            "ratio": cfg["split"]["ratio"],
            "train_size": int(len(prepared.split.train)),
            "valid_size": int(len(prepared.split.valid)),
            "train_attacks": int(prepared.frame_raw.y[prepared.split.train].sum()),
            "valid_attacks": int(prepared.frame_raw.y[prepared.split.valid].sum()),
        },
        "feature_spec": prepared.spec.to_dict(),
        "feature_ranking_top": prepared.ranked.top(prepared.ranked.k),
        "n_model_features": len(prepared.frame.channel_names),
        "config_echo": cfg,
    }
    if extra:
        manifest.update(extra)
    return manifest
