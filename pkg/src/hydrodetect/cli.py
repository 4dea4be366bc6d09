"""Command-line entry point: explore, train, evaluate, explain.

Every flag mirrors a config path and overrides it; environment variables
with the HYDRODETECT__ prefix override the config file too. Reports are
JSON (machine-parseable) plus a plain-text comparison table, written
atomically, with the resolved config and all derived seeds embedded.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .data import SchemaError, class_balance
from .ensemble import MemberTrainingError
from .explain import global_mean_abs_attribution, shapley_sampling
from .features import pearson_correlation_matrix, rolling_std
from .lstm import make_windows
from .metrics import confusion, evaluate_scores
from .persist import ModelFileError, atomic_write_text, dumps, load_model_file
from .pipeline import (
    ConfigError, build_manifest, build_member, build_stack_config, ensemble_id,
    member_from_doc, predict_from_doc, prepare, resolve_config, save_ensemble,
    save_member,
)
from .ensemble import StackedEnsemble
from . import rng as rngmod

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAIN = 4
EXIT_EVAL = 5


def _load_config(args) -> dict:
    user = {}
    if args.config:
        try:
            user = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if getattr(args, "threshold", None) is not None:
        overrides["threshold"] = args.threshold
    if getattr(args, "data", None):
        overrides["data.paths"] = list(args.data)
    return resolve_config(user, overrides=overrides)


def _row_predict_fn(doc: dict, base_dir=None):
    """Row-wise probability function f(X) for explainability.

    Tree models score rows directly; the recurrent model scores a row as
    a constant-history window; ensembles combine their members' row
    functions.
    """
    kind = doc["kind"]
    if kind in ("forest", "gbt"):
        member = member_from_doc(doc)
        return lambda X: member.model_.predict_proba(member.scaler_.transform(np.atleast_2d(X)))
    if kind == "lstm":
        member = member_from_doc(doc)
        seq_len = member.model_.config.seq_len

        def f(X):
            X = np.atleast_2d(X)
            scaled = member.scaler_.transform(X)
            windows = np.repeat(scaled[:, None, :], seq_len, axis=1)
            batch = make_windows(np.zeros((seq_len, X.shape[1])),
                                 np.zeros(seq_len, dtype=np.int64), seq_len)
            batch.windows = windows
            batch.labels = np.zeros(len(X), dtype=np.int64)
            batch.end_rows = np.arange(len(X))
            return member.model_.predict_proba_windows(batch)

        return f
    if kind == "ensemble":
        payload = doc["payload"]
        fns = [
            _row_predict_fn(load_model_file(Path(base_dir) / payload["member_files"][m]), base_dir)
            for m in payload["member_order"]
        ]
        if payload["combiner"] == "average":
            return lambda X: np.mean([f(X) for f in fns], axis=0)
        from .linear import LogisticRegressionNewton
        meta = LogisticRegressionNewton.from_payload(payload["meta"])
        return lambda X: meta.predict_proba(np.column_stack([f(X) for f in fns]))
    raise ModelFileError(f"unknown model kind {kind!r}")


def cmd_explore(args) -> int:
    cfg = _load_config(args)
    prepared = prepare(cfg)
    out = Path(cfg["output_dir"]) / "explore"
    frame = prepared.frame_raw

    c0, c1, frac = class_balance(frame)
    corr = pearson_correlation_matrix(frame, include_labels=True)
    corr_names = frame.channel_names + ["ATT_FLAG"]
    lines = ["," + ",".join(corr_names)]
    for name, row in zip(corr_names, corr):
        lines.append(name + "," + ",".join(f"{v:.6f}" for v in row))
    atomic_write_text(out / "correlation_matrix.csv", "\n".join(lines) + "\n")

    window = cfg["features"]["rolling_window"]
    top = prepared.ranked.top(prepared.ranked.k)
    vol_lines = ["row," + ",".join(top)]
    vol = np.column_stack([rolling_std(frame.column(name), window) for name in top])
    for i, row in enumerate(vol):
        vol_lines.append(str(i) + "," + ",".join("" if np.isnan(v) else f"{v:.6f}" for v in row))
    atomic_write_text(out / "rolling_std_top_features.csv", "\n".join(vol_lines) + "\n")

    report = {
        "class_balance": {"normal": c0, "attack": c1,
                          "minority_fraction": frac,
                          "minority_percent": round(100.0 * frac, 2)},
        "rows": len(frame),
        "sensor_channels": len(frame.channel_names),
        "feature_ranking": [
            {"name": n, "score": float(s), "tier": t}
            for n, s, t in zip(prepared.ranked.names, prepared.ranked.scores,
                               prepared.ranked.tiers)
        ],
        "manifest": build_manifest(cfg, prepared),
    }
    atomic_write_text(out / "exploration.json", dumps(report))
    print(f"explore: {c1} attack rows of {len(frame)} ({100 * frac:.2f}%), "
          f"report in {out}")
    return EXIT_OK


def _selected_models(cfg, args):
    if getattr(args, "models", None) is not None:
        return [m.strip() for m in args.models.split(",") if m.strip()]
    return ["forest", "gbt", "lstm"]


def cmd_train(args) -> int:
    cfg = _load_config(args)
    model_names = _selected_models(cfg, args)
    ensembles = cfg["ensembles"] if not getattr(args, "no_ensembles", False) else []
    unknown = [m for m in model_names if m not in ("forest", "gbt", "lstm")]
    if unknown:
        raise ConfigError(f"unknown model name(s): {unknown}")
    if not model_names and not ensembles:
        raise ConfigError("nothing to train: no models and no ensembles requested")

    prepared = prepare(cfg)
    out = Path(cfg["output_dir"])
    frame, split = prepared.frame, prepared.split

    members, post_counts = {}, {}
    for name in model_names:
        try:
            member = build_member(name, cfg, prepared.seeds).fit(frame, split.train)
        except Exception as exc:
            raise MemberTrainingError(name, exc) from exc
        members[name] = member
        if hasattr(member, "post_resample_counts_"):
            post_counts[name] = member.post_resample_counts_

    manifest = build_manifest(cfg, prepared, extra={"post_resample_counts": post_counts})
    for name, member in members.items():
        save_member(out / f"model_{name}.json", name, member, manifest)

    for item in ensembles:
        needed = [m for m in item["members"] if m not in members]
        if needed:
            raise ConfigError(
                f"ensemble {ensemble_id(item)} needs base model(s) {needed}; "
                f"include them in --models"
            )
        seed = int(rngmod.substream(cfg["seed"], f"stack.{ensemble_id(item)}").integers(2**31))
        stack_cfg = build_stack_config(item, cfg, seed)
        model = StackedEnsemble(config=stack_cfg).fit(
            frame, split.train,
            prefit_members={m: members[m] for m in item["members"]},
        )
        save_ensemble(out, f"model_{ensemble_id(item)}", model, manifest)

    atomic_write_text(out / "manifest.json", dumps(manifest))
    print(f"train: wrote {len(model_names)} base model(s) and "
          f"{len(ensembles)} ensemble(s) to {out}")
    return EXIT_OK


def _model_paths(args, cfg) -> list[Path]:
    if getattr(args, "model_files", None):
        return [Path(p) for p in args.model_files]
    out = Path(cfg["output_dir"])
    return sorted(out.glob("model_*.json"))


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    prepared = prepare(cfg)
    out = Path(cfg["output_dir"])
    frame = prepared.frame
    idx = prepared.split.train if args.in_sample else prepared.split.valid
    labels = frame.y[idx]
    threshold = cfg["threshold"]

    paths = [p for p in _model_paths(args, cfg) if "member" not in p.stem]
    if not paths:
        raise ModelFileError("no model files to evaluate")

    rows = []
    for path in paths:
        doc = load_model_file(path)
        if doc["manifest"].get("data_fingerprint") not in (None, prepared.fingerprint):
            warnings.warn(f"{path.name}: data fingerprint differs from training time")
        scores = predict_from_doc(doc, frame, idx, base_dir=path.parent)
        report = evaluate_scores(labels, scores, threshold,
                                 model_id=path.stem.removeprefix("model_"),
                                 config=doc["manifest"].get("config_echo", {}),
                                 in_sample=bool(args.in_sample))
        doc_out = report.to_dict()
        doc_out["confusion_table"] = report.confusion.as_table()
        if args.sweep:
            doc_out["threshold_sweep"] = [
                confusion(labels, scores, t).to_dict()
                for t in [round(0.1 * i, 1) for i in range(1, 10)]
            ]
        atomic_write_text(out / f"report_{report.model_id}.json", dumps(doc_out))
        rows.append(report)

    header = f"{'model':<28} {'AUC':>8} {'Accuracy':>9} {'Precision':>10} {'Recall':>8} {'F1':>8}"
    lines = [header, "-" * len(header)]
    for r in rows:
        auc = "n/a" if r.roc_auc is None else f"{r.roc_auc:.4f}"
        lines.append(
            f"{r.model_id:<28} {auc:>8} {r.accuracy:>9.4f} "
            f"{r.precision[1]:>10.4f} {r.recall[1]:>8.4f} {r.f1[1]:>8.4f}"
            + ("  [degenerate]" if r.degenerate else "")
            + ("  [in-sample]" if r.in_sample else "")
        )
    table = "\n".join(lines) + "\n"
    atomic_write_text(out / "comparison.txt", table)
    print(table, end="")
    return EXIT_OK


def cmd_explain(args) -> int:
    cfg = _load_config(args)
    prepared = prepare(cfg)
    out = Path(cfg["output_dir"])
    frame = prepared.frame
    ecfg = cfg["explain"]
    rng = rngmod.substream(cfg["seed"], "explain")

    path = Path(args.model_file) if args.model_file else out / "model_gbt.json"
    doc = load_model_file(path)
    predict_fn = _row_predict_fn(doc, base_dir=path.parent)

    bg_idx = rng.choice(prepared.split.train, size=min(ecfg["background_rows"],
                                                       len(prepared.split.train)),
                        replace=False)
    background = frame.X[np.sort(bg_idx)]
    n_rows = min(ecfg["n_rows"], len(prepared.split.valid))
    row_idx = np.sort(rng.choice(prepared.split.valid, size=n_rows, replace=False))

    global_att = global_mean_abs_attribution(
        predict_fn, frame.X[row_idx], background,
        n_samples=ecfg["n_samples"], seed=int(rng.integers(2**31)),
        feature_names=frame.channel_names,
    )
    ranking = global_att.ranking()

    flagged = row_idx[predict_fn(frame.X[row_idx]) >= cfg["threshold"]][:5]
    per_row = {}
    for r in flagged:
        att = shapley_sampling(predict_fn, frame.X[r], background,
                               n_samples=ecfg["n_samples"],
                               seed=int(rng.integers(2**31)),
                               feature_names=frame.channel_names)
        per_row[int(r)] = att.to_dict()

    base_features = set(prepared.spec.base_features) | set(prepared.frame_raw.channel_names)
    top_n = ranking[:ecfg["top_n"]]
    report = {
        "model_file": path.name,
        "global_mean_abs_attribution": [
            {"name": n, "value": v, "rank": i + 1,
             "temporal": n not in base_features}
            for i, (n, v) in enumerate(ranking)
        ],
        "top_n": ecfg["top_n"],
        "temporal_fraction_top_n": sum(1 for n, _ in top_n if n not in base_features) / len(top_n),
        "flagged_rows": per_row,
        "manifest": build_manifest(cfg, prepared),
    }
    atomic_write_text(out / f"attributions_{path.stem.removeprefix('model_')}.json",
                      dumps(report))

    width = max(len(n) for n, _ in top_n)
    lines = [f"{'rank':>4} {'feature':<{width}} {'mean |attribution|':>20}"]
    for i, (n, v) in enumerate(top_n):
        lines.append(f"{i + 1:>4} {n:<{width}} {v:>20.6g}")
    atomic_write_text(out / f"attributions_{path.stem.removeprefix('model_')}.txt",
                      "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_synth_data(args) -> int:
    from .synthdata import generate_dataset
    p1, p2 = generate_dataset(args.out or "data", seed=args.seed if args.seed is not None else 7)
    print(f"wrote {p1} and {p2}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hydrodetect",
                                     description="SCADA cyber-attack detection pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="root seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--data", nargs="+", help="input data files (overrides config)")

    p = sub.add_parser("explore", help="class balance, correlation, feature ranking")
    common(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("train", help="train base models and ensembles")
    common(p)
    p.add_argument("--models", help="comma-separated subset of forest,gbt,lstm")
    p.add_argument("--no-ensembles", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate trained model files")
    common(p)
    p.add_argument("--threshold", type=float)
    p.add_argument("--model-files", nargs="+", dest="model_files")
    p.add_argument("--in-sample", action="store_true")
    p.add_argument("--sweep", action="store_true",
                   help="emit a confusion matrix per threshold in 0.1..0.9")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="Shapley attribution report for a model file")
    common(p)
    p.add_argument("--threshold", type=float)
    p.add_argument("--model-file", dest="model_file")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("synth-data", help="generate the synthetic fixture dataset")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MemberTrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except (ModelFileError, ValueError) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
