"""End-to-end command-line runs: artifacts, exit codes, reproducibility."""

import json

import pytest

from hydrodetect.cli import (
    EXIT_CONFIG, EXIT_DATA, EXIT_EVAL, EXIT_OK, main,
)

TINY_MODELS = {
    "forest": {"n_trees": 8, "max_depth": 10},
    "gbt": {"n_rounds": 10, "max_depth": 3, "learning_rate": 0.2},
    "lstm": {"hidden_units": 4, "epochs": 1, "seq_len": 5},
}


@pytest.fixture()
def tiny_config(tmp_path, data_paths):
    cfg = {
        "data": {"paths": [str(p) for p in data_paths]},
        "features": {"rank_forest": {"n_trees": 8, "max_depth": 8}},
        "models": TINY_MODELS,
        "ensembles": [],
        "explain": {"n_rows": 6, "n_samples": 4, "background_rows": 20,
                    "top_n": 10},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestExitCodes:
    def test_unknown_config_key(self, tmp_path, data_paths):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"data": {"paths": [str(data_paths[0])]},
                                   "mystery": 1}))
        assert main(["explore", "--config", str(bad)]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert main(["explore", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG

    def test_no_data_paths(self):
        assert main(["explore"]) == EXIT_CONFIG

    def test_missing_data_file(self, tmp_path):
        missing = tmp_path / "ghost.csv"
        missing.write_text("DATETIME,nope\n01/01/17 00,1\n")
        assert main(["explore", "--data", str(missing),
                     "--out", str(tmp_path / "o")]) == EXIT_DATA

    def test_evaluate_without_models(self, tiny_config, tmp_path):
        out = tmp_path / "empty"
        out.mkdir()
        assert main(["evaluate", "--config", str(tiny_config),
                     "--out", str(out)]) == EXIT_EVAL

    def test_train_nothing_requested(self, tiny_config, tmp_path):
        code = main(["train", "--config", str(tiny_config), "--models", "",
                     "--no-ensembles", "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_unknown_model_name(self, tiny_config, tmp_path):
        code = main(["train", "--config", str(tiny_config), "--models", "svm",
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG


class TestWorkflow:
    def test_explore_train_evaluate_explain(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "run"

        assert main(["explore", "--config", str(tiny_config),
                     "--out", str(out)]) == EXIT_OK
        explore_dir = out / "explore"
        report = json.loads((explore_dir / "exploration.json").read_text())
        assert report["class_balance"]["attack"] == 488
        assert report["class_balance"]["minority_percent"] == 3.77
        assert (explore_dir / "correlation_matrix.csv").exists()
        assert (explore_dir / "rolling_std_top_features.csv").exists()

        assert main(["train", "--config", str(tiny_config),
                     "--models", "forest,gbt", "--no-ensembles",
                     "--out", str(out)]) == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["split"]["train_size"] == 10350
        assert (out / "model_forest.json").exists()
        assert (out / "model_gbt.json").exists()

        assert main(["evaluate", "--config", str(tiny_config),
                     "--out", str(out), "--sweep"]) == EXIT_OK
        table = (out / "comparison.txt").read_text()
        assert "forest" in table and "gbt" in table
        report = json.loads((out / "report_gbt.json").read_text())
        assert set(report["confusion"]) == {"tn", "fp", "fn", "tp", "threshold"}
        assert len(report["threshold_sweep"]) == 9
        assert report["in_sample"] is False

        assert main(["explain", "--config", str(tiny_config), "--out", str(out),
                     "--model-file", str(out / "model_gbt.json")]) == EXIT_OK
        att = json.loads((out / "attributions_gbt.json").read_text())
        assert len(att["global_mean_abs_attribution"]) == 93
        assert att["global_mean_abs_attribution"][0]["rank"] == 1
        assert (out / "attributions_gbt.txt").exists()
        capsys.readouterr()

    def test_evaluate_in_sample_flag(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["train", "--config", str(tiny_config), "--models", "forest",
                     "--no-ensembles", "--out", str(out)]) == EXIT_OK
        assert main(["evaluate", "--config", str(tiny_config), "--out", str(out),
                     "--in-sample"]) == EXIT_OK
        assert "[in-sample]" in (out / "comparison.txt").read_text()
        capsys.readouterr()

    def test_train_ensemble_requires_members(self, tmp_path, data_paths):
        cfg = {
            "data": {"paths": [str(p) for p in data_paths]},
            "features": {"rank_forest": {"n_trees": 5, "max_depth": 6}},
            "models": TINY_MODELS,
            "ensembles": [{"members": ["forest", "gbt"], "combiner": "average"}],
        }
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        code = main(["train", "--config", str(path), "--models", "forest",
                     "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG


class TestSynthData:
    def test_subcommand(self, tmp_path, capsys):
        assert main(["synth-data", "--out", str(tmp_path / "d"),
                     "--seed", "7"]) == EXIT_OK
        assert (tmp_path / "d" / "training_dataset_1.csv").exists()
        assert (tmp_path / "d" / "training_dataset_2.csv").exists()
        capsys.readouterr()


class TestReproducibility:
    def test_same_seed_byte_identical_outputs(self, tiny_config, tmp_path,
                                              monkeypatch, capsys):
        """Two full train+evaluate runs with one root seed must agree byte
        for byte in their manifests and reports."""
        outputs = {}
        for label in ("one", "two"):
            workdir = tmp_path / label
            workdir.mkdir()
            monkeypatch.chdir(workdir)
            assert main(["train", "--config", str(tiny_config),
                         "--models", "forest,gbt", "--no-ensembles",
                         "--out", "run"]) == EXIT_OK
            assert main(["evaluate", "--config", str(tiny_config),
                         "--out", "run"]) == EXIT_OK
            outputs[label] = {
                p.name: p.read_bytes()
                for p in sorted((workdir / "run").iterdir())
            }
        capsys.readouterr()
        assert outputs["one"].keys() == outputs["two"].keys()
        for name in outputs["one"]:
            assert outputs["one"][name] == outputs["two"][name], name

    def test_seed_changes_models(self, tiny_config, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        for out, seed in ((a, "1"), (b, "2")):
            assert main(["train", "--config", str(tiny_config),
                         "--models", "forest", "--no-ensembles",
                         "--out", str(out), "--seed", seed]) == EXIT_OK
        capsys.readouterr()
        assert (a / "model_forest.json").read_bytes() != \
            (b / "model_forest.json").read_bytes()
