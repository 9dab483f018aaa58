import json

import numpy as np
import pytest

from caspian.cli import main
from caspian.data import load_dataset


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSynth:
    def test_generates_loadable_dataset(self, tmp_path, capsys):
        out = tmp_path / "ds"
        code, stdout, _ = run_cli(
            capsys, "synth", "--d-x", "4", "--locations", "30", "--height", "32",
            "--width", "32", "--scenarios", "10", "--seed", "5", "--out", str(out),
        )
        assert code == 0
        manifest = json.loads(stdout)
        assert manifest["d_x"] == 4
        ds = load_dataset(out)
        assert len(ds.pairs) == 10


class TestAblate:
    def write_config(self, tmp_path):
        cfg = {"model": {"H": 1024, "W": 1024, "F": 72, "K": 4, "C": 34, "M": 8, "w": 4}}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_gamma_count(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        code, stdout, _ = run_cli(capsys, "ablate", "--variant", "gamma", "--config", str(cfg))
        assert code == 0
        body = json.loads(stdout)
        assert body["variant"] == "gamma"
        assert body["parameter_count"] == 183536

    def test_unknown_variant_exits_2(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        with pytest.raises(SystemExit) as exc:
            run_cli(capsys, "ablate", "--variant", "delta", "--config", str(cfg))
        assert exc.value.code == 2


class TestPredict:
    def test_depths_json(self, desk_dataset_dir, desk_checkpoint_dir, capsys):
        code, stdout, _ = run_cli(
            capsys, "predict", "--model", str(desk_checkpoint_dir),
            "--data", str(desk_dataset_dir), "--scenario", "10101",
        )
        assert code == 0
        body = json.loads(stdout)
        assert len(body["depths"]) == 60
        assert all(d >= 0 for d in body["depths"])

    def test_length_mismatch_exits_2(self, desk_dataset_dir, desk_checkpoint_dir, capsys):
        code, _, stderr = run_cli(
            capsys, "predict", "--model", str(desk_checkpoint_dir),
            "--data", str(desk_dataset_dir), "--scenario", "1",
        )
        assert code == 2
        assert "bits" in stderr

    def test_grid_out(self, desk_dataset_dir, desk_checkpoint_dir, tmp_path, capsys):
        grid_path = tmp_path / "pred.grid"
        code, _, _ = run_cli(
            capsys, "predict", "--model", str(desk_checkpoint_dir),
            "--data", str(desk_dataset_dir), "--scenario", "00000",
            "--grid-out", str(grid_path),
        )
        assert code == 0
        from caspian.gridcodec import read_grid

        grid, d_y = read_grid(grid_path.read_bytes())
        assert grid.shape == (32, 32) and d_y == 60


class TestBaselineCommand:
    def test_naive_fit_and_predict(self, desk_dataset_dir, tmp_path, capsys):
        artifact = tmp_path / "naive_model"
        code, stdout, _ = run_cli(
            capsys, "baseline", "fit", "--method", "naive", "--data", str(desk_dataset_dir),
            "--out", str(artifact),
        )
        assert code == 0
        assert json.loads(stdout)["global_mean"] > 0
        code, stdout, _ = run_cli(
            capsys, "baseline", "predict", "--model", str(artifact),
            "--data", str(desk_dataset_dir), "--scenario", "11111",
        )
        assert code == 0
        body = json.loads(stdout)
        assert body["method"] == "naive"
        assert np.allclose(body["depths"], 0.0)

    def test_linear_with_split_metrics(self, desk_dataset_dir, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"split": {"train": 14, "val": 3, "test": 3, "seed": 1}}))
        code, stdout, _ = run_cli(
            capsys, "baseline", "fit", "--method", "linear", "--data", str(desk_dataset_dir),
            "--config", str(cfg),
        )
        assert code == 0
        body = json.loads(stdout)
        assert "test_metrics" in body
        assert body["test_metrics"]["n_samples"] == 3

    def test_lasso_artifact_roundtrip(self, desk_dataset_dir, tmp_path, capsys):
        artifact = tmp_path / "lasso_model"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"baseline": {"lasso_lambda": 1e-3}}))
        code, _, _ = run_cli(
            capsys, "baseline", "fit", "--method", "lasso", "--data", str(desk_dataset_dir),
            "--config", str(cfg), "--out", str(artifact),
        )
        assert code == 0
        assert (artifact / "manifest.json").exists()
        assert (artifact / "tensors.bin").exists()
        code, stdout, _ = run_cli(
            capsys, "baseline", "predict", "--model", str(artifact),
            "--data", str(desk_dataset_dir), "--scenario", "10101",
        )
        assert code == 0
        depths = json.loads(stdout)["depths"]
        assert len(depths) == 60
        assert all(d >= 0 for d in depths)


class TestTrainEvaluateCommands:
    def test_train_then_evaluate(self, desk_dataset_dir, tmp_path, capsys):
        cfg_path = tmp_path / "train_cfg.json"
        cfg_path.write_text(json.dumps({
            "model": {"H": 32, "W": 32, "F": 8, "K": 2, "C": 2, "M": 1, "w": 2},
            "train": {"lr_peak": 3e-3, "warmup_epochs": 1, "main_epochs": 2,
                      "plateau_patience": 5, "early_stop_patience": 5, "batch_size": 2},
            "augment": {"n_patches": 1, "patch_size": 8, "m": 1, "seed": 0, "apply_to_val": False},
            "split": {"train": 14, "val": 3, "test": 3, "seed": 2},
        }))
        out = tmp_path / "run"
        code, stdout, _ = run_cli(
            capsys, "train", "--data", str(desk_dataset_dir), "--config", str(cfg_path),
            "--out", str(out), "--seed", "1",
        )
        assert code == 0
        assert (out / "checkpoint" / "manifest.json").exists()
        assert (out / "history.json").exists()
        assert (out / "metrics_val.json").exists()
        history = json.loads((out / "history.json").read_text())
        assert len(history["epochs"]) == 3

        code, stdout, _ = run_cli(
            capsys, "evaluate", "--model", str(out / "checkpoint"), "--data", str(desk_dataset_dir),
            "--config", str(cfg_path), "--split", "test",
        )
        assert code == 0
        report = json.loads(stdout)
        assert report["n_samples"] == 3
        assert report["amae"] >= 0


class TestUsageErrors:
    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_help_available(self, capsys):
        for cmd in ("synth", "train", "evaluate", "predict", "ablate", "baseline", "serve"):
            with pytest.raises(SystemExit) as exc:
                main([cmd, "--help"])
            assert exc.value.code == 0
