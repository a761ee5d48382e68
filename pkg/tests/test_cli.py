import json

import pytest

from csilab.cli import main

from .test_config import TINY_YAML


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One tiny gen+train pipeline shared by the read-only CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "exp.yaml"
    config.write_text(TINY_YAML)
    assert main(["gen", "--config", str(config), "--out", str(root / "ds"), "--seed", "0"]) == 0
    assert (
        main(
            [
                "train",
                "--dataset", str(root / "ds"),
                "--out", str(root / "run"),
                "--epochs", "2",
                "--batch-size", "4",
                "--fc-units", "8",
                "--seed", "0",
            ]
        )
        == 0
    )
    return root, config


class TestGen:
    def test_artifacts(self, workspace):
        root, _ = workspace
        assert (root / "ds" / "tensors.bin").exists()
        manifest = json.loads((root / "ds" / "manifest.json").read_text())
        assert manifest["class_names"] == ["slow", "fast", "wiggle"]
        assert len(manifest["labels"]) == 12
        run = json.loads((root / "ds" / "run_manifest.json").read_text())
        assert run["command"] == "gen"
        assert run["seed"] == 0
        assert "config" in run and "tool_version" in run

    def test_reruns_are_byte_identical(self, workspace, tmp_path):
        root, config = workspace
        assert main(["gen", "--config", str(config), "--out", str(tmp_path / "ds2"), "--seed", "0"]) == 0
        for name in ("tensors.bin", "manifest.json"):
            assert (tmp_path / "ds2" / name).read_bytes() == (root / "ds" / name).read_bytes()

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["gen", "--config", str(tmp_path / "no.yaml"), "--out", str(tmp_path / "d")]) == 2


class TestTrain:
    def test_artifacts(self, workspace):
        root, _ = workspace
        history = json.loads((root / "run" / "history.json").read_text())
        assert len(history["train_loss"]) == 2
        assert (root / "run" / "checkpoint" / "params.bin").exists()
        run = json.loads((root / "run" / "run_manifest.json").read_text())
        assert run["config"]["attention"] == "off"
        assert run["config"]["precision"] == "single"

    def test_attention_variant_trains(self, workspace, tmp_path):
        root, _ = workspace
        rc = main(
            [
                "train",
                "--dataset", str(root / "ds"),
                "--out", str(tmp_path / "attn"),
                "--epochs", "1",
                "--batch-size", "4",
                "--fc-units", "8",
                "--attention", "both",
            ]
        )
        assert rc == 0
        assert (tmp_path / "attn" / "checkpoint" / "params.bin").exists()

    def test_missing_dataset_exits_2(self, tmp_path):
        assert main(["train", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 2

    def test_diverging_run_exits_3(self, workspace, tmp_path):
        root, _ = workspace
        rc = main(
            [
                "train",
                "--dataset", str(root / "ds"),
                "--out", str(tmp_path / "boom"),
                "--epochs", "3",
                "--batch-size", "4",
                "--fc-units", "8",
                "--lr", "1e18",
            ]
        )
        assert rc == 3


class TestEvalAndBaseline:
    def test_eval_writes_result_and_report(self, workspace, tmp_path):
        root, _ = workspace
        rc = main(
            [
                "eval",
                "--checkpoint", str(root / "run" / "checkpoint"),
                "--dataset", str(root / "ds"),
                "--out", str(tmp_path / "ev"),
            ]
        )
        assert rc == 0
        result = json.loads((tmp_path / "ev" / "result.json").read_text())
        assert result["method"] == "c3d"
        assert 0.0 <= result["accuracy"] <= 1.0
        assert (tmp_path / "ev" / "confusion_c3d.txt").exists()
        assert (tmp_path / "ev" / "metrics_c3d.tsv").exists()

    def test_baseline(self, workspace, tmp_path):
        root, _ = workspace
        rc = main(
            ["baseline", "--dataset", str(root / "ds"), "--out", str(tmp_path / "bl"), "--pca-dim", "4", "--k", "3"]
        )
        assert rc == 0
        result = json.loads((tmp_path / "bl" / "result.json").read_text())
        assert result["method"] == "pca_knn"

    def test_report_combines_results(self, workspace, tmp_path):
        root, _ = workspace
        assert (
            main(
                [
                    "eval",
                    "--checkpoint", str(root / "run" / "checkpoint"),
                    "--dataset", str(root / "ds"),
                    "--out", str(tmp_path / "ev"),
                ]
            )
            == 0
        )
        assert (
            main(
                ["baseline", "--dataset", str(root / "ds"), "--out", str(tmp_path / "bl"), "--pca-dim", "4"]
            )
            == 0
        )
        rc = main(
            [
                "report",
                str(tmp_path / "ev" / "result.json"),
                str(tmp_path / "bl" / "result.json"),
                "--history", f"c3d={root / 'run' / 'history.json'}",
                "--out", str(tmp_path / "rep"),
            ]
        )
        assert rc == 0
        summary = (tmp_path / "rep" / "summary.txt").read_text()
        assert "c3d" in summary and "pca_knn" in summary
        assert (tmp_path / "rep" / "curves_c3d.tsv").exists()


class TestGradcheckCommand:
    def test_passes(self, capsys):
        assert main(["gradcheck", "--scale", "tiny"]) == 0
        out = capsys.readouterr().out
        assert "network_plain" in out and "PASS" in out and "FAIL" not in out

    def test_corrupt_negative_control_exits_4(self, capsys):
        assert main(["gradcheck", "--scale", "tiny", "--corrupt", "conv3d"]) == 4
        assert "FAIL" in capsys.readouterr().out


class TestOutRoot:
    def test_relative_paths_resolve_under_env_root(self, workspace, tmp_path, monkeypatch):
        _, config = workspace
        monkeypatch.setenv("CSILAB_OUT_ROOT", str(tmp_path))
        assert main(["gen", "--config", str(config), "--out", "nested/ds", "--seed", "1"]) == 0
        assert (tmp_path / "nested" / "ds" / "tensors.bin").exists()
