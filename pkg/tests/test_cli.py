"""Tests for the flatcalc command line."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from src.cli import main
from src.core.types import ExperimentName

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

HARDY_CONFIG = """
[experiment]
name = hardy

[norm]
k = 1
p = 2
gamma = 0

[grid]
dim = 1
x_max = 40
x1_min = 1e-4
max_width = 0.02

[run]
seed = 3
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def hardy_config(tmp_path):
    path = tmp_path / "hardy.ini"
    path.write_text(HARDY_CONFIG, encoding="utf-8")
    return path


def test_no_subcommand_lists_experiments(runner):
    result = runner.invoke(main, [])
    assert result.exit_code == 0
    assert "Experiments:" in result.output
    for name in ExperimentName:
        assert f"  {name.value}" in result.output


def test_list_is_deterministic(runner):
    first = runner.invoke(main, ["list"])
    second = runner.invoke(main, ["list"])
    assert first.exit_code == 0
    assert first.output == second.output
    assert "sections: [experiment], [norm]" in first.output


def test_list_names_the_result_behind_each_experiment(runner):
    result = runner.invoke(main, ["list"])
    blocks = result.output.split("\n")
    anchors = [line for line in blocks if line.startswith("  anchor:   ")]
    assert len(anchors) == len(ExperimentName)
    assert all(line.removeprefix("  anchor:   ").strip() for line in anchors)
    assert "  anchor:   weighted Hardy inequality, constant p/|p−1−γ|" in blocks


def test_run_writes_tables_and_manifest(runner, hardy_config, tmp_path):
    out = tmp_path / "results"
    result = runner.invoke(main, ["run", str(hardy_config), "--output-dir", str(out)])

    assert result.exit_code == 0, result.output
    assert (out / "hardy.csv").exists()
    assert (out / "hardy_embedding.csv").exists()

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["experiment"] == "hardy"
    assert manifest["seed"] == 3
    assert manifest["threads"] == 1
    assert manifest["files"] == ["hardy.csv", "hardy_embedding.csv"]
    assert manifest["summary"]["passed"] is True
    assert manifest["config"]["norm"]["k"] == 1


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_config_runs_end_to_end(runner, path, tmp_path):
    out = tmp_path / path.stem
    result = runner.invoke(main, ["run", str(path), "--output-dir", str(out)])

    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["experiment"] == path.stem
    assert manifest["files"]
    for name in manifest["files"]:
        assert (out / name).exists()


def test_run_overrides_seed(runner, hardy_config, tmp_path):
    out = tmp_path / "results"
    result = runner.invoke(main, ["run", str(hardy_config), "--output-dir", str(out), "--seed", "11"])

    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 11


def test_hardy_csv_is_deterministic(runner, hardy_config, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    runner.invoke(main, ["run", str(hardy_config), "--output-dir", str(first)])
    runner.invoke(main, ["run", str(hardy_config), "--output-dir", str(second)])
    assert (first / "hardy.csv").read_bytes() == (second / "hardy.csv").read_bytes()


def test_run_missing_field_exits_2(runner, tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(HARDY_CONFIG.replace("gamma = 0", ""), encoding="utf-8")
    result = runner.invoke(main, ["run", str(path), "--output-dir", str(tmp_path / "out")])

    assert result.exit_code == 2
    assert "VALIDATION_ERROR" in result.output
    assert not (tmp_path / "out").exists()


def test_run_excluded_weight_exits_2(runner, tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(HARDY_CONFIG.replace("gamma = 0", "gamma = 1"), encoding="utf-8")
    result = runner.invoke(main, ["run", str(path)])

    assert result.exit_code == 2
    assert "EXCLUDED_WEIGHT" in result.output


def test_run_missing_file_exits_2(runner, tmp_path):
    result = runner.invoke(main, ["run", str(tmp_path / "absent.ini")])
    assert result.exit_code == 2


def test_run_rejects_zero_threads(runner, hardy_config):
    result = runner.invoke(main, ["run", str(hardy_config), "--threads", "0"])
    assert result.exit_code == 2


def test_schema(runner):
    result = runner.invoke(main, ["schema", "hardy"])
    assert result.exit_code == 0
    assert "Schema: hardy" in result.output
    assert "norm" in result.output


def test_schema_rejects_unknown_experiment(runner):
    result = runner.invoke(main, ["schema", "spectral-gap"])
    assert result.exit_code != 0


def test_doctor(runner):
    result = runner.invoke(main, ["doctor"])
    assert result.exit_code == 0
    assert "flatcalc System Check" in result.output
    assert "Core Dependencies" in result.output
    assert "SuperLU complex factorization" in result.output
