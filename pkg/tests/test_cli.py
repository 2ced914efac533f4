# tests/test_cli.py
import json
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from fracshape import __version__
from fracshape.experiments.audit import CHECKS
from fracshape.main import cli
from fracshape.schemas.experiment import ExperimentConfig

DOCS = Path(__file__).resolve().parents[1] / "docs"

TWO_BALL = {
    "kind": "two-ball",
    "grid": {"dim": 1, "half_width": 32.0, "resolution": 256},
    "s": 0.5,
    "two_ball": {"total_volume": 8.0, "distances": [4.0, 8.0, 16.0]},
}


@pytest.fixture
def runner():
    return CliRunner()


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_invalid_s_exits_with_two(runner, write_config):
    path = write_config({**TWO_BALL, "s": 1.5})
    result = runner.invoke(cli, ["two-ball", "--config", str(path)])
    assert result.exit_code == 2
    assert "invalid config: s:" in result.output


def test_command_must_match_the_kind(runner, write_config):
    path = write_config(TWO_BALL)
    result = runner.invoke(cli, ["eig", "--config", str(path)])
    assert result.exit_code == 2
    assert "two-ball" in result.output


def test_two_ball_command(runner, write_config, tmp_path):
    out = tmp_path / "two"
    result = runner.invoke(cli, ["two-ball", "--config", str(write_config(TWO_BALL)), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert len(pd.read_csv(out / "two_ball.csv")) == 3
    assert (out / "manifest.json").exists()


def test_classify_command_with_seed(runner, write_config, tmp_path):
    path = write_config({"kind": "classify", "seeds": [4, 5], "classify": {"generator": "translating_bump"}})
    out = tmp_path / "cls"
    result = runner.invoke(cli, ["classify", "--config", str(path), "--out", str(out), "--seed", "0"])
    assert result.exit_code == 0, result.output
    payload = json.loads((out / "classify.json").read_text())
    assert payload["verdict"] == "compactness"
    assert [run["seed"] for run in payload["runs"]] == [0]


def test_parameter_failure_exits_with_two(runner, write_config, tmp_path):
    path = write_config(
        {
            "kind": "minimize",
            "grid": {"dim": 1, "half_width": 8.0, "resolution": 128},
            "functional": {"expression": "lambda1"},
            "minimize": {"c": 2.05, "iterations": 10},
        }
    )
    result = runner.invoke(cli, ["minimize", "--config", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "c:" in result.output
    assert (tmp_path / "error.json").exists()


def test_empty_domain_exits_with_one(runner, write_config, tmp_path):
    path = write_config(
        {
            "kind": "lieb",
            "grid": {"dim": 1, "half_width": 1.0, "resolution": 32},
            "lieb": {"mask_a": {"cells": "32"}, "mask_b": {"cells": "0,32"}},
        }
    )
    result = runner.invoke(cli, ["lieb", "--config", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "lieb failed" in result.output
    assert json.loads((tmp_path / "error.json").read_text())["error"]["kind"] == "domain-empty"


def test_audit_lists_checks(runner):
    result = runner.invoke(cli, ["audit", "--list-checks"])
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert len(lines) == len(CHECKS)
    assert any("stiffness-symmetric" in line for line in lines)


def test_audit_needs_a_config(runner):
    result = runner.invoke(cli, ["audit"])
    assert result.exit_code == 2


def test_schema_matches_the_documented_one(runner, tmp_path):
    target = tmp_path / "schema.json"
    result = runner.invoke(cli, ["schema", "--out", str(target)])
    assert result.exit_code == 0
    generated = json.loads(target.read_text())
    assert generated == ExperimentConfig.model_json_schema()
    documented = json.loads((DOCS / "experiment_config.schema.json").read_text())
    assert set(documented["properties"]) == set(ExperimentConfig.model_fields)


def test_documented_configs_validate():
    for path in sorted((DOCS / "configs").glob("*.json")):
        ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))


def test_batch_command(runner, write_config, tmp_path):
    grid = write_config({"kind": "grid", "grid": {"dim": 1, "half_width": 1.0, "resolution": 32}}, "grid.json")
    classify = write_config({"kind": "classify", "classify": {"generator": "separating_pair"}}, "classify.json")
    out = tmp_path / "batch"
    result = runner.invoke(cli, ["batch", "--config", str(grid), "--config", str(classify), "--out", str(out)])
    assert result.exit_code == 0, result.output
    saved = json.loads((out / "batch.json").read_text())
    assert [e["status"] for e in saved["experiments"]] == ["ok", "ok"]
    assert (out / "001_classify" / "classify.json").exists()
