"""
Command line tests: exit codes, config handling and reproducible output
"""

import pytest
from typer.testing import CliRunner

from mmwave_nc.cli import EXIT_CONFIG, EXIT_INFEASIBLE, app
from mmwave_nc.models import ExperimentConfig
from mmwave_nc.results import read_csv
from mmwave_nc.types import UNDEFINED

from .conftest import small_config

runner = CliRunner()


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    small_config().dump_template(path)
    return path


def test_help():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for command in ("bounds", "downlink", "uplink", "phi", "init", "info"):
        assert command in result.output


def test_bounds_exit_code_for_undefined_cells(config_file, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(app, ["bounds", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == EXIT_INFEASIBLE
    assert not out.exists()


def test_bounds_allow_undefined(config_file, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(app, ["bounds", "--config", str(config_file), "--out", str(out), "--allow-undefined"])
    assert result.exit_code == 0, result.output
    _, rows = read_csv(out / "backhaul_bounds.csv")
    assert [r["bkeff_nc_lb"] == UNDEFINED for r in rows] == [False, False, True]


def test_missing_config(tmp_path):
    result = runner.invoke(app, ["downlink", "--config", str(tmp_path / "nope.json")])
    assert result.exit_code == EXIT_CONFIG


def test_invalid_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"timespan": {"k": 0}}')
    result = runner.invoke(app, ["uplink", "--config", str(path)])
    assert result.exit_code == EXIT_CONFIG


def test_malformed_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    result = runner.invoke(app, ["phi", "--config", str(path)])
    assert result.exit_code == EXIT_CONFIG


def test_seed_override_is_recorded(config_file, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(app, ["phi", "--config", str(config_file), "--out", str(out), "--seed", "123"])
    assert result.exit_code == 0, result.output
    metadata, _ = read_csv(out / "phi_validation.csv")
    assert "# seed: 123" in metadata


def test_downlink_reruns_are_identical(config_file, tmp_path):
    for name in ("a", "b"):
        result = runner.invoke(app, ["downlink", "--config", str(config_file), "--out", str(tmp_path / name)])
        assert result.exit_code == 0, result.output
    for name in ("downlink_devices.csv", "downlink_cdf.csv", "downlink_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_uplink_command(config_file, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(app, ["uplink", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "uplink_summary.csv").exists()


def test_init_writes_template(tmp_path):
    path = tmp_path / "config.json"
    result = runner.invoke(app, ["init", str(path), "--no-env"])
    assert result.exit_code == 0, result.output
    assert ExperimentConfig.load(path) == ExperimentConfig()


def test_init_refuses_overwrite(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{}")
    assert runner.invoke(app, ["init", str(path), "--no-env"]).exit_code == EXIT_CONFIG
    assert runner.invoke(app, ["init", str(path), "--no-env", "--force"]).exit_code == 0
    assert ExperimentConfig.load(path).seed == 0


def test_info(config_file):
    result = runner.invoke(app, ["info", "--config", str(config_file)])
    assert result.exit_code == 0, result.output
    assert "GF(1024)" in result.output


def test_log_level_option():
    assert runner.invoke(app, ["--log-level", "debug", "info"]).exit_code == 0
    assert runner.invoke(app, ["--log-level", "verbose", "info"]).exit_code == 2
