import math

import pytest

from mmwave_nc.campaigns import (
    map_units,
    run_bounds_figures,
    run_downlink_campaign,
    run_phi_validation,
    run_uplink_campaign,
)
from mmwave_nc.errors import InfeasibleBoundError
from mmwave_nc.models import ExperimentConfig
from mmwave_nc.results import read_csv
from mmwave_nc.shared import Settings
from mmwave_nc.types import CDF_LEVELS, UNDEFINED

from .conftest import small_config


def _square(x: int) -> int:
    return x * x


@pytest.fixture
def serial():
    return Settings(workers=1)


def test_map_units_keeps_order():
    assert map_units(_square, [3, 1, 2], 1) == [9, 1, 4]
    assert map_units(_square, [3, 1, 2, 5], 2) == [9, 1, 4, 25]


# Bounds


def test_bounds_refuses_undefined_cells(tmp_path, serial):
    with pytest.raises(InfeasibleBoundError):
        run_bounds_figures(small_config(), tmp_path, settings=serial)
    assert list(tmp_path.iterdir()) == []


def test_bounds_writes_undefined_marker(tmp_path, serial):
    result = run_bounds_figures(small_config(), tmp_path, allow_undefined=True, settings=serial)
    assert result.undefined_cells == 1
    assert [f.name for f in result.files] == ["downlink_bounds.csv", "backhaul_bounds.csv"]

    _, rows = read_csv(tmp_path / "backhaul_bounds.csv")
    by_p = {float(r["p"]): r for r in rows}
    assert by_p[0.3]["bkeff_nc_lb"] == UNDEFINED
    assert by_p[0.3]["beta_nc"] == UNDEFINED
    assert float(by_p[0.1]["bkeff_nc_lb"]) > 0.9
    assert float(by_p[0.0]["bkeff_forwarding"]) == pytest.approx(0.25)
    # simulated columns are present for every p below one
    assert all(r["sim_bkeff_nc"] for r in rows)


def test_bounds_defined_grid_needs_no_flag(tmp_path, serial):
    config = small_config()
    config = config.model_copy(update={"bounds": config.bounds.model_copy(update={"p_grid": [0.0, 0.1]})})
    result = run_bounds_figures(config, tmp_path, settings=serial)
    assert result.undefined_cells == 0


def test_downlink_bound_rows(tmp_path, serial):
    run_bounds_figures(small_config(), tmp_path, allow_undefined=True, settings=serial)
    _, rows = read_csv(tmp_path / "downlink_bounds.csv")
    # 2 erasure pairs x 4 relay counts x 4 scenarios
    assert len(rows) == 32
    for row in rows:
        assert float(row["eff_nc_lb"]) >= float(row["eff_forwarding_ub"]) - 1e-12
        assert float(row["eff_forwarding"]) <= float(row["eff_forwarding_ub"]) + 1e-12


def test_bounds_metadata(tmp_path, serial):
    config = small_config()
    run_bounds_figures(config, tmp_path, allow_undefined=True, settings=serial)
    metadata, _ = read_csv(tmp_path / "backhaul_bounds.csv")
    assert "# campaign: bounds" in metadata
    assert "# seed: 7" in metadata
    assert f"# config_sha256: {config.config_hash()}" in metadata
    assert any(line.startswith("# field: GF(1024)") for line in metadata)


# Downlink


def test_downlink_outputs(tmp_path, serial):
    result = run_downlink_campaign(small_config(), tmp_path, settings=serial)
    assert [f.name for f in result.files] == ["downlink_devices.csv", "downlink_cdf.csv", "downlink_summary.csv"]

    _, devices = read_csv(tmp_path / "downlink_devices.csv")
    # 12 devices x 2 spacings x 2 schemes
    assert len(devices) == 48
    assert {r["scheme"] for r in devices} == {"forwarding", "nc"}
    for row in devices:
        if int(row["counted_spans"]):
            assert 0.0 < float(row["efficiency"]) <= 1.0

    _, cdf = read_csv(tmp_path / "downlink_cdf.csv")
    assert len(cdf) == 2 * 2 * 2 * len(CDF_LEVELS)
    assert len(result.summary_rows) == 2


def test_downlink_deterministic(tmp_path, serial):
    config = small_config()
    run_downlink_campaign(config, tmp_path / "a", settings=serial)
    run_downlink_campaign(config, tmp_path / "b", settings=serial)
    for name in ("downlink_devices.csv", "downlink_cdf.csv", "downlink_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_downlink_independent_of_workers(tmp_path, serial):
    config = small_config(scenario=small_config().scenario.model_copy(update={"n_devices": 120}))
    run_downlink_campaign(config, tmp_path / "serial", settings=serial)
    run_downlink_campaign(config, tmp_path / "pool", settings=Settings(workers=2))
    name = "downlink_devices.csv"
    assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "pool" / name).read_bytes()


def test_downlink_seed_changes_output(tmp_path, serial):
    run_downlink_campaign(small_config(seed=1), tmp_path / "a", settings=serial)
    run_downlink_campaign(small_config(seed=2), tmp_path / "b", settings=serial)
    _, a = read_csv(tmp_path / "a" / "downlink_devices.csv")
    _, b = read_csv(tmp_path / "b" / "downlink_devices.csv")
    assert a != b


def test_downlink_replications(tmp_path, serial):
    run_downlink_campaign(small_config(replications=2), tmp_path, settings=serial)
    _, devices = read_csv(tmp_path / "downlink_devices.csv")
    assert len(devices) == 96
    assert {r["replication"] for r in devices} == {"0", "1"}


# Uplink


def test_uplink_outputs(tmp_path, serial):
    result = run_uplink_campaign(small_config(), tmp_path, settings=serial)
    assert [f.name for f in result.files] == ["uplink_groups.csv", "uplink_cdf.csv", "uplink_summary.csv"]

    _, groups = read_csv(tmp_path / "uplink_groups.csv")
    # per spacing: 6 groups of 2 plus 3 groups of 4, two schemes each
    assert len(groups) == 2 * (6 + 3) * 2
    for row in groups:
        value = float(row["backhaul_efficiency"])
        if not math.isnan(value):
            assert value > 0.0
            if row["scheme"] == "nc":
                assert value <= 1.0 + 1e-12
    assert len(result.summary_rows) == 4


def test_uplink_deterministic(tmp_path, serial):
    config = small_config()
    run_uplink_campaign(config, tmp_path / "a", settings=serial)
    run_uplink_campaign(config, tmp_path / "b", settings=serial)
    for name in ("uplink_groups.csv", "uplink_cdf.csv", "uplink_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# Singularity validation


def test_phi_validation(tmp_path, serial):
    result = run_phi_validation(small_config(), tmp_path, settings=serial)
    _, rows = read_csv(result.files[0])
    assert len(rows) == 4
    cells = {(int(r["q"]), float(r["p"])): r for r in rows}

    # GF(2), z=2 is small enough to enumerate
    assert float(cells[(2, 0.5)]["phi_exact"]) == 0.625
    assert cells[(16, 0.5)]["phi_exact"] == ""
    # the all-ones matrix is singular and the bound is not below one
    assert float(cells[(2, 0.0)]["phi_hat"]) == 1.0
    assert cells[(2, 0.0)]["feasible"] == "false"
    assert cells[(2, 0.0)]["within_bound"] == ""
    for row in rows:
        assert float(row["phi_hat"]) <= float(row["mean_defect"]) + 1e-12


def test_phi_validation_deterministic(tmp_path, serial):
    config = small_config()
    first = run_phi_validation(config, tmp_path / "a", settings=serial).files[0]
    second = run_phi_validation(config, tmp_path / "b", settings=serial).files[0]
    assert first.read_bytes() == second.read_bytes()


# Shipped defaults at desk scale


@pytest.fixture(scope="module")
def desk_config():
    config = ExperimentConfig()
    return config.model_copy(
        update={
            "scenario": config.scenario.model_copy(update={"n_devices": 500}),
            "timespan": config.timespan.model_copy(update={"spans": 100}),
        }
    )


@pytest.mark.slow
def test_downlink_gain_grows_with_relay_density(desk_config, tmp_path):
    result = run_downlink_campaign(desk_config, tmp_path, settings=Settings(workers=4))
    gain = {row[0]: row[5] for row in result.summary_rows}
    assert gain[30.0] > gain[60.0] >= gain[80.0] > 0.0


@pytest.mark.slow
def test_uplink_gain_grows_with_code_length(desk_config, tmp_path):
    result = run_uplink_campaign(desk_config, tmp_path, settings=Settings(workers=4))
    gain = {(row[0], row[1]): row[5] for row in result.summary_rows}
    for spacing in desk_config.relay_spacings:
        assert gain[(spacing, 8)] > gain[(spacing, 4)] >= 0.0
