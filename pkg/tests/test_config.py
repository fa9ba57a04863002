"""Run-configuration validation, resolution rules, and file writers."""

import json

import numpy as np
import pytest

from mqcsim.config import (
    ConfigError,
    PACKING_CONSTANT,
    RunConfig,
    worker_count,
    write_series,
    write_sidecar,
    write_table,
)
from mqcsim.spectra import dipole_from_gamma, pulse_area_from_energy
from scipy.constants import c as C_LIGHT


def test_defaults_resolve_to_reference_parameters():
    config = RunConfig()
    assert config.resolved_theta() == pytest.approx(0.14 * np.pi)
    assert config.resolved_xi_bar() == pytest.approx(80.0)
    assert config.average_mode == "full"
    grid = config.detunings()
    assert len(grid) == config.detuning_count
    assert grid[0] == -config.detuning_half_range
    assert grid[-1] == config.detuning_half_range
    assert np.allclose(grid, -grid[::-1])


def test_theta_and_energy_budget_are_mutually_exclusive():
    with pytest.raises(ConfigError):
        RunConfig(theta=0.1, pulse_energy=1e-9, pulse_duration=1e-13,
                  beam_cross_section=1e-8)
    with pytest.raises(ConfigError):
        RunConfig(pulse_energy=1e-9)   # incomplete triplet
    config = RunConfig(pulse_energy=1e-9, pulse_duration=1e-13,
                       beam_cross_section=1e-8)
    omega0 = 2.0 * np.pi * C_LIGHT / config.wavelength
    expected = pulse_area_from_energy(
        1e-9, 1e-13, 1e-8, dipole_from_gamma(config.gamma, omega0))
    assert config.resolved_theta() == pytest.approx(expected)


def test_separation_sources_resolve_and_conflict():
    with pytest.raises(ConfigError):
        RunConfig(xi_bar=80.0, mean_separation=1e-5)
    direct = RunConfig(xi_bar=120.0)
    assert direct.resolved_xi_bar() == 120.0
    metric = RunConfig(mean_separation=1e-5)
    assert metric.resolved_xi_bar() == pytest.approx(
        2.0 * np.pi / metric.wavelength * 1e-5)
    density = 1e14
    implied = PACKING_CONSTANT * density ** (-1.0 / 3.0)
    from_density = RunConfig(density=density)
    assert from_density.resolved_xi_bar() == pytest.approx(
        2.0 * np.pi / from_density.wavelength * implied)
    # a consistent explicit separation is accepted, an inconsistent
    # one is rejected at the one-percent level
    RunConfig(density=density, mean_separation=implied * 1.005)
    with pytest.raises(ConfigError):
        RunConfig(density=density, mean_separation=implied * 1.05)


@pytest.mark.parametrize("fields", [
    {"gamma": -1.0},
    {"wavelength": 0.0},
    {"density": -1e12},
    {"kappas": ()},
    {"kappas": (3,)},
    {"channels": ()},
    {"channels": ("diagonal",)},
    {"tensor_mode": "near"},
    {"detuning_half_range": 0.0},
    {"detuning_count": 2},
    {"mc_samples": 0},
    {"window": (92.8, 67.2)},
    {"window": (-1.0, 5.0)},
    {"oracle_directions": 0},
])
def test_invalid_fields_are_rejected(fields):
    with pytest.raises(ConfigError):
        RunConfig(**fields)


def test_from_sources_merges_file_and_overrides(tmp_path):
    config_file = tmp_path / "run.json"
    config_file.write_text(json.dumps({
        "theta": 0.3, "kappas": [1], "window": [50.0, 70.0],
        "detuning_count": 11}))
    config = RunConfig.from_sources(config_file, detuning_count=5,
                                    seed=None)
    assert config.theta == 0.3
    assert config.kappas == (1,)
    assert config.window == (50.0, 70.0)
    assert config.detuning_count == 5      # flag beats file
    assert config.seed == RunConfig().seed  # None leaves the default

    config_file.write_text(json.dumps({"not_a_field": 1}))
    with pytest.raises(ConfigError):
        RunConfig.from_sources(config_file)
    config_file.write_text("[]")
    with pytest.raises(ConfigError):
        RunConfig.from_sources(config_file)
    with pytest.raises(ConfigError):
        RunConfig.from_sources(tmp_path / "missing.json")


def test_metadata_is_json_serializable_and_complete():
    config = RunConfig(kappas=(2,))
    metadata = config.as_metadata()
    json.dumps(metadata)
    assert metadata["kappas"] == [2]
    assert metadata["version"]
    assert metadata["resolved_theta"] == pytest.approx(0.14 * np.pi)
    assert metadata["resolved_xi_bar"] == pytest.approx(80.0)


def test_worker_count_reads_environment(monkeypatch):
    monkeypatch.delenv("MQCSIM_WORKERS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("MQCSIM_WORKERS", "6")
    assert worker_count() == 6
    monkeypatch.setenv("MQCSIM_WORKERS", "zero")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.setenv("MQCSIM_WORKERS", "0")
    with pytest.raises(ConfigError):
        worker_count()


def test_write_table_is_byte_identical_and_parseable(tmp_path):
    columns = {"name": ["a", "b"], "value": [1.0 / 3.0, 2e-16]}
    metadata = {"seed": 7, "window": [67.2, 92.8]}
    first, second = tmp_path / "one.tsv", tmp_path / "two.tsv"
    write_table(first, columns, metadata)
    write_table(second, columns, metadata)
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    header = [line for line in lines if line.startswith("# ")]
    assert "# seed = 7" in header
    body = [line for line in lines if not line.startswith("# ")]
    assert body[0].split("\t") == ["name", "value"]
    # full double precision survives the round trip
    assert float(body[1].split("\t")[1]) == 1.0 / 3.0


def test_write_series_emits_error_columns_when_present(tmp_path):
    from mqcsim.spectra import SpectrumSeries
    series = SpectrumSeries(
        detunings=np.array([-1.0, 0.0, 1.0]),
        values=np.array([1 + 2j, 3 + 4j, 5 + 6j]),
        kappa=1, channel="parallel", direction="y",
        errors=np.array([0.1 + 0.2j, 0.1 + 0.2j, 0.1 + 0.2j]))
    path = tmp_path / "series.tsv"
    write_series(path, series, {"seed": 1})
    lines = [line for line in path.read_text().splitlines()
             if not line.startswith("# ")]
    assert lines[0].split("\t") == [
        "omega_detuning_over_gamma", "Re_S", "Im_S", "Re_err", "Im_err"]
    row = lines[2].split("\t")
    assert float(row[1]) == 3.0 and float(row[2]) == 4.0
    header = path.read_text()
    assert '# kappa = 1' in header
    assert '# channel = "parallel"' in header


def test_sidecar_carries_the_only_timestamp(tmp_path):
    path = tmp_path / "run.json"
    write_sidecar(path, {"config": {"seed": 3}})
    record = json.loads(path.read_text())
    assert "timestamp" in record
    assert record["config"]["seed"] == 3
