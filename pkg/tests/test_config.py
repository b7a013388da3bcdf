"""Tests for configuration loading and merging."""

import argparse
import json

import pytest

from deprec_mdp.config import TOML_AVAILABLE, Config


def namespace(**overrides) -> argparse.Namespace:
    values = {
        "config": None,
        "tol": None,
        "max_iterations": None,
        "digits": None,
        "workers": None,
        "log_level": None,
        "log_file": None,
    }
    values.update(overrides)
    return argparse.Namespace(**values)


def test_defaults():
    config = Config()
    assert config.tolerance == 1e-10
    assert config.output_digits == 10
    assert config.unichain_check_cap == 4096
    assert config.aperiodicity == 0.5


@pytest.mark.parametrize(
    "kwargs",
    [
        {"tolerance": 0.0},
        {"max_iterations": 0},
        {"aperiodicity": 1.0},
        {"restart_interval": -1},
        {"log_level": "LOUD"},
        {"log_file": "/nonexistent-dir/deprec.log"},
    ],
)
def test_invalid_values(kwargs):
    with pytest.raises(ValueError):
        Config(**kwargs)


def test_log_level_normalised():
    assert Config(log_level="debug").log_level == "DEBUG"


def test_nested_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"solver": {"tolerance": 1e-12}, "lp": {"pivot_tol": 1e-11}}))
    config = Config.from_file(str(path))
    assert config.tolerance == 1e-12
    assert config.pivot_tol == 1e-11
    assert config.max_iterations == 10_000_000


def test_flat_keys_and_unknown_keys(tmp_path, caplog):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"output_digits": 6, "colour": "blue"}))
    config = Config.from_file(str(path))
    assert config.output_digits == 6
    assert "colour" in caplog.text


@pytest.mark.skipif(not TOML_AVAILABLE, reason="no TOML parser installed")
def test_toml(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text("[sweep]\nworkers = 2\n\n[output]\ndigits = 8\n")
    config = Config.from_file(str(path))
    assert (config.sweep_workers, config.output_digits) == (2, 8)


def test_missing_and_unsupported(tmp_path):
    with pytest.raises(FileNotFoundError):
        Config.from_file(str(tmp_path / "absent.json"))
    path = tmp_path / "config.yaml"
    path.write_text("solver: {}\n")
    with pytest.raises(ValueError):
        Config.from_file(str(path))


def test_command_line_overrides_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"solver": {"tolerance": 1e-8}, "output": {"digits": 6}}))
    config = Config.from_args_and_file(namespace(config=str(path), digits=12))
    assert config.tolerance == 1e-8
    assert config.output_digits == 12
    assert config._config_source == "file+cli"


def test_overrides_are_validated():
    with pytest.raises(ValueError):
        Config.from_args_and_file(namespace(tol=-1.0))


def test_save_round_trip(tmp_path):
    path = tmp_path / "saved.json"
    original = Config(tolerance=1e-9, sweep_workers=2, log_level="INFO")
    original.save(str(path))
    loaded = Config.from_file(str(path))
    assert loaded.to_dict() == original.to_dict()
    assert "Sweep workers: 2" in str(loaded)
