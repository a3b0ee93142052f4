"""Tests for run configuration files, environment defaults and merging."""

import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from chiral_winding.config import (
    DEFAULTS,
    ENV_OUT,
    ENV_WORKERS,
    command_config,
    command_name,
    environment_defaults,
    get_final_config,
    load_config,
    merge_configs,
    validate_config,
)


@pytest.fixture(autouse=True)
def clean_environment():
    """No .env file and no CHIRAL_WINDING_* variables leak into a test."""
    with patch("chiral_winding.config.load_dotenv"):
        with patch.dict(os.environ):
            os.environ.pop(ENV_WORKERS, None)
            os.environ.pop(ENV_OUT, None)
            yield


class TestConfigLoading:
    """Test YAML configuration file loading."""

    def test_load_config_from_yaml_file(self):
        """Load top-level keys and a command section."""
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "run.yaml"
            config_file.write_text("""\
model: models/trigonometric.model
seed: 7
scan-grid: 512
mc:
  n: 64
  samples: 10000
gaussian-limit:
  workers: 8
""")

            config = load_config(config_file)

            assert config["model"] == "models/trigonometric.model"
            assert config["seed"] == 7
            assert config["scan_grid"] == 512
            assert config["mc"] == {"n": 64, "samples": 10000}
            assert config["gaussian_limit"] == {"workers": 8}

    def test_load_config_with_none_returns_empty(self):
        assert load_config(None) == {}

    def test_load_config_file_not_found(self):
        with pytest.raises(FileNotFoundError, match="not found"):
            load_config("/nonexistent/path/run.yaml")

    def test_load_config_empty_file(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "empty.yaml"
            config_file.write_text("")

            assert load_config(str(config_file)) == {}

    def test_load_config_invalid_yaml(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "bad.yaml"
            config_file.write_text("n: [1, 2\n")

            with pytest.raises(ValueError, match="Invalid YAML"):
                load_config(config_file)

    def test_load_config_not_dict(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "list.yaml"
            config_file.write_text("- n\n- samples\n")

            with pytest.raises(ValueError, match="dictionary"):
                load_config(config_file)

    def test_empty_section(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "run.yaml"
            config_file.write_text("mc:\n")

            assert load_config(config_file) == {"mc": {}}

    def test_section_must_be_dict(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "run.yaml"
            config_file.write_text("mc: 5\n")

            with pytest.raises(ValueError, match="Section 'mc'"):
                load_config(config_file)

    def test_non_string_keys(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "run.yaml"
            config_file.write_text("1: 2\n")

            with pytest.raises(ValueError, match="strings"):
                load_config(config_file)


class TestConfigValidation:
    """Test value checking and normalization."""

    def test_validate_valid_config(self):
        config = {
            "model": "m.model",
            "n": 64,
            "samples": 1000,
            "seed": 0,
            "method": "Root_Count",
            "quantity": "I2",
            "points": [0, 1.5],
            "full": True,
        }

        validated = validate_config(config)

        assert validated["method"] == "root_count"
        assert validated["quantity"] == "i2"
        assert validated["points"] == [0.0, 1.5]
        assert validated["full"] is True

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="Unknown configuration key"):
            validate_config({"frames": 10})

    def test_wrong_type(self):
        with pytest.raises(ValueError, match="must be int"):
            validate_config({"n": "64"})

    def test_bool_is_not_int(self):
        with pytest.raises(ValueError, match="got bool"):
            validate_config({"samples": True})

    @pytest.mark.parametrize("key", ["n", "samples", "workers", "scan_grid", "resamples"])
    def test_non_positive(self, key):
        with pytest.raises(ValueError, match="must be positive"):
            validate_config({key: 0})

    def test_negative_seed(self):
        with pytest.raises(ValueError, match="non-negative"):
            validate_config({"seed": -1})

    def test_invalid_method(self):
        with pytest.raises(ValueError, match="method must be one of"):
            validate_config({"method": "bisection"})

    def test_invalid_quantity(self):
        with pytest.raises(ValueError, match="quantity must be one of"):
            validate_config({"quantity": "i4"})

    @pytest.mark.parametrize("points", [[], [1, "a"], [True]])
    def test_invalid_points(self, points):
        with pytest.raises(ValueError, match="list of numbers"):
            validate_config({"points": points})

    def test_none_values_dropped(self):
        assert validate_config({"n": None, "seed": 3}) == {"seed": 3}

    def test_sections_validated(self):
        validated = validate_config({"mc": {"samples": 10, "scan-grid": 128}})

        assert validated == {"mc": {"samples": 10, "scan_grid": 128}}

        with pytest.raises(ValueError, match="must be positive"):
            validate_config({"mc": {"samples": 0}})


class TestEnvironment:
    """Test CHIRAL_WINDING_* defaults."""

    def test_no_variables(self):
        assert environment_defaults() == {}

    def test_variables_read(self):
        with patch.dict(os.environ, {ENV_WORKERS: "6", ENV_OUT: "/tmp/runs"}):
            assert environment_defaults() == {"workers": 6, "out": "/tmp/runs"}

    @pytest.mark.parametrize("value", ["many", "0"])
    def test_invalid_workers(self, value):
        with patch.dict(os.environ, {ENV_WORKERS: value}):
            with pytest.raises(ValueError, match=ENV_WORKERS):
                environment_defaults()

    def test_dotenv_is_loaded(self):
        with patch("chiral_winding.config.load_dotenv") as mock_load:
            environment_defaults()

        mock_load.assert_called_once()


class TestConfigMerging:
    """Test precedence between sources."""

    def test_merge_file_and_cli_configs(self):
        merged = merge_configs({"n": 64, "seed": 1}, {"n": 128})

        assert merged == {"n": 128, "seed": 1}

    def test_cli_none_values_do_not_override(self):
        assert merge_configs({"n": 64}, {"n": None}) == {"n": 64}

    def test_command_section_overrides_top_level(self):
        config = {"n": 16, "seed": 1, "mc": {"n": 64}, "curves": {"n": 8}}

        assert command_config(config, "mc") == {"n": 64, "seed": 1}
        assert command_config(config, "analytic") == {"n": 16, "seed": 1}

    def test_unknown_command(self):
        with pytest.raises(ValueError, match="Unknown command"):
            command_config({}, "plot")


class TestFinalConfig:
    """Test the final configuration handed to the runners."""

    def test_defaults(self):
        final = get_final_config(None, {}, "mc")

        assert final == DEFAULTS

    def test_file_then_section_then_cli(self):
        file_config = {"n": 16, "seed": 4, "mc": {"n": 32, "samples": 500}}
        final = get_final_config(file_config, {"samples": 50}, "mc")

        assert final["n"] == 32
        assert final["seed"] == 4
        assert final["samples"] == 50
        assert final["out"] == "results"

    def test_environment_below_file(self):
        with patch.dict(os.environ, {ENV_WORKERS: "6", ENV_OUT: "env-out"}):
            final = get_final_config({"workers": 2}, {}, "mc")

        assert final["workers"] == 2
        assert final["out"] == "env-out"

    def test_gaussian_limit_scaled(self):
        final = get_final_config(None, {}, "gaussian-limit")

        assert final["n"] == 200
        assert final["samples"] == 2000

    def test_reproduce_fig3_is_gaussian_limit(self):
        assert command_name("reproduce-fig3") == "gaussian_limit"
        assert command_name("mc") == "mc"

        final = get_final_config({"reproduce_fig3": {"seed": 4}}, {"full": True}, "reproduce-fig3")

        assert final["n"] == 1500
        assert final["seed"] == 4

    def test_gaussian_limit_full(self):
        final = get_final_config(None, {"full": True}, "gaussian-limit")

        assert final["n"] == 1500
        assert final["samples"] == 10000

    def test_explicit_values_beat_gaussian_limit_presets(self):
        final = get_final_config({"gaussian-limit": {"n": 50}}, {"samples": 300}, "gaussian-limit")

        assert final["n"] == 50
        assert final["samples"] == 300

    def test_validation_error(self):
        with pytest.raises(ValueError):
            get_final_config({"n": -4}, {}, "mc")


class TestExampleConfig:
    """The shipped example configuration stays valid."""

    def test_example_config(self):
        path = Path(__file__).resolve().parents[1] / "configs" / "example.yaml"
        file_config = load_config(path)

        mc = get_final_config(file_config, {}, "mc")
        assert mc["samples"] == 10000
        assert mc["method"] == "root_count"
        assert mc["seed"] == 7

        limit = get_final_config(file_config, {}, "gaussian-limit")
        assert limit["samples"] == 4000
        assert limit["n"] == 200
