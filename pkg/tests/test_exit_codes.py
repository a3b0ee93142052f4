"""Tests for CI-friendly exit codes."""

import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from chiral_winding.cli import main
from chiral_winding.errors import (
    InconsistentWindingError,
    ModelError,
    TooManyExclusionsError,
)
from chiral_winding.experiments import RunSummary


@pytest.fixture(autouse=True)
def no_dotenv():
    with patch("chiral_winding.config.load_dotenv"):
        yield


class TestExitCodeZeroOnSuccess:
    """Test exit code 0 on successful execution."""

    def test_exit_code_0_on_passing_run(self):
        with patch("chiral_winding.cli.run_mc") as mock_run:
            mock_run.return_value = RunSummary(artifacts=(), lines=())

            assert main(["mc", "--model", "m.model"]) == 0

    def test_exit_code_0_for_validate(self):
        with patch("chiral_winding.cli.run_validate") as mock_run:
            mock_run.return_value.lines.return_value = ["model hash: abc"]

            assert main(["validate", "--model", "m.model"]) == 0


class TestExitCodeOneOnFailure:
    """Test exit code 1 on failed verdicts and runtime errors."""

    def test_failed_verdict(self):
        with patch("chiral_winding.cli.run_compare") as mock_run:
            mock_run.return_value = RunSummary(artifacts=(), lines=("overall: FAIL",), passed=False)

            assert main(["compare", "--estimate", "e.json"]) == 1

    @pytest.mark.parametrize(
        "error",
        [
            ValueError("bad value"),
            ModelError("v(p) vanishes"),
            InconsistentWindingError("methods disagree"),
            TooManyExclusionsError("5 of 10 excluded", excluded=5, samples=10),
            IOError("disk full"),
            FileNotFoundError("Model file not found: m.model"),
        ],
    )
    def test_runner_errors(self, error, capsys):
        with patch("chiral_winding.cli.run_mc") as mock_run:
            mock_run.side_effect = error

            assert main(["mc", "--model", "m.model"]) == 1

        assert f"Error: {error}" in capsys.readouterr().err

    def test_unexpected_error(self, capsys):
        with patch("chiral_winding.cli.run_mc") as mock_run:
            mock_run.side_effect = KeyError("boom")

            assert main(["mc", "--model", "m.model"]) == 1

        assert "Unexpected error" in capsys.readouterr().err

    def test_missing_config_file(self):
        assert main(["mc", "--config", "/nonexistent/run.yaml"]) == 1

    def test_invalid_config_file_value(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            config_file = Path(tmpdir) / "run.yaml"
            config_file.write_text("samples: -3\n")

            assert main(["mc", "--config", str(config_file), "--model", "m.model"]) == 1

    def test_missing_model_file(self):
        assert main(["validate", "--model", "/nonexistent/x.model"]) == 1


class TestExitCodeTwoOnUsage:
    """Test exit code 2 on usage errors."""

    def test_no_command(self, capsys):
        assert main([]) == 2
        assert "COMMAND is required" in capsys.readouterr().err

    def test_unknown_option(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["mc", "--frames", "3"])

        assert excinfo.value.code == 2

    def test_zero_samples(self):
        assert main(["mc", "--samples", "0"]) == 2

    def test_invalid_method(self):
        assert main(["mc", "--method", "bisection"]) == 2


class TestExitCodeInterrupted:
    def test_keyboard_interrupt(self):
        with patch("chiral_winding.cli.run_mc") as mock_run:
            mock_run.side_effect = KeyboardInterrupt

            assert main(["mc", "--model", "m.model"]) == 130
