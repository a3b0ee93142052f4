"""Command-line interface for chiral winding-number experiments.

Provides the ``chiral-winding`` command with subcommands validate, curves,
analytic, mc, compare and gaussian-limit (alias reproduce-fig3).
"""

import logging
import sys

from chiral_winding import __version__

from .config import get_final_config, load_config, validate_config
from .experiments import (
    run_analytic,
    run_compare,
    run_curves,
    run_gaussian_limit,
    run_mc,
    run_validate,
)

COMMANDS = ("validate", "curves", "analytic", "mc", "compare", "gaussian-limit", "reproduce-fig3")

# flag -> (config key, converter)
VALUE_FLAGS = {
    "--model": ("model", str),
    "--n": ("n", int),
    "--samples": ("samples", int),
    "--seed": ("seed", int),
    "--out": ("out", str),
    "--workers": ("workers", int),
    "--method": ("method", str),
    "--quantity": ("quantity", str),
    "--points": ("points", "floats"),
    "--shifts": ("shifts", "floats"),
    "--scan-grid": ("scan_grid", int),
    "--resamples": ("resamples", int),
    "--estimate": ("estimate", str),
    "--prediction": ("prediction", str),
}


def _usage_error(message: str) -> None:
    print(f"Error: {message}", file=sys.stderr)
    print("Run 'chiral-winding --help' for usage information", file=sys.stderr)
    sys.exit(2)


def _convert(flag: str, raw: str, converter) -> object:
    if converter == "floats":
        try:
            return [float(x) for x in raw.split(",") if x.strip()]
        except ValueError:
            _usage_error(f"{flag} must be a comma-separated list of numbers, got '{raw}'")
    if converter is int:
        try:
            return int(raw)
        except ValueError:
            _usage_error(f"{flag[2:]} must be an integer, got '{raw}'")
    return raw


def parse_args(args: list[str] | None = None) -> dict:
    """Parse command-line arguments.

    Args:
        args: List of command-line arguments. If None, uses sys.argv[1:].

    Returns:
        Dictionary with the command, ``config``, ``verbose`` and one entry per
        value flag (None when not given).

    Raises:
        SystemExit: If arguments are invalid (exit code 2) or on --help/--version.
    """
    if args is None:
        args = sys.argv[1:]

    parsed: dict = {"command": None, "config": None, "verbose": False, "full": None}
    for key, _ in VALUE_FLAGS.values():
        parsed[key] = None

    i = 0
    while i < len(args):
        arg = args[i]

        if arg in ["-h", "--help"]:
            print_help()
            sys.exit(0)

        elif arg in ["-V", "--version"]:
            print(f"chiral-winding {__version__}")
            sys.exit(0)

        elif arg in ["-v", "--verbose"]:
            parsed["verbose"] = True
            i += 1

        elif arg == "--full":
            parsed["full"] = True
            i += 1

        elif arg == "--config":
            if i + 1 >= len(args):
                _usage_error("--config requires a value")
            parsed["config"] = args[i + 1]
            i += 2

        elif arg in VALUE_FLAGS:
            if i + 1 >= len(args):
                _usage_error(f"{arg} requires a value")
            key, converter = VALUE_FLAGS[arg]
            parsed[key] = _convert(arg, args[i + 1], converter)
            i += 2

        elif arg.startswith("-"):
            _usage_error(f"unknown option '{arg}'")

        else:
            if parsed["command"] is not None:
                _usage_error(f"unexpected argument '{arg}'")
            if arg not in COMMANDS:
                _usage_error(f"unknown command '{arg}'; choose from {', '.join(COMMANDS)}")
            parsed["command"] = arg
            i += 1

    return parsed


def print_help() -> None:
    """Print help message."""
    help_text = """\
usage: chiral-winding COMMAND [options]

Winding-number statistics of the chiral two-matrix random model.

Commands:
  validate              Parse and canonicalize a model; report Berry phase,
                        gauge residuals and the number of parallelism curves
  curves                Trace the parallelism curves and write curves.csv
  analytic              Evaluate an analytic quantity (--quantity i2,
                        i2_unfolded, i3, moments, corr, gen_func)
  mc                    Monte Carlo estimate (--quantity moments, corr, gen_func)
  compare               Judge an estimate artifact against a prediction
  gaussian-limit        Winding histogram, moments and Gaussian-limit verdict
  reproduce-fig3        Alias of gaussian-limit

Optional Arguments:
  -h, --help            Show this help message and exit
  -V, --version         Show version and exit
  -v, --verbose         Log progress at INFO level
  --config FILE         Load configuration from YAML file
  --model PATH          Model file with lines 'a[m] = value', 'b[m] = value'
  --n INT               Matrix dimension N (default: 64)
  --samples INT         Number of realizations (default: 1000)
  --seed INT            Master seed (default: 0)
  --out DIR             Output directory (default: results)
  --workers INT         Worker processes (default: 1)
  --method NAME         Winding method: unwrap, root_count, spherical
  --quantity NAME       Quantity for analytic/mc
  --points P1,P2,...    Parameter points for correlators
  --shifts J1,J2,...    Source shifts for the generating function
  --scan-grid INT       Curve scan grid per axis (default: 256)
  --resamples INT       Bootstrap resamples (default: 1000)
  --estimate PATH       Estimate artifact for compare
  --prediction PATH     Prediction artifact for compare
  --full                gaussian-limit at N=1500 with 10000 samples
                        (default N=200 with 2000 samples)

Environment:
  CHIRAL_WINDING_WORKERS, CHIRAL_WINDING_OUT set defaults for --workers and
  --out; a .env file in the working directory is read as well.

Configuration File (YAML):
  Top-level keys apply to every command; a section named after a command
  overrides them for that command. CLI arguments override both.

  Example run.yaml:
    model: models/first_harmonic.model
    seed: 7
    mc:
      n: 64
      samples: 10000
    gaussian-limit:
      workers: 8

Examples:
  chiral-winding validate --model models/trigonometric.model
  chiral-winding analytic --model models/trigonometric.model --quantity i2
  chiral-winding mc --model models/trigonometric.model --n 64 --samples 10000
  chiral-winding compare --estimate results/mc_moments.json
  chiral-winding gaussian-limit --workers 8 --out fig
"""
    print(help_text)


def _print_lines(lines) -> None:
    for line in lines:
        print(line)


def main(args: list[str] | None = None) -> int:
    """Main CLI entry point.

    Args:
        args: Command-line arguments. If None, uses sys.argv[1:].

    Returns:
        Exit code: 0 on success, 1 on failure or a failed verdict, 2 on usage
        errors, 130 when interrupted.
    """
    try:
        parsed = parse_args(args)

        if parsed["command"] is None:
            print("Error: COMMAND is required", file=sys.stderr)
            print("Run 'chiral-winding --help' for usage information", file=sys.stderr)
            return 2

        logging.basicConfig(
            level=logging.INFO if parsed["verbose"] else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )

        file_config = {}
        if parsed["config"]:
            try:
                file_config = load_config(parsed["config"])
            except (FileNotFoundError, ValueError, IOError) as e:
                print(f"Error: {e}", file=sys.stderr)
                return 1

        cli_config = {
            k: v
            for k, v in parsed.items()
            if k not in ("command", "config", "verbose") and v is not None
        }
        try:
            validate_config(cli_config)
        except ValueError as e:
            print(f"Error: {e}", file=sys.stderr)
            return 2

        command = parsed["command"]
        config = get_final_config(file_config, cli_config, command)

        print(f"Running {command}...", file=sys.stderr)
        if command == "validate":
            summary = run_validate(config)
            _print_lines(summary.lines())
            return 0

        runners = {
            "curves": run_curves,
            "analytic": run_analytic,
            "mc": run_mc,
            "compare": run_compare,
            "gaussian-limit": run_gaussian_limit,
            "reproduce-fig3": run_gaussian_limit,
        }
        result = runners[command](config)
        _print_lines(result.lines)
        for path in result.artifacts:
            print(f"wrote {path}", file=sys.stderr)
        return 0 if result.passed else 1

    except (ValueError, ArithmeticError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    except RuntimeError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    except IOError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return 130

    except Exception as e:
        print(f"Error: Unexpected error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
