"""Configuration file handling for the CLI.

Supports loading run configurations from YAML files, per-command sections,
environment defaults and merging with command-line arguments.
"""

import os
from pathlib import Path
from typing import Any, Optional

from dotenv import load_dotenv

COMMANDS = ("validate", "curves", "analytic", "mc", "compare", "gaussian_limit")

COMMAND_ALIASES = {"reproduce_fig3": "gaussian_limit"}

METHODS = ("unwrap", "phase_unwrap", "root_count", "spherical")

QUANTITIES = ("i2", "i2_unfolded", "i3", "moments", "corr", "gen_func")

# key -> accepted types; bool is checked separately since it subclasses int
ALLOWED_KEYS: dict[str, tuple[type, ...]] = {
    "model": (str,),
    "n": (int,),
    "samples": (int,),
    "seed": (int,),
    "out": (str,),
    "workers": (int,),
    "method": (str,),
    "full": (bool,),
    "scan_grid": (int,),
    "resamples": (int,),
    "quantity": (str,),
    "points": (list,),
    "shifts": (list,),
    "estimate": (str,),
    "prediction": (str,),
}

POSITIVE_KEYS = ("n", "samples", "workers", "scan_grid", "resamples")

DEFAULTS: dict[str, Any] = {
    "n": 64,
    "samples": 1000,
    "seed": 0,
    "out": "results",
    "workers": 1,
    "method": "unwrap",
    "full": False,
    "scan_grid": 256,
    "resamples": 1000,
}

# scaled and full-scale Gaussian-limit runs
GAUSSIAN_LIMIT_SCALED = {"n": 200, "samples": 2000}
GAUSSIAN_LIMIT_FULL = {"n": 1500, "samples": 10000}

ENV_WORKERS = "CHIRAL_WINDING_WORKERS"
ENV_OUT = "CHIRAL_WINDING_OUT"


def _normalize_key(key: Any) -> str:
    if not isinstance(key, str):
        raise ValueError(f"Configuration keys must be strings, got {type(key).__name__}")
    return key.replace("-", "_").lower()


def command_name(command: str) -> str:
    """Section name for a command as typed, with aliases resolved."""
    command = command.replace("-", "_")
    return COMMAND_ALIASES.get(command, command)


def load_config(config_path: Path | str | None) -> dict[str, Any]:
    """Load configuration from YAML file.

    Keys are normalized to snake_case at the top level and inside command
    sections (``mc:``, ``gaussian-limit:`` ...).

    Args:
        config_path: Path to YAML configuration file. If None, returns empty config.

    Returns:
        Dictionary with configuration values.

    Raises:
        FileNotFoundError: If config file does not exist.
        ValueError: If config file is invalid or malformed.
        IOError: If unable to read config file.

    Example:
        >>> config = load_config("run.yaml")
        >>> config["mc"]["samples"]
        10000
    """
    if config_path is None:
        return {}

    config_path = Path(config_path)

    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    try:
        import yaml
    except ImportError:
        raise ImportError(
            "PyYAML library required for configuration file support. "
            "Install with: pip install pyyaml"
        )

    try:
        with open(config_path, "r") as f:
            data = yaml.safe_load(f)
    except IOError as e:
        raise IOError(f"Failed to read configuration file: {e}") from e
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid YAML in configuration file: {e}") from e

    if data is None:
        data = {}

    if not isinstance(data, dict):
        raise ValueError(
            f"Configuration file must contain a YAML dictionary, got {type(data).__name__}"
        )

    normalized = {}
    for key, value in data.items():
        key = command_name(_normalize_key(key))
        if key in COMMANDS:
            if value is None:
                value = {}
            if not isinstance(value, dict):
                raise ValueError(f"Section '{key}' must be a dictionary, got {type(value).__name__}")
            value = {_normalize_key(k): v for k, v in value.items()}
        normalized[key] = value

    return normalized


def _validate_value(key: str, value: Any) -> Any:
    expected_types = ALLOWED_KEYS[key]
    if bool not in expected_types and isinstance(value, bool):
        raise ValueError(f"Configuration key '{key}' must be {expected_types[0].__name__}, got bool")
    if not isinstance(value, expected_types):
        type_names = " or ".join(t.__name__ for t in expected_types)
        raise ValueError(
            f"Configuration key '{key}' must be {type_names}, got {type(value).__name__}"
        )

    if key in POSITIVE_KEYS and value <= 0:
        raise ValueError(f"{key} must be positive, got {value}")

    if key == "seed" and value < 0:
        raise ValueError(f"seed must be non-negative, got {value}")

    if key == "method":
        value = value.lower()
        if value not in METHODS:
            raise ValueError(f"method must be one of {', '.join(METHODS)}, got '{value}'")

    if key == "quantity":
        value = value.lower()
        if value not in QUANTITIES:
            raise ValueError(f"quantity must be one of {', '.join(QUANTITIES)}, got '{value}'")

    if key in ("points", "shifts"):
        if not value or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
        ):
            raise ValueError(f"{key} must be a non-empty list of numbers")
        value = [float(x) for x in value]

    return value


def validate_config(config: dict[str, Any]) -> dict[str, Any]:
    """Validate and normalize configuration values.

    Args:
        config: Configuration dictionary, optionally with command sections.

    Returns:
        Normalized configuration dictionary; None values are dropped.

    Raises:
        ValueError: If configuration values are invalid.

    Allowed keys:
        - model, out, method, quantity, estimate, prediction: str
        - n, samples, workers, scan_grid, resamples: positive int
        - seed: non-negative int
        - full: bool
        - points, shifts: list of numbers
        - validate, curves, analytic, mc, compare, gaussian_limit: sections
          holding the same keys
    """
    validated: dict[str, Any] = {}

    for key, value in config.items():
        normalized_key = command_name(key)

        if normalized_key in COMMANDS:
            if not isinstance(value, dict):
                raise ValueError(f"Section '{key}' must be a dictionary")
            validated[normalized_key] = {
                k: v for k, v in validate_config(value).items() if not isinstance(v, dict)
            }
            continue

        if normalized_key not in ALLOWED_KEYS:
            raise ValueError(f"Unknown configuration key: '{key}'")

        if value is not None:
            validated[normalized_key] = _validate_value(normalized_key, value)

    return validated


def environment_defaults() -> dict[str, Any]:
    """Defaults read from the environment (and a .env file, if present).

    Raises:
        ValueError: If CHIRAL_WINDING_WORKERS is not a positive integer.
    """
    load_dotenv()

    env: dict[str, Any] = {}
    workers = os.environ.get(ENV_WORKERS)
    if workers:
        try:
            env["workers"] = _validate_value("workers", int(workers))
        except ValueError:
            raise ValueError(f"{ENV_WORKERS} must be a positive integer, got '{workers}'") from None
    out = os.environ.get(ENV_OUT)
    if out:
        env["out"] = out
    return env


def merge_configs(
    file_config: dict[str, Any], cli_config: dict[str, Any]
) -> dict[str, Any]:
    """Merge file configuration with CLI configuration.

    CLI arguments override file configuration (CLI has priority).

    Example:
        >>> merge_configs({"n": 64, "seed": 1}, {"n": 128})
        {'n': 128, 'seed': 1}
    """
    merged = {}

    merged.update(file_config)

    for key, value in cli_config.items():
        if value is not None:
            merged[key] = value

    return merged


def command_config(config: dict[str, Any], command: str) -> dict[str, Any]:
    """Flatten ``config`` for one command: its section overrides the top level."""
    command = command_name(command)
    if command not in COMMANDS:
        raise ValueError(f"Unknown command: '{command}'")
    flat = {k: v for k, v in config.items() if k not in COMMANDS}
    flat.update(config.get(command, {}))
    return flat


def get_final_config(
    file_config: Optional[dict[str, Any]],
    cli_config: dict[str, Any],
    command: str,
) -> dict[str, Any]:
    """Final configuration for ``command``.

    Precedence, lowest first: built-in defaults, command defaults, environment,
    file top level, file command section, CLI arguments.

    Raises:
        ValueError: If configuration is invalid.
    """
    if file_config is None:
        file_config = {}

    validated_file = command_config(validate_config(file_config), command)
    validated_cli = validate_config(cli_config)

    final = dict(DEFAULTS)
    if command_name(command) == "gaussian_limit":
        full = merge_configs(validated_file, validated_cli).get("full", False)
        final.update(GAUSSIAN_LIMIT_FULL if full else GAUSSIAN_LIMIT_SCALED)
    final.update(environment_defaults())
    final = merge_configs(final, validated_file)
    return merge_configs(final, validated_cli)
