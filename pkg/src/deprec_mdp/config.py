"""
Configuration Module for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

This module provides configuration management for the deprec-mdp command
line. Supports configuration from files (TOML/JSON) and command-line
arguments with defaults matching the library's own.

Features:
- Default solver, LP, Q-learning, sweep, output and logging settings
- Load configuration from TOML or JSON files (nested sections or flat keys)
- Override from command-line arguments
- Validation of configuration values
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Any, Dict

logger = logging.getLogger(__name__)

# Try to import TOML library (optional dependency)
try:
    import tomllib  # Python 3.11+
    TOML_AVAILABLE = True
except ImportError:
    try:
        import tomli as tomllib  # Python < 3.11
        TOML_AVAILABLE = True
    except ImportError:
        TOML_AVAILABLE = False
        logger.debug("TOML library not available, JSON-only configuration support")


# File section -> {key in section: Config field}
SECTIONS: Dict[str, Dict[str, str]] = {
    "solver": {
        "tolerance": "tolerance",
        "max_iterations": "max_iterations",
        "enumeration_cap": "enumeration_cap",
        "unichain_check_cap": "unichain_check_cap",
        "aperiodicity": "aperiodicity",
    },
    "lp": {
        "iteration_cap": "lp_iteration_cap",
        "feasibility_tol": "feasibility_tol",
        "pivot_tol": "pivot_tol",
    },
    "qlearning": {
        "restart_interval": "restart_interval",
        "trace_interval": "trace_interval",
    },
    "sweep": {
        "workers": "sweep_workers",
    },
    "output": {
        "digits": "output_digits",
    },
    "logging": {
        "level": "log_level",
        "file": "log_file",
    },
}

# argparse destination -> Config field
ARG_MAPPING: Dict[str, str] = {
    "tol": "tolerance",
    "max_iterations": "max_iterations",
    "digits": "output_digits",
    "workers": "sweep_workers",
    "log_level": "log_level",
    "log_file": "log_file",
}


@dataclass
class Config:
    """
    Configuration settings for deprec-mdp runs.

    All settings have defaults and can be overridden via configuration file
    or command-line arguments.
    """

    # Solver settings
    tolerance: float = 1e-10
    max_iterations: int = 10_000_000
    enumeration_cap: int = 1_000_000
    unichain_check_cap: int = 4096
    aperiodicity: float = 0.5  # tau in tau*I + (1-tau)*T for relative VI

    # LP settings
    lp_iteration_cap: int = 50_000
    feasibility_tol: float = 1e-7
    pivot_tol: float = 1e-10

    # Q-learning settings
    restart_interval: int = 10_000  # 0 = never restart
    trace_interval: int = 100_000

    # Sweep settings
    sweep_workers: int = 4

    # Output settings
    output_digits: int = 10  # significant digits of printed values

    # Logging settings
    log_level: str = "WARNING"  # DEBUG, INFO, WARNING, ERROR, CRITICAL
    log_file: Optional[str] = None  # None = stderr

    # Internal flag for config source tracking
    _config_source: str = field(default="defaults", repr=False)

    def __post_init__(self):
        """Validate configuration after initialization."""
        self._validate()

    def _validate(self) -> None:
        """
        Validate configuration values.

        Raises:
            ValueError: If any configuration value is invalid
        """
        for name in ("tolerance", "feasibility_tol", "pivot_tol"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

        for name in ("max_iterations", "enumeration_cap", "unichain_check_cap",
                     "lp_iteration_cap", "trace_interval", "sweep_workers", "output_digits"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")

        if not isinstance(self.restart_interval, int) or self.restart_interval < 0:
            raise ValueError(
                f"restart_interval must be a nonnegative integer, got {self.restart_interval}"
            )

        if not 0.0 < self.aperiodicity < 1.0:
            raise ValueError(f"aperiodicity must lie in (0, 1), got {self.aperiodicity}")

        if self.output_digits > 17:
            logger.warning(
                f"output_digits={self.output_digits} exceeds double precision; "
                "trailing digits carry no information"
            )

        # Validate log level
        valid_log_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        self.log_level = self.log_level.upper()
        if self.log_level not in valid_log_levels:
            raise ValueError(
                f"log_level must be one of {valid_log_levels}, got '{self.log_level}'"
            )

        # Validate log file path (if specified)
        if self.log_file is not None:
            log_path = Path(self.log_file)
            if not log_path.parent.exists():
                raise ValueError(
                    f"Log file directory does not exist: {log_path.parent}"
                )

    @classmethod
    def from_file(cls, path: str) -> 'Config':
        """
        Load configuration from a file.

        Supports TOML and JSON formats (detected by file extension).

        Args:
            path: Path to configuration file (.toml or .json)

        Returns:
            Config object with values from file

        Raises:
            FileNotFoundError: If config file doesn't exist
            ValueError: If file format is unsupported or invalid
        """
        config_path = Path(path)

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        logger.info(f"Loading configuration from: {path}")

        extension = config_path.suffix.lower()

        if extension == ".toml":
            if not TOML_AVAILABLE:
                raise ValueError(
                    "TOML support not available. Install with: pip install tomli"
                )
            with open(config_path, "rb") as f:
                data = tomllib.load(f)

        elif extension == ".json":
            with open(config_path, "r") as f:
                data = json.load(f)

        else:
            raise ValueError(
                f"Unsupported config file format: {extension}. "
                "Use .toml or .json"
            )

        if not isinstance(data, dict):
            raise ValueError(f"Configuration file must hold a table/object: {path}")

        config_data: Dict[str, Any] = {}

        # Nested structure, e.g. {"solver": {"tolerance": 1e-12}}
        for section, keys in SECTIONS.items():
            if isinstance(data.get(section), dict):
                for key, config_key in keys.items():
                    if key in data[section]:
                        config_data[config_key] = data[section][key]

        # Also support flat structure (top-level field names)
        known = {config_key for keys in SECTIONS.values() for config_key in keys.values()}
        for key, value in data.items():
            if key in known:
                config_data[key] = value
            elif key not in SECTIONS:
                logger.warning(f"Ignoring unknown configuration key '{key}' in {path}")

        config = cls(**config_data)
        config._config_source = f"file:{path}"

        logger.info(f"Configuration loaded from {path}")
        return config

    @classmethod
    def from_args_and_file(cls, args: Any) -> 'Config':
        """
        Create configuration from both file and command-line arguments.

        Command-line arguments take precedence over file settings.

        Args:
            args: argparse.Namespace object with parsed arguments

        Returns:
            Config object with merged values
        """
        if getattr(args, "config", None):
            config = cls.from_file(args.config)
            logger.debug("Loaded base configuration from file")
        else:
            config = cls()
            logger.debug("Using default configuration")

        overridden = False
        for arg_name, config_key in ARG_MAPPING.items():
            value = getattr(args, arg_name, None)
            # Skip None values (not provided)
            if value is None:
                continue
            setattr(config, config_key, value)
            overridden = True

        # Re-validate after overrides
        config._validate()
        if overridden:
            config._config_source = (
                "file+cli" if config._config_source.startswith("file") else "command-line"
            )

        logger.debug("Configuration merged from file and command-line")
        return config

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert configuration to a nested dictionary (the file layout).

        Returns:
            Dictionary representation of configuration
        """
        return {
            section: {key: getattr(self, config_key) for key, config_key in keys.items()}
            for section, keys in SECTIONS.items()
        }

    def save(self, path: str) -> None:
        """
        Save configuration to a JSON file.

        Args:
            path: Path to save configuration file
        """
        with open(Path(path), "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")
        logger.info(f"Configuration saved to {path}")

    def __str__(self) -> str:
        """String representation of configuration."""
        lines = ["deprec-mdp Configuration:"]
        lines.append(f"  Source: {self._config_source}")
        lines.append(f"  Tolerance: {self.tolerance:g}")
        lines.append(f"  Max iterations: {self.max_iterations}")
        lines.append(f"  Enumeration cap: {self.enumeration_cap}")
        lines.append(f"  Unichain check cap: {self.unichain_check_cap}")
        lines.append(f"  Aperiodicity: {self.aperiodicity}")
        lines.append(f"  LP iteration cap: {self.lp_iteration_cap}")
        lines.append(f"  LP tolerances: feasibility {self.feasibility_tol:g}, pivot {self.pivot_tol:g}")
        lines.append(f"  Q-learning intervals: restart {self.restart_interval}, trace {self.trace_interval}")
        lines.append(f"  Sweep workers: {self.sweep_workers}")
        lines.append(f"  Output digits: {self.output_digits}")
        lines.append(f"  Log level: {self.log_level}")
        lines.append(f"  Log file: {self.log_file or 'stderr'}")
        return "\n".join(lines)
