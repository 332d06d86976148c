"""Configuration loading with key=value overrides."""

from collections.abc import Mapping, Sequence
from io import StringIO
from pathlib import Path
from typing import Any

import structlog
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from multipcl.errors import ConfigurationError

from .models import ExperimentConfig

logger = structlog.get_logger()


class ConfigNotFoundError(ConfigurationError):
    """Raised when an explicitly requested configuration file does not exist."""


class ConfigOverrideError(ConfigurationError):
    """Raised when a key=value override is malformed or names an unknown key."""


def parse_override(item: str) -> tuple[list[str], Any]:
    """Split a key=value override into a dotted key path and a YAML scalar.

    Args:
        item: Override such as "fusion.model_dim=16".

    Returns:
        Tuple of (key path, parsed value).

    Raises:
        ConfigOverrideError: If there is no "=" or the key is empty.
    """
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigOverrideError(f"override must look like key=value, got {item!r}")
    yaml = YAML(typ="safe")
    try:
        value = yaml.load(StringIO(raw)) if raw.strip() else None
    except YAMLError as e:
        raise ConfigOverrideError(f"cannot parse value in {item!r}: {e}") from e
    return key.strip().split("."), value


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply key=value overrides onto raw config data.

    Every key must name an existing config field; nested sections use dotted keys.

    Args:
        data: Raw config data (from a file or empty).
        overrides: Override strings, later ones win.

    Returns:
        New merged dict.

    Raises:
        ConfigOverrideError: If an override names an unknown key.
    """
    reference = ExperimentConfig.model_validate({}).model_dump(mode="json")
    merged = _deep_copy(data)
    for item in overrides:
        path, value = parse_override(item)
        ref: Any = reference
        for depth, part in enumerate(path):
            if not isinstance(ref, dict) or part not in ref:
                raise ConfigOverrideError(f"unknown config key: {'.'.join(path[: depth + 1])}")
            ref = ref[part]
        target = merged
        for part in path[:-1]:
            existing = target.get(part)
            if not isinstance(existing, dict):
                existing = {}
                target[part] = existing
            target = existing
        target[path[-1]] = value
        logger.debug("config override applied", key=".".join(path), value=value)
    return merged


def _deep_copy(data: Mapping[str, Any]) -> dict[str, Any]:
    return {k: _deep_copy(v) if isinstance(v, Mapping) else v for k, v in data.items()}


class ConfigLoader:
    """Loads experiment configuration from YAML files.

    Searches multiple paths for config files; with none found the built-in
    defaults apply. Precedence is overrides > config file > environment > defaults.

    Attributes:
        SEARCH_PATHS: Ordered list of config file locations to try.
    """

    SEARCH_PATHS = [
        "./multipcl.yaml",
        "~/.multipcl/config.yaml",
        "/etc/multipcl/config.yaml",
    ]

    def __init__(self, explicit_path: str | None = None) -> None:
        """Initialize config loader.

        Args:
            explicit_path: If provided, only load from this path (skip search).
        """
        self._explicit_path = explicit_path

    def load(self, overrides: Sequence[str] = ()) -> ExperimentConfig:
        """Load configuration and apply overrides.

        Args:
            overrides: key=value strings, applied in order.

        Returns:
            Validated ExperimentConfig.

        Raises:
            ConfigNotFoundError: If an explicit path does not exist.
            ConfigurationError: If the file is unreadable or fails validation.
        """
        data = self._load_from_file()
        merged = apply_overrides(data, overrides)
        try:
            return ExperimentConfig(**merged)
        except ValueError as e:
            raise ConfigurationError(f"invalid configuration: {e}") from e

    def _load_from_file(self) -> dict[str, Any]:
        """Load raw data from the first available YAML file.

        Returns:
            Parsed mapping, empty when no file was found.

        Raises:
            ConfigNotFoundError: If an explicit path does not exist.
        """
        path = self.find_config_file()
        if path is None:
            if self._explicit_path:
                raise ConfigNotFoundError(f"Config file not found: {self._explicit_path}")
            logger.debug("no config file found, using defaults", searched=self.SEARCH_PATHS)
            return {}

        yaml = YAML(typ="safe")
        logger.debug("config loaded", path=str(path))
        try:
            with open(path, encoding="utf-8") as f:
                data = yaml.load(f)
        except YAMLError as e:
            raise ConfigurationError(f"cannot parse {path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be a mapping")
        return data

    def find_config_file(self) -> Path | None:
        """Find first available config file.

        Returns:
            Path to config file if found, None otherwise.
        """
        # if explicit path provided, only try that
        search_paths = [self._explicit_path] if self._explicit_path else self.SEARCH_PATHS
        for path_str in search_paths:
            path = Path(path_str).expanduser().resolve()
            if path.exists():
                return path
        return None
