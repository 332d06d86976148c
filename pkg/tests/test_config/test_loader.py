"""Tests for configuration loader."""

from pathlib import Path
from typing import Any

import pytest
from ruamel.yaml import YAML

from multipcl.config.loader import (
    ConfigLoader,
    ConfigNotFoundError,
    ConfigOverrideError,
    apply_overrides,
    parse_override,
)
from multipcl.errors import ConfigurationError


def write_yaml(path: Path, data: dict[str, Any]) -> None:
    """Write data to a YAML file."""
    yaml = YAML()
    with open(path, "w") as f:
        yaml.dump(data, f)


@pytest.fixture
def minimal_config_data():
    """Minimal configuration data: a small model and a short protocol."""
    return {
        "fusion": {"model_dim": 16, "heads": 2},
        "epochs": 6,
        "top_m": 3,
        "seed": 7,
    }


@pytest.fixture
def config_file(minimal_config_data, tmp_path) -> Path:
    """Config file holding the minimal data."""
    path = tmp_path / "config.yaml"
    write_yaml(path, minimal_config_data)
    return path


def test_load_defaults_when_no_file(tmp_path):
    """Test that built-in defaults apply when no config file exists."""
    loader = ConfigLoader()
    # override search paths to non-existent locations
    loader.SEARCH_PATHS = [str(tmp_path / "nonexistent.yaml")]

    config = loader.load()
    assert config.epochs == 20
    assert config.fusion.model_dim == 256


def test_explicit_path_not_found(tmp_path):
    """Test that a missing explicit path is an error, not a fallback."""
    loader = ConfigLoader(explicit_path=str(tmp_path / "absent.yaml"))

    with pytest.raises(ConfigNotFoundError, match="absent.yaml"):
        loader.load()


def test_load_from_explicit_path(config_file):
    """Test loading config from an explicit path."""
    config = ConfigLoader(explicit_path=str(config_file)).load()
    assert config.fusion.model_dim == 16
    assert (config.epochs, config.top_m, config.seed) == (6, 3, 7)


def test_load_from_first_available_path(tmp_path):
    """Test that loader uses first available config file."""
    config1 = tmp_path / "config1.yaml"
    config2 = tmp_path / "config2.yaml"
    write_yaml(config1, {"seed": 1})
    write_yaml(config2, {"seed": 2})

    loader = ConfigLoader()
    loader.SEARCH_PATHS = [str(tmp_path / "missing.yaml"), str(config1), str(config2)]

    assert loader.load().seed == 1
    assert loader.find_config_file() == config1.resolve()


def test_find_config_file_prefers_explicit_path(config_file, tmp_path):
    """Test that an explicit path replaces the search list."""
    loader = ConfigLoader(explicit_path=str(config_file))
    loader.SEARCH_PATHS = [str(tmp_path / "other.yaml")]
    assert loader.find_config_file() == config_file.resolve()

    assert ConfigLoader(explicit_path=str(tmp_path / "absent.yaml")).find_config_file() is None


def test_overrides_beat_file(config_file):
    """Test that key=value overrides win over the file, later ones last."""
    config = ConfigLoader(explicit_path=str(config_file)).load(
        ["seed=9", "fusion.heads=4", "seed=11", "data.synthetic=xor"]
    )
    assert config.seed == 11
    assert config.fusion.heads == 4
    # untouched nested keys survive
    assert config.fusion.model_dim == 16
    assert config.data.synthetic == "xor"


def test_overrides_beat_environment(config_file, monkeypatch):
    """Test precedence: override > file > environment."""
    monkeypatch.setenv("MPCL_EPOCHS", "40")
    monkeypatch.setenv("MPCL_BATCH_SIZE", "4")
    config = ConfigLoader(explicit_path=str(config_file)).load(["top_m=2"])
    assert config.epochs == 6
    assert config.batch_size == 4
    assert config.top_m == 2


def test_invalid_file_content(tmp_path):
    """Test that unparsable YAML is a configuration error."""
    path = tmp_path / "config.yaml"
    path.write_text("invalid: yaml: content: {")

    with pytest.raises(ConfigurationError, match="cannot parse"):
        ConfigLoader(explicit_path=str(path)).load()


def test_top_level_must_be_mapping(tmp_path):
    """Test that a YAML list is rejected."""
    path = tmp_path / "config.yaml"
    path.write_text("- 1\n- 2\n")

    with pytest.raises(ConfigurationError, match="mapping"):
        ConfigLoader(explicit_path=str(path)).load()


def test_invariant_violation_wrapped(config_file):
    """Test that model validation failures surface as ConfigurationError."""
    loader = ConfigLoader(explicit_path=str(config_file))

    with pytest.raises(ConfigurationError, match="invalid configuration"):
        loader.load(["fusion.heads=3"])


def test_empty_file_is_defaults(tmp_path):
    """Test that an empty file means defaults."""
    path = tmp_path / "config.yaml"
    path.write_text("")
    assert ConfigLoader(explicit_path=str(path)).load().seed == 0


def test_parse_override_values():
    """Test that values are parsed as YAML scalars."""
    assert parse_override("seed=3") == (["seed"], 3)
    assert parse_override("learning_rate=1e-3") == (["learning_rate"], 1e-3)
    assert parse_override("fusion.bias=false") == (["fusion", "bias"], False)
    assert parse_override("fusion.modalities=V+T") == (["fusion", "modalities"], "V+T")
    assert parse_override("data.manifest=") == (["data", "manifest"], None)


def test_parse_override_malformed():
    """Test that overrides need a key and an equals sign."""
    with pytest.raises(ConfigOverrideError, match="key=value"):
        parse_override("seed")
    with pytest.raises(ConfigOverrideError):
        parse_override("=3")


def test_apply_overrides_unknown_key():
    """Test that unknown keys are rejected with their dotted path."""
    with pytest.raises(ConfigOverrideError, match="fusion.depth"):
        apply_overrides({}, ["fusion.depth=2"])
    with pytest.raises(ConfigOverrideError, match="seed.value"):
        apply_overrides({}, ["seed.value=2"])


def test_apply_overrides_leaves_input_untouched():
    """Test that the raw data is copied, not mutated."""
    data = {"fusion": {"model_dim": 8}}
    merged = apply_overrides(data, ["fusion.model_dim=16"])
    assert merged == {"fusion": {"model_dim": 16}}
    assert data == {"fusion": {"model_dim": 8}}
