"""Tests for configuration models."""

import pytest
from pydantic import ValidationError

from multipcl.config.models import (
    DEFAULT_INPUT_DIMS,
    DataSettings,
    ExperimentConfig,
    FusionConfig,
    IngestSettings,
    Logging,
)
from multipcl.types import MODALITY_ORDER, Modality

V, F, A, T = Modality.VIDEO, Modality.FACE, Modality.AUDIO, Modality.TEXT


def test_fusion_defaults():
    """Test fusion defaults: d = 256, h = 4, all four modalities, every ordered pair."""
    fusion = FusionConfig()
    assert (fusion.model_dim, fusion.heads, fusion.head_dim) == (256, 4, 64)
    assert fusion.modalities == list(MODALITY_ORDER)
    assert len(fusion.resolved_pairs) == 16
    assert fusion.subset_key == "V+F+A+T"
    assert fusion.input_dims == DEFAULT_INPUT_DIMS
    assert fusion.mask_absent_faces is False


def test_fusion_subset_key_parsing():
    """Test that subset keys are accepted for modalities, in written order."""
    fusion = FusionConfig(modalities="T+v")
    assert fusion.modalities == [T, V]
    assert fusion.resolved_pairs == [(T, T), (T, V), (V, T), (V, V)]


def test_fusion_heads_must_divide_dim():
    """Test that model_dim must be divisible by heads."""
    with pytest.raises(ValidationError, match="divisible"):
        FusionConfig(model_dim=10, heads=4)


def test_fusion_pairs_within_subset():
    """Test that explicit pairs must stay within S x S."""
    FusionConfig(modalities=[V, T], pairs=[(V, T)])
    with pytest.raises(ValidationError, match="outside the subset"):
        FusionConfig(modalities=[V, T], pairs=[(V, A)])
    with pytest.raises(ValidationError, match="must not be empty"):
        FusionConfig(modalities=[V, T], pairs=[])


def test_fusion_rejects_duplicates_and_missing_dims():
    """Test modality and input dimension checks."""
    with pytest.raises(ValidationError, match="duplicate"):
        FusionConfig(modalities=[V, V])
    with pytest.raises(ValidationError, match="input_dims missing"):
        FusionConfig(modalities=[V, T], input_dims={V: 8})
    with pytest.raises(ValidationError, match="positive"):
        FusionConfig(modalities=[V], input_dims={V: 0})


def test_fusion_with_modalities_restricts_pairs():
    """Test that restricting the subset restricts an explicit pair set."""
    fusion = FusionConfig(pairs=[(V, T), (T, V), (A, F)])
    restricted = fusion.with_modalities([V, T])
    assert restricted.modalities == [V, T]
    assert restricted.pairs == [(V, T), (T, V)]
    with pytest.raises(ValidationError):
        fusion.with_modalities([V, F])


def test_ingest_defaults():
    """Test ingest defaults: 16 kHz audio, 13 coefficients, 25 ms / 10 ms frames."""
    ingest = IngestSettings()
    assert ingest.sample_rate == 16000
    assert ingest.n_coeff == 13
    assert (ingest.window_ms, ingest.hop_ms) == (25.0, 10.0)
    assert ingest.face_detector == "none"
    with pytest.raises(ValidationError):
        IngestSettings(face_detector="haar")


def test_data_defaults():
    """Test data settings defaults."""
    data = DataSettings()
    assert data.manifest is None
    assert data.cache_dir == "cache"
    assert data.synthetic == "none"


def test_logging_defaults():
    """Test logging defaults."""
    logging = Logging()
    assert logging.level == "info"
    assert logging.format == "auto"


def test_logging_validates_level():
    """Test logging level validation."""
    # valid levels
    for level in ["debug", "INFO", "warn", "warning", "error", "critical"]:
        log = Logging(level=level)
        assert log.level == level.lower()

    # invalid level
    with pytest.raises(ValidationError, match="Invalid log level"):
        Logging(level="invalid")


def test_logging_validates_format():
    """Test logging format validation."""
    for fmt in ["auto", "json", "Console"]:
        log = Logging(format=fmt)
        assert log.format == fmt.lower()

    with pytest.raises(ValidationError, match="Invalid log format"):
        Logging(format="text")


def test_experiment_defaults():
    """Test the default protocol: 20 epochs, batch 10, lr 1e-4, 5 folds, top 5."""
    config = ExperimentConfig()
    assert (config.epochs, config.batch_size, config.folds, config.top_m) == (20, 10, 5, 5)
    assert config.learning_rate == 1e-4
    assert config.variant == "mhca"
    assert config.top_m_scope == "fold"
    assert config.modalities == list(MODALITY_ORDER)


def test_experiment_protocol_invariants():
    """Test epochs >= top_m >= 1, batch_size >= 1, folds >= 2 and seed >= 0."""
    with pytest.raises(ValidationError, match="top_m"):
        ExperimentConfig(top_m=0)
    with pytest.raises(ValidationError, match="epochs"):
        ExperimentConfig(epochs=3, top_m=5)
    with pytest.raises(ValidationError, match="batch_size"):
        ExperimentConfig(batch_size=0)
    with pytest.raises(ValidationError, match="folds"):
        ExperimentConfig(folds=1)
    with pytest.raises(ValidationError, match="seed"):
        ExperimentConfig(seed=-1)
    with pytest.raises(ValidationError):
        ExperimentConfig(variant="lstm")


def test_experiment_with_run():
    """Test that with_run changes only the subset and the variant."""
    config = ExperimentConfig(seed=3, epochs=7, top_m=2)
    run = config.with_run([A, T], "fc")
    assert run.modalities == [A, T]
    assert run.variant == "fc"
    assert (run.seed, run.epochs, run.top_m) == (3, 7, 2)
    assert config.modalities == list(MODALITY_ORDER)


def test_experiment_env_override(monkeypatch):
    """Test MPCL_ environment variables, nested with a double underscore."""
    monkeypatch.setenv("MPCL_SEED", "42")
    monkeypatch.setenv("MPCL_FUSION__MODEL_DIM", "16")
    config = ExperimentConfig()
    assert config.seed == 42
    assert config.fusion.model_dim == 16
