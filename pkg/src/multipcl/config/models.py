"""Configuration models using Pydantic."""

from collections.abc import Sequence
from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from multipcl.types import MODALITY_ORDER, Modality

Pair = tuple[Modality, Modality]

DEFAULT_INPUT_DIMS: dict[Modality, int] = {
    Modality.VIDEO: 32,
    Modality.FACE: 32,
    Modality.AUDIO: 13,
    Modality.TEXT: 64,
}


class FusionConfig(BaseModel):
    """Cross-modal attention fusion hyperparameters.

    Attributes:
        model_dim: Shared model dimension d.
        heads: Number of attention heads h (must divide d).
        modalities: Modality subset S, in order.
        pairs: Ordered (query, key) pair set P; None means every ordered pair over S,
            self-pairs included.
        input_dims: Raw feature dimension per modality.
        dropout: Dropout rate on attention weights during training.
        share_pair_params: Use one Q/K/V/O block for all pairs instead of one per pair.
        mask_absent_faces: Exclude zero-filled face rows from attention keys.
        bias: Whether linear layers carry a bias term.
    """

    model_dim: int = Field(default=256, gt=0)
    heads: int = Field(default=4, gt=0)
    modalities: list[Modality] = Field(default_factory=lambda: list(MODALITY_ORDER))
    pairs: list[Pair] | None = None
    input_dims: dict[Modality, int] = Field(default_factory=lambda: dict(DEFAULT_INPUT_DIMS))
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    share_pair_params: bool = False
    mask_absent_faces: bool = False
    bias: bool = True

    @field_validator("modalities", mode="before")
    @classmethod
    def parse_modalities(cls, v: object) -> object:
        """Accept subset keys such as "V+T" as well as lists.

        Args:
            v: Raw value.

        Returns:
            List of modality names or codes.
        """
        if isinstance(v, str):
            return [Modality.from_code(c) if len(c) == 1 else c for c in v.split("+")]
        return v

    @model_validator(mode="after")
    def validate_structure(self) -> "FusionConfig":
        """Check head divisibility, the pair set and input dimensions.

        Returns:
            Validated FusionConfig instance.

        Raises:
            ValueError: If any structural invariant fails.
        """
        if self.model_dim % self.heads != 0:
            raise ValueError(
                f"model_dim ({self.model_dim}) must be divisible by heads ({self.heads})"
            )
        if not self.modalities:
            raise ValueError("modalities must not be empty")
        if len(set(self.modalities)) != len(self.modalities):
            raise ValueError(f"duplicate modalities: {self.modalities}")
        if self.pairs is not None:
            if not self.pairs:
                raise ValueError("pairs must not be empty")
            subset = set(self.modalities)
            outside = [p for p in self.pairs if not set(p) <= subset]
            if outside:
                raise ValueError(f"pairs reference modalities outside the subset: {outside}")
        missing = [m for m in self.modalities if m not in self.input_dims]
        if missing:
            raise ValueError(f"input_dims missing for: {missing}")
        bad = {m: d for m, d in self.input_dims.items() if d <= 0}
        if bad:
            raise ValueError(f"input_dims must be positive: {bad}")
        return self

    @property
    def head_dim(self) -> int:
        """Per-head dimension d_k = d / h."""
        return self.model_dim // self.heads

    @property
    def resolved_pairs(self) -> list[Pair]:
        """The pair set actually used."""
        if self.pairs is not None:
            return list(self.pairs)
        return [(i, j) for i in self.modalities for j in self.modalities]

    @property
    def subset_key(self) -> str:
        """Subset key such as "V+T"."""
        return "+".join(m.code for m in self.modalities)

    def with_modalities(self, modalities: Sequence[Modality]) -> "FusionConfig":
        """Copy restricted to a modality subset; an explicit pair set is restricted to S x S.

        Raises:
            ValueError: If the restriction leaves no pairs.
        """
        data = self.model_dump()
        data["modalities"] = list(modalities)
        if self.pairs is not None:
            data["pairs"] = [p for p in self.pairs if p[0] in modalities and p[1] in modalities]
        return FusionConfig.model_validate(data)


class IngestSettings(BaseModel):
    """Feature extraction settings.

    Attributes:
        target_fps: Frame sampling rate.
        max_frames: Frame cap per video.
        sample_rate: Audio resample rate in Hz.
        n_coeff: MFCC coefficients per audio frame.
        window_ms: MFCC analysis window.
        hop_ms: MFCC hop.
        n_mels: Mel filterbank size.
        pre_emphasis: Pre-emphasis coefficient.
        video_dim: Output dimension of the video encoder.
        face_dim: Output dimension of the face encoder.
        text_dim: Output dimension of the text encoder.
        text_per_token: Emit one text row per character instead of a single pooled row.
        face_detector: Face detector backend.
        ffmpeg: ffmpeg executable used for audio extraction.
    """

    target_fps: float = Field(default=1.0, gt=0)
    max_frames: int = Field(default=256, gt=0)
    sample_rate: int = Field(default=16000, gt=0)
    n_coeff: int = Field(default=13, gt=0)
    window_ms: float = Field(default=25.0, gt=0)
    hop_ms: float = Field(default=10.0, gt=0)
    n_mels: int = Field(default=40, gt=0)
    pre_emphasis: float = Field(default=0.97, ge=0.0, lt=1.0)
    video_dim: int = Field(default=32, gt=0)
    face_dim: int = Field(default=32, gt=0)
    text_dim: int = Field(default=64, gt=0)
    text_per_token: bool = False
    face_detector: Literal["none", "mtcnn"] = "none"
    ffmpeg: str = "ffmpeg"


class DataSettings(BaseModel):
    """Where corpus inputs and artifacts live.

    Attributes:
        manifest: Manifest file (line-delimited records).
        media_root: Directory media paths are relative to (default: manifest directory).
        annotations: Annotation table for agreement statistics.
        cache_dir: Feature cache directory.
        checkpoint: Model checkpoint used by predict.
        synthetic: Use a generated corpus instead of a manifest.
        synthetic_size: Number of generated samples.
    """

    manifest: str | None = None
    media_root: str | None = None
    annotations: str | None = None
    cache_dir: str = "cache"
    checkpoint: str | None = None
    synthetic: Literal["none", "separable", "xor"] = "none"
    synthetic_size: int = Field(default=60, gt=0)


class Logging(BaseModel):
    """Logging configuration.

    Attributes:
        level: Log level (debug, info, warn, error, critical).
        format: Output format (auto, json, console).
    """

    level: str = "info"
    format: str = "auto"

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate and normalize log level.

        Args:
            v: Input log level string.

        Returns:
            Lowercase validated log level.

        Raises:
            ValueError: If level is not recognized.
        """
        valid_levels = ["debug", "info", "warn", "warning", "error", "critical"]
        if v.lower() not in valid_levels:
            raise ValueError(f"Invalid log level: {v}. Must be one of {valid_levels}")
        return v.lower()

    @field_validator("format")
    @classmethod
    def validate_format(cls, v: str) -> str:
        """Validate and normalize log format.

        Args:
            v: Input log format string.

        Returns:
            Lowercase validated log format.

        Raises:
            ValueError: If format is not recognized.
        """
        valid_formats = ["auto", "json", "console"]
        if v.lower() not in valid_formats:
            raise ValueError(f"Invalid log format: {v}. Must be one of {valid_formats}")
        return v.lower()


class ExperimentConfig(BaseSettings):
    """Experiment protocol and everything it needs.

    Supports environment variable overrides with MPCL_ prefix.

    Attributes:
        fusion: Fusion model hyperparameters, including the modality subset.
        variant: Fusion variant: cross-modal attention or the fully connected baseline.
        epochs: Training epochs per fold.
        batch_size: Mini-batch size.
        learning_rate: Adam learning rate.
        folds: Cross-validation folds k.
        seed: Root seed.
        top_m: Number of best epochs averaged per fold.
        top_m_scope: Average top epochs per fold, or per epoch pooled across folds.
        threshold: Probability at or above which a video is predicted PCL.
        ingest: Feature extraction settings.
        data: Input and artifact locations.
        logging: Logging configuration.
    """

    model_config = SettingsConfigDict(
        env_prefix="MPCL_",
        env_nested_delimiter="__",
        case_sensitive=False,
    )

    fusion: FusionConfig = Field(default_factory=FusionConfig)
    variant: Literal["mhca", "fc"] = "mhca"
    epochs: int = 20
    batch_size: int = 10
    learning_rate: float = Field(default=1e-4, gt=0)
    folds: int = 5
    seed: int = Field(default=0, ge=0)
    top_m: int = 5
    top_m_scope: Literal["fold", "pooled"] = "fold"
    threshold: float = Field(default=0.5, gt=0.0, lt=1.0)

    ingest: IngestSettings = Field(default_factory=IngestSettings)
    data: DataSettings = Field(default_factory=DataSettings)
    logging: Logging = Field(default_factory=Logging)

    @model_validator(mode="after")
    def validate_protocol(self) -> "ExperimentConfig":
        """Ensure epochs >= top_m >= 1, batch_size >= 1 and folds >= 2.

        Returns:
            Validated ExperimentConfig instance.

        Raises:
            ValueError: If the protocol is inconsistent.
        """
        if self.top_m < 1:
            raise ValueError(f"top_m must be >= 1, got {self.top_m}")
        if self.epochs < self.top_m:
            raise ValueError(f"epochs ({self.epochs}) must be >= top_m ({self.top_m})")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        return self

    @property
    def modalities(self) -> list[Modality]:
        """Modality subset S."""
        return self.fusion.modalities

    def with_run(self, modalities: Sequence[Modality], variant: str) -> "ExperimentConfig":
        """Copy for one grid run: a modality subset and a fusion variant.

        Returns:
            New validated ExperimentConfig.
        """
        data = self.model_dump()
        data["fusion"] = self.fusion.with_modalities(modalities).model_dump()
        data["variant"] = variant
        return ExperimentConfig.model_validate(data)
