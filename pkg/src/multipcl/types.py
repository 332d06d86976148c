"""Core data types for multipcl."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from multipcl.errors import ContractError

FloatMatrix = npt.NDArray[np.float32]


class Modality(StrEnum):
    """The four input channels of a video."""

    VIDEO = "video"
    FACE = "face"
    AUDIO = "audio"
    TEXT = "text"

    @property
    def code(self) -> str:
        """Single-letter code used in subset keys and the feature cache."""
        return _CODES[self]

    @classmethod
    def from_code(cls, code: str) -> "Modality":
        """Look up a modality by its single-letter code.

        Args:
            code: One of V, F, A, T (case-insensitive).

        Returns:
            Matching Modality.

        Raises:
            ValueError: If the code is unknown.
        """
        for modality, c in _CODES.items():
            if c == code.upper():
                return modality
        raise ValueError(f"Unknown modality code: {code!r}")


_CODES = {
    Modality.VIDEO: "V",
    Modality.FACE: "F",
    Modality.AUDIO: "A",
    Modality.TEXT: "T",
}

# canonical order of bundle sections and of the default pair set
MODALITY_ORDER = (Modality.VIDEO, Modality.FACE, Modality.AUDIO, Modality.TEXT)


@dataclass
class FrameSequence:
    """Frames sampled from one video.

    Attributes:
        frames: Array of shape (n, height, width, channels), uint8, RGB.
        source_fps: Sampling rate actually used.
    """

    frames: npt.NDArray[np.uint8]
    source_fps: float

    def __post_init__(self) -> None:
        if self.frames.ndim != 4 or self.frames.shape[0] < 1:
            raise ContractError(
                f"frames must be a non-empty (n, h, w, c) array, got shape {self.frames.shape}"
            )
        if self.source_fps <= 0:
            raise ContractError(f"source_fps must be positive, got {self.source_fps}")

    def __len__(self) -> int:
        return int(self.frames.shape[0])


@dataclass
class FaceGateResult:
    """Per-frame face detection outcome.

    Attributes:
        flags: True where a face was detected.
        crops: Cropped face image where the flag is set, None elsewhere.
    """

    flags: list[bool]
    crops: list[npt.NDArray[np.uint8] | None]

    def __post_init__(self) -> None:
        if len(self.flags) != len(self.crops):
            raise ContractError("flags and crops must have the same length")
        for i, (flag, crop) in enumerate(zip(self.flags, self.crops, strict=True)):
            if flag != (crop is not None):
                raise ContractError(f"frame {i}: crop must be present iff face flag is set")

    def __len__(self) -> int:
        return len(self.flags)

    @property
    def detected(self) -> int:
        """Number of frames with a detected face."""
        return sum(self.flags)


@dataclass
class AudioSegment:
    """Mono waveform.

    Attributes:
        samples: 1-D float array in [-1, 1].
        sample_rate: Samples per second.
    """

    samples: npt.NDArray[np.floating]
    sample_rate: int


@dataclass
class ModalityBundle:
    """Encoded feature sequences for one video.

    Every matrix is stored as float32. A modality is present when it was encoded,
    even if its sequence has zero rows (e.g. an empty transcript).

    Attributes:
        features: Modality -> (rows, dim) matrix.
    """

    features: dict[Modality, FloatMatrix] = field(default_factory=dict)

    def __post_init__(self) -> None:
        checked: dict[Modality, FloatMatrix] = {}
        for modality, values in self.features.items():
            matrix = np.ascontiguousarray(values, dtype=np.float32)
            if matrix.ndim != 2:
                raise ContractError(f"{modality}: features must be 2-D, got {matrix.ndim}-D")
            if not np.all(np.isfinite(matrix)):
                raise ContractError(f"{modality}: features contain non-finite values")
            checked[Modality(modality)] = matrix
        self.features = checked

    @classmethod
    def from_mapping(cls, features: Mapping[Modality, npt.ArrayLike]) -> "ModalityBundle":
        """Build a bundle from any array-likes."""
        return cls({Modality(m): np.asarray(v, dtype=np.float32) for m, v in features.items()})

    @property
    def present(self) -> frozenset[Modality]:
        """Modalities that were encoded."""
        return frozenset(self.features)

    def get(self, modality: Modality) -> FloatMatrix | None:
        """Matrix for a modality, or None if it was not encoded."""
        return self.features.get(modality)

    @property
    def z(self) -> FloatMatrix | None:
        return self.features.get(Modality.VIDEO)

    @property
    def z_v(self) -> FloatMatrix | None:
        return self.features.get(Modality.FACE)

    @property
    def z_a(self) -> FloatMatrix | None:
        return self.features.get(Modality.AUDIO)

    @property
    def z_t(self) -> FloatMatrix | None:
        return self.features.get(Modality.TEXT)

    def restricted(self, modalities: Sequence[Modality]) -> "ModalityBundle":
        """Copy holding only the given modalities (those present)."""
        return ModalityBundle({m: self.features[m] for m in modalities if m in self.features})


@dataclass
class Sample:
    """A labeled bundle ready for training or evaluation.

    Attributes:
        id: Corpus entry id.
        label: 0 = non-PCL, 1 = PCL.
        bundle: Encoded features.
    """

    id: str
    label: int
    bundle: ModalityBundle
