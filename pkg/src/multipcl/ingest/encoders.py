"""Per-modality encoders.

Production encoders (pretrained vision, facial-expression and text models) plug in
by subclassing Encoder. The toy encoders here are deterministic and small, and
exercise every shape contract.
"""

import hashlib
from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import Any, Protocol

import numpy as np
import numpy.typing as npt
import torch
import torchaudio.functional as AF

from multipcl.config.models import IngestSettings
from multipcl.errors import ContractError
from multipcl.ingest.audio import mfcc
from multipcl.seeding import numpy_rng
from multipcl.types import AudioSegment, FloatMatrix, Modality


class Encoder(ABC):
    """Maps a raw segment of one modality to feature rows of a fixed width.

    Attributes:
        modality: Modality this encoder serves.
        dim: Output dimension; fixed for the encoder's lifetime.
        deterministic: Identical inputs always give identical outputs.
    """

    modality: Modality
    deterministic: bool = True

    def __init__(self, dim: int) -> None:
        if dim <= 0:
            raise ContractError(f"encoder dimension must be positive, got {dim}")
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    @abstractmethod
    def encode(self, segment: Any) -> npt.NDArray[np.floating]:
        """Encode one raw segment into a (rows, dim) array."""

    def __call__(self, segment: Any) -> FloatMatrix:
        """Encode and enforce the output contract.

        Raises:
            ContractError: If the output is not (rows, dim) or holds non-finite values.
        """
        output = np.asarray(self.encode(segment), dtype=np.float32)
        if output.ndim != 2 or output.shape[1] != self.dim:
            raise ContractError(
                f"{type(self).__name__} declared dim {self.dim}, produced shape {output.shape}"
            )
        if not np.all(np.isfinite(output)):
            raise ContractError(f"{type(self).__name__} produced non-finite values")
        return output


class ChannelMeanEncoder(Encoder):
    """Per-image channel means scaled to [0, 1], projected to dim.

    With dim equal to the channel count the means are returned unprojected.
    Serves both video frames and face crops.
    """

    def __init__(self, modality: Modality, dim: int, channels: int = 3, seed: int = 0) -> None:
        super().__init__(dim)
        self.modality = modality
        self.channels = channels
        self._projection: npt.NDArray[np.float64] | None = None
        if dim != channels:
            rng = numpy_rng(seed, "encoder", modality)
            self._projection = rng.standard_normal((channels, dim)) / np.sqrt(channels)

    def encode(self, segment: Sequence[npt.NDArray[np.uint8]]) -> npt.NDArray[np.floating]:
        if len(segment) == 0:
            return np.zeros((0, self.dim))
        pixels = [np.asarray(image, dtype=np.float64).reshape(-1, self.channels) for image in segment]
        means = np.stack([p.mean(axis=0) for p in pixels]) / 255.0
        if self._projection is None:
            return means
        return means @ self._projection


class HashedCharEncoder(Encoder):
    """Hashed bag-of-characters text encoder.

    Each character hashes to a signed bucket. One pooled row (the mean over
    characters) by default, or one row per character with per_token.
    An empty transcript encodes to zero rows.
    """

    modality = Modality.TEXT

    def __init__(self, dim: int, per_token: bool = False) -> None:
        super().__init__(dim)
        self.per_token = per_token

    def _bucket(self, char: str) -> tuple[int, float]:
        digest = int.from_bytes(
            hashlib.blake2b(char.encode("utf-8"), digest_size=8).digest(), "little"
        )
        return digest % self.dim, 1.0 if (digest >> 63) & 1 else -1.0

    def encode(self, segment: str) -> npt.NDArray[np.floating]:
        rows = np.zeros((len(segment), self.dim))
        for i, char in enumerate(segment):
            bucket, sign = self._bucket(char)
            rows[i, bucket] = sign
        if self.per_token or len(segment) == 0:
            return rows
        return rows.mean(axis=0, keepdims=True)


class MFCCEncoder(Encoder):
    """Audio encoder: MFCC rows, resampling first when the rate differs."""

    modality = Modality.AUDIO

    def __init__(self, settings: IngestSettings) -> None:
        super().__init__(settings.n_coeff)
        self.settings = settings

    def encode(self, segment: AudioSegment) -> npt.NDArray[np.floating]:
        s = self.settings
        samples = np.asarray(segment.samples, dtype=np.float64)
        if segment.sample_rate != s.sample_rate:
            samples = AF.resample(
                torch.as_tensor(samples), segment.sample_rate, s.sample_rate
            ).numpy()
        return mfcc(
            samples,
            s.sample_rate,
            s.n_coeff,
            s.window_ms,
            s.hop_ms,
            n_mels=s.n_mels,
            pre_emphasis=s.pre_emphasis,
        )


class Transcriber(Protocol):
    """Speech-to-text seam; used only when a manifest transcript is empty."""

    def transcribe(self, audio: AudioSegment) -> str: ...


def build_encoders(settings: IngestSettings, seed: int = 0) -> dict[Modality, Encoder]:
    """The default encoder set for all four modalities."""
    return {
        Modality.VIDEO: ChannelMeanEncoder(Modality.VIDEO, settings.video_dim, seed=seed),
        Modality.FACE: ChannelMeanEncoder(Modality.FACE, settings.face_dim, seed=seed),
        Modality.AUDIO: MFCCEncoder(settings),
        Modality.TEXT: HashedCharEncoder(settings.text_dim, per_token=settings.text_per_token),
    }
