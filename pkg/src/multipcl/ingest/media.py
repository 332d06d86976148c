"""Media decoding adapters and frame sampling."""

import math
import shutil
import subprocess
from collections.abc import Sequence
from pathlib import Path
from typing import Protocol

import cv2
import numpy as np
import numpy.typing as npt
import structlog

from multipcl.corpus.manifest import ManifestEntry
from multipcl.errors import IngestError
from multipcl.types import AudioSegment, FrameSequence

logger = structlog.get_logger()

Image = npt.NDArray[np.uint8]


class FrameDecoder(Protocol):
    """Reads selected frames from a video file."""

    def decode(self, path: Path, indices: Sequence[int]) -> list[Image]:
        """Return RGB frames at the given ascending native indices.

        Stops early, returning fewer frames, when the stream ends first.
        """
        ...


class AudioDecoder(Protocol):
    """Reads the audio track of a media file as mono samples."""

    def decode(self, path: Path, sample_rate: int) -> AudioSegment: ...


class OpenCVFrameDecoder:
    """Frame decoder backed by cv2.VideoCapture."""

    def decode(self, path: Path, indices: Sequence[int]) -> list[Image]:
        """Walk the stream once, keeping the requested frames.

        Args:
            path: Video file.
            indices: Ascending native frame indices.

        Returns:
            RGB frames, in index order.

        Raises:
            OSError: If the file cannot be opened.
        """
        capture = cv2.VideoCapture(str(path))
        if not capture.isOpened():
            raise OSError(f"cannot open video {path}")

        wanted = sorted(set(indices))
        frames: list[Image] = []
        try:
            position = 0
            for index in wanted:
                # grab() skips decoding of frames we do not keep
                while position < index:
                    if not capture.grab():
                        return frames
                    position += 1
                ok, frame = capture.read()
                if not ok:
                    return frames
                position += 1
                frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
        finally:
            capture.release()
        return frames


class FFmpegAudioDecoder:
    """Audio decoder that pipes mono float32 PCM out of the ffmpeg executable."""

    def __init__(self, executable: str = "ffmpeg", timeout: float = 300.0) -> None:
        """
        Initialize the decoder.

        Args:
            executable: ffmpeg binary name or path
            timeout: Seconds before a decode is abandoned
        """
        self.executable = executable
        self.timeout = timeout

    def decode(self, path: Path, sample_rate: int) -> AudioSegment:
        """Decode and resample the first audio stream.

        Raises:
            OSError: If ffmpeg is missing or exits with an error.
        """
        if shutil.which(self.executable) is None:
            raise OSError(f"{self.executable} not found on PATH")
        command = [
            self.executable,
            "-nostdin",
            "-v",
            "error",
            "-i",
            str(path),
            "-vn",
            "-ac",
            "1",
            "-ar",
            str(sample_rate),
            "-f",
            "f32le",
            "-",
        ]
        try:
            result = subprocess.run(command, capture_output=True, timeout=self.timeout, check=False)
        except subprocess.TimeoutExpired as e:
            raise OSError(f"ffmpeg timed out after {self.timeout}s") from e
        if result.returncode != 0:
            stderr = result.stderr.decode("utf-8", errors="replace").strip()
            raise OSError(f"ffmpeg exited with {result.returncode}: {stderr}")
        samples = np.frombuffer(result.stdout, dtype="<f4").astype(np.float32)
        return AudioSegment(samples=samples, sample_rate=sample_rate)


def sample_indices(
    duration_s: float, native_fps: float, target_fps: float, max_frames: int
) -> list[int]:
    """Native frame indices for uniform sampling at target_fps.

    Frame k sits at time k / target_fps; the count is
    max(1, min(max_frames, floor(duration_s * target_fps))).
    """
    count = max(1, min(max_frames, math.floor(round(duration_s * target_fps, 6))))
    last = max(0, math.ceil(round(duration_s * native_fps, 6)) - 1)
    return [min(last, math.floor(round(k * native_fps / target_fps, 6))) for k in range(count)]


def resolve_media(entry: ManifestEntry, media_root: Path | None) -> Path:
    """Absolute media path for an entry."""
    path = Path(entry.video_path)
    if media_root is not None and not path.is_absolute():
        path = media_root / path
    return path


def extract_frames(
    entry: ManifestEntry,
    target_fps: float,
    max_frames: int,
    *,
    media_root: Path | None = None,
    decoder: FrameDecoder | None = None,
) -> FrameSequence:
    """Sample frames uniformly from an entry's video.

    Args:
        entry: Corpus entry; its fps is taken as the native frame rate.
        target_fps: Sampling rate, > 0.
        max_frames: Frame cap.
        media_root: Directory relative media paths resolve against.
        decoder: Frame decoder (default: OpenCV).

    Returns:
        FrameSequence with at most max_frames frames.

    Raises:
        IngestError: If the media is unreadable or yields no frames.
    """
    if target_fps <= 0:
        raise IngestError(entry.id, f"target_fps must be positive, got {target_fps}")
    decoder = decoder or OpenCVFrameDecoder()
    path = resolve_media(entry, media_root)
    indices = sample_indices(entry.duration_s, entry.fps, target_fps, max_frames)
    unique = sorted(set(indices))

    try:
        decoded = decoder.decode(path, unique)
    except (OSError, cv2.error) as e:
        raise IngestError(entry.id, f"cannot decode {path}: {e}") from e
    # upsampling repeats native frames
    by_index = dict(zip(unique, decoded, strict=False))
    frames = [by_index[i] for i in indices if i in by_index]
    if not frames:
        raise IngestError(entry.id, f"no decodable frames in {path}")
    if len({frame.shape for frame in frames}) != 1:
        raise IngestError(entry.id, "decoded frames differ in size")
    if len(frames) < len(indices):
        logger.debug("video ended early", entry=entry.id, wanted=len(indices), got=len(frames))

    return FrameSequence(frames=np.stack(frames).astype(np.uint8), source_fps=target_fps)


def extract_audio(
    entry: ManifestEntry,
    sample_rate: int,
    *,
    media_root: Path | None = None,
    decoder: AudioDecoder | None = None,
) -> AudioSegment:
    """Decode an entry's audio track as mono samples at sample_rate.

    Raises:
        IngestError: If decoding fails.
    """
    decoder = decoder or FFmpegAudioDecoder()
    path = resolve_media(entry, media_root)
    try:
        return decoder.decode(path, sample_rate)
    except OSError as e:
        raise IngestError(entry.id, f"cannot decode audio from {path}: {e}") from e
