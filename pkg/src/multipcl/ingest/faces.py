"""Per-frame face gating."""

import math
from collections.abc import Sequence
from typing import Any, Protocol

import numpy as np
import numpy.typing as npt
import structlog

from multipcl.errors import ConfigurationError
from multipcl.types import FaceGateResult, FrameSequence

logger = structlog.get_logger()

Box = tuple[float, float, float, float]


class FaceDetector(Protocol):
    """Returns zero or more (x1, y1, x2, y2) boxes for one RGB frame."""

    def detect(self, frame: npt.NDArray[np.uint8]) -> Sequence[Box]: ...


class NoFaceDetector:
    """Detector that never finds a face; every face row is zero-filled."""

    def detect(self, frame: npt.NDArray[np.uint8]) -> Sequence[Box]:
        return []


class MTCNNFaceDetector:
    """facenet-pytorch MTCNN adapter (install the "faces" extra)."""

    def __init__(self, device: str = "cpu", min_face_size: int = 20) -> None:
        try:
            from facenet_pytorch import MTCNN
        except ImportError as e:
            raise ConfigurationError(
                "face_detector=mtcnn needs facenet-pytorch (pip install multipcl[faces])"
            ) from e
        self._mtcnn: Any = MTCNN(keep_all=True, device=device, min_face_size=min_face_size)

    def detect(self, frame: npt.NDArray[np.uint8]) -> Sequence[Box]:
        boxes, _ = self._mtcnn.detect(frame)
        if boxes is None:
            return []
        return [tuple(float(v) for v in box[:4]) for box in boxes]  # type: ignore[misc]


def build_detector(name: str) -> FaceDetector:
    """Detector for an IngestSettings.face_detector value."""
    if name == "mtcnn":
        return MTCNNFaceDetector()
    if name == "none":
        return NoFaceDetector()
    raise ConfigurationError(f"unknown face detector: {name}")


def _clamp(box: Box, width: int, height: int) -> tuple[int, int, int, int] | None:
    x1, y1, x2, y2 = box
    left = max(0, math.floor(x1))
    top = max(0, math.floor(y1))
    right = min(width, math.ceil(x2))
    bottom = min(height, math.ceil(y2))
    if right <= left or bottom <= top:
        return None
    return left, top, right, bottom


def largest_crop(
    frame: npt.NDArray[np.uint8], boxes: Sequence[Box]
) -> npt.NDArray[np.uint8] | None:
    """Crop the largest-area box (after clamping to the frame); None if no box is usable.

    Ties keep the first box.
    """
    height, width = frame.shape[:2]
    best: tuple[int, int, int, int] | None = None
    best_area = 0
    for box in boxes:
        clamped = _clamp(box, width, height)
        if clamped is None:
            continue
        left, top, right, bottom = clamped
        area = (right - left) * (bottom - top)
        if area > best_area:
            best, best_area = clamped, area
    if best is None:
        return None
    left, top, right, bottom = best
    return frame[top:bottom, left:right].copy()


def gate_faces(frames: FrameSequence, detector: FaceDetector) -> FaceGateResult:
    """Run the detector on every frame and crop the dominant face.

    A detector failure on a frame is logged and leaves that frame unflagged.

    Args:
        frames: Sampled frames.
        detector: Face detector.

    Returns:
        FaceGateResult aligned to the frame indices.
    """
    flags: list[bool] = []
    crops: list[npt.NDArray[np.uint8] | None] = []
    for index, frame in enumerate(frames.frames):
        try:
            boxes = detector.detect(frame)
        except Exception as e:
            logger.warning("face detector failed", frame=index, error=str(e))
            boxes = []
        crop = largest_crop(frame, boxes)
        flags.append(crop is not None)
        crops.append(crop)

    result = FaceGateResult(flags=flags, crops=crops)
    logger.debug("faces gated", frames=len(result), detected=result.detected)
    return result
