"""Assemble a ModalityBundle from raw segments and encoders."""

from collections.abc import Mapping

import numpy as np

from multipcl.errors import ConfigurationError, ContractError
from multipcl.ingest.encoders import Encoder
from multipcl.types import (
    AudioSegment,
    FaceGateResult,
    FloatMatrix,
    FrameSequence,
    Modality,
    ModalityBundle,
)


def encode_bundle(
    frames: FrameSequence,
    gate: FaceGateResult,
    audio: AudioSegment | None,
    transcript: str,
    encoders: Mapping[Modality, Encoder],
) -> ModalityBundle:
    """Encode every modality that has an encoder.

    Face rows for frames without a detected face are exact zeros.

    Args:
        frames: Sampled video frames (n).
        gate: Face gate aligned to frames.
        audio: Waveform; required when an audio encoder is given.
        transcript: Transcript text, possibly empty.
        encoders: Modality -> encoder; the keys are the modalities produced.

    Returns:
        ModalityBundle with one matrix per encoded modality.

    Raises:
        ConfigurationError: If an encoder is registered under the wrong modality or
            audio is missing.
        ContractError: If an encoder breaks its output contract or the gate is misaligned.
    """
    for modality, encoder in encoders.items():
        if encoder.modality != modality:
            raise ConfigurationError(
                f"{type(encoder).__name__} encodes {encoder.modality}, registered for {modality}"
            )

    n = len(frames)
    features: dict[Modality, FloatMatrix] = {}

    if Modality.VIDEO in encoders:
        z = encoders[Modality.VIDEO](frames.frames)
        if z.shape[0] != n:
            raise ContractError(f"video encoder produced {z.shape[0]} rows for {n} frames")
        features[Modality.VIDEO] = z

    if Modality.FACE in encoders:
        if len(gate) != n:
            raise ContractError(f"face gate covers {len(gate)} frames, expected {n}")
        encoder = encoders[Modality.FACE]
        z_v = np.zeros((n, encoder.dim), dtype=np.float32)
        detected = [i for i, flag in enumerate(gate.flags) if flag]
        if detected:
            rows = encoder([gate.crops[i] for i in detected])
            if rows.shape[0] != len(detected):
                raise ContractError(
                    f"face encoder produced {rows.shape[0]} rows for {len(detected)} crops"
                )
            z_v[detected] = rows
        features[Modality.FACE] = z_v

    if Modality.AUDIO in encoders:
        if audio is None:
            raise ConfigurationError("an audio encoder was given but no audio")
        features[Modality.AUDIO] = encoders[Modality.AUDIO](audio)

    if Modality.TEXT in encoders:
        features[Modality.TEXT] = encoders[Modality.TEXT](transcript)

    return ModalityBundle(features)
