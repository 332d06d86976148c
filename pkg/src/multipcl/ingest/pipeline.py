"""Per-entry and corpus-level ingestion."""

import re
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import structlog

from multipcl.config.models import IngestSettings
from multipcl.corpus.manifest import ManifestEntry
from multipcl.errors import CacheError, DomainError, IngestError
from multipcl.ingest.bundle import encode_bundle
from multipcl.ingest.cache import cache_bundle, load_cached
from multipcl.ingest.encoders import Encoder, Transcriber, build_encoders
from multipcl.ingest.faces import FaceDetector, NoFaceDetector, build_detector, gate_faces
from multipcl.ingest.media import (
    AudioDecoder,
    FFmpegAudioDecoder,
    FrameDecoder,
    OpenCVFrameDecoder,
    extract_audio,
    extract_frames,
)
from multipcl.types import AudioSegment, FaceGateResult, Modality, ModalityBundle, Sample

logger = structlog.get_logger()

CACHE_SUFFIX = ".pclf"


@dataclass
class Ingestor:
    """Everything needed to turn a manifest entry into a bundle.

    Attributes:
        settings: Extraction settings.
        encoders: Modality -> encoder; only these modalities are produced.
        frame_decoder: Video frame reader.
        audio_decoder: Audio track reader.
        face_detector: Face detector for the face gate.
        transcriber: Speech-to-text fallback for empty transcripts.
        media_root: Directory relative media paths resolve against.
    """

    settings: IngestSettings
    encoders: Mapping[Modality, Encoder]
    frame_decoder: FrameDecoder = field(default_factory=OpenCVFrameDecoder)
    audio_decoder: AudioDecoder = field(default_factory=FFmpegAudioDecoder)
    face_detector: FaceDetector = field(default_factory=NoFaceDetector)
    transcriber: Transcriber | None = None
    media_root: Path | None = None

    @classmethod
    def from_settings(
        cls,
        settings: IngestSettings,
        modalities: Sequence[Modality],
        *,
        seed: int = 0,
        media_root: Path | None = None,
    ) -> "Ingestor":
        """Default adapters and toy encoders for the requested modalities."""
        encoders = build_encoders(settings, seed=seed)
        detector = build_detector(settings.face_detector) if Modality.FACE in modalities else None
        return cls(
            settings=settings,
            encoders={m: encoders[m] for m in modalities},
            audio_decoder=FFmpegAudioDecoder(settings.ffmpeg),
            face_detector=detector or NoFaceDetector(),
            media_root=media_root,
        )

    @property
    def output_dims(self) -> dict[Modality, int]:
        """Feature width per produced modality."""
        return {m: e.dim for m, e in self.encoders.items()}


def ingest_entry(entry: ManifestEntry, ingestor: Ingestor) -> ModalityBundle:
    """Frames, face gate, audio and transcript for one entry, encoded.

    Args:
        entry: Corpus entry.
        ingestor: Adapters and encoders.

    Returns:
        ModalityBundle holding the ingestor's modalities.

    Raises:
        IngestError: Carrying the entry id when media cannot be decoded or an encoder
            rejects its input.
        ContractError: If an encoder breaks its output contract (not wrapped).
        ConfigurationError: If an encoder is registered under the wrong modality (not wrapped).
    """
    s = ingestor.settings
    wanted = set(ingestor.encoders)

    frames = extract_frames(
        entry,
        s.target_fps,
        s.max_frames,
        media_root=ingestor.media_root,
        decoder=ingestor.frame_decoder,
    )

    if Modality.FACE in wanted:
        gate = gate_faces(frames, ingestor.face_detector)
    else:
        gate = FaceGateResult(flags=[False] * len(frames), crops=[None] * len(frames))

    transcript = entry.transcript
    audio: AudioSegment | None = None
    if Modality.AUDIO in wanted or (not transcript and ingestor.transcriber is not None):
        audio = extract_audio(
            entry, s.sample_rate, media_root=ingestor.media_root, decoder=ingestor.audio_decoder
        )
    if not transcript and ingestor.transcriber is not None and audio is not None:
        transcript = ingestor.transcriber.transcribe(audio)
        logger.debug("transcribed", entry=entry.id, chars=len(transcript))

    try:
        bundle = encode_bundle(frames, gate, audio, transcript, ingestor.encoders)
    except DomainError as e:
        raise IngestError(entry.id, str(e)) from e

    logger.debug(
        "entry ingested",
        entry=entry.id,
        frames=len(frames),
        faces=gate.detected,
        rows={str(m): int(v.shape[0]) for m, v in bundle.features.items()},
    )
    return bundle


def cache_path(cache_dir: Path, entry_id: str) -> Path:
    """Cache file for an entry id (unsafe characters replaced)."""
    return cache_dir / (re.sub(r"[^A-Za-z0-9._-]", "_", entry_id) + CACHE_SUFFIX)


def _ingest_cached(entry: ManifestEntry, ingestor: Ingestor, cache_dir: Path | None) -> Sample:
    path = cache_path(cache_dir, entry.id) if cache_dir is not None else None
    if path is not None and path.exists():
        try:
            cached = load_cached(path)
        except (CacheError, OSError) as e:
            logger.warning("ignoring unreadable cache entry", entry=entry.id, error=str(e))
        else:
            if set(ingestor.encoders) <= cached.present:
                return Sample(entry.id, entry.label, cached.restricted(list(ingestor.encoders)))
            logger.debug("cache entry lacks modalities, re-ingesting", entry=entry.id)

    bundle = ingest_entry(entry, ingestor)
    if path is not None:
        cache_bundle(bundle, path)
    return Sample(entry.id, entry.label, bundle)


def ingest_corpus(
    entries: Sequence[ManifestEntry],
    ingestor: Ingestor,
    *,
    cache_dir: Path | None = None,
    jobs: int = 1,
) -> list[Sample]:
    """Ingest every entry, reusing cached bundles.

    Entries are processed concurrently on a thread pool; results keep input order.

    Args:
        entries: Corpus entries.
        ingestor: Adapters and encoders (shared read-only across workers).
        cache_dir: Feature cache directory; None disables caching.
        jobs: Worker threads.

    Returns:
        Samples in entry order.

    Raises:
        IngestError: From the first entry that fails.
    """
    logger.info("ingesting corpus", entries=len(entries), jobs=jobs, cache=str(cache_dir))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        samples = list(executor.map(lambda e: _ingest_cached(e, ingestor, cache_dir), entries))
    logger.info("corpus ingested", samples=len(samples))
    return samples
