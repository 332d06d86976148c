"""Line-delimited corpus manifest: records, validation, reading and writing."""

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal, get_args

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_core import PydanticCustomError

from multipcl.codec import atomic_write
from multipcl.errors import ManifestParseError, ManifestValidationError

logger = structlog.get_logger()

Community = Literal["disabled", "women", "elderly", "children", "single-parent", "low-income"]
COMMUNITIES: tuple[str, ...] = get_args(Community)


class ViolationReason(StrEnum):
    """Machine-readable manifest violation reasons."""

    PARSE_ERROR = "PARSE_ERROR"
    INVALID_FIELD = "INVALID_FIELD"
    DUPLICATE_ID = "DUPLICATE_ID"
    SPANS_ON_NON_PCL = "SPANS_ON_NON_PCL"
    SPANS_UNORDERED = "SPANS_UNORDERED"
    SPAN_OUT_OF_RANGE = "SPAN_OUT_OF_RANGE"


class FrameSpan(BaseModel):
    """Inclusive frame interval with its frame rate.

    Attributes:
        start_frame: First frame index.
        end_frame: Last frame index.
        fps: Frames per second of the source video.
    """

    model_config = ConfigDict(frozen=True)

    start_frame: int = Field(ge=0)
    end_frame: int = Field(ge=0)
    fps: float = Field(gt=0)

    @model_validator(mode="after")
    def validate_order(self) -> "FrameSpan":
        if self.end_frame < self.start_frame:
            raise PydanticCustomError(
                ViolationReason.SPANS_UNORDERED.lower(),
                "span end {end} precedes start {start}",
                {"start": self.start_frame, "end": self.end_frame},
            )
        return self

    @property
    def frame_count(self) -> int:
        return self.end_frame - self.start_frame + 1

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps


class ManifestEntry(BaseModel):
    """One corpus video.

    Unknown fields are kept in ``model_extra`` and written back unchanged.

    Attributes:
        id: Unique identifier.
        video_path: Media path relative to the media root.
        label: 0 = non-PCL, 1 = PCL.
        spans: PCL facial-expression frame spans, sorted and disjoint.
        transcript: Transcribed speech (may be empty).
        duration_s: Video length in seconds.
        fps: Frames per second.
        community: Targeted vulnerable group.
    """

    model_config = ConfigDict(frozen=True, extra="allow")

    id: str = Field(min_length=1)
    video_path: str
    label: Literal[0, 1]
    spans: tuple[FrameSpan, ...] = ()
    transcript: str = ""
    duration_s: float = Field(gt=0)
    fps: float = Field(gt=0)
    community: Community

    @model_validator(mode="before")
    @classmethod
    def expand_spans(cls, data: Any) -> Any:
        """Turn [[start, end], ...] pairs into FrameSpan records carrying the entry fps."""
        if not isinstance(data, dict) or "spans" not in data:
            return data
        fps = data.get("fps")
        spans = []
        for span in data["spans"] or []:
            if isinstance(span, list | tuple) and len(span) == 2:
                spans.append({"start_frame": span[0], "end_frame": span[1], "fps": fps})
            else:
                spans.append(span)
        return {**data, "spans": spans}

    @model_validator(mode="after")
    def validate_spans(self) -> "ManifestEntry":
        """Enforce label/span consistency, ordering and range.

        Raises:
            PydanticCustomError: Typed with the lower-cased ViolationReason.
        """
        if self.label == 0 and self.spans:
            raise PydanticCustomError(
                ViolationReason.SPANS_ON_NON_PCL.lower(),
                "non-PCL entry carries {count} span(s)",
                {"count": len(self.spans)},
            )
        total = self.total_frames
        previous_end = -1
        for span in self.spans:
            if span.start_frame <= previous_end:
                raise PydanticCustomError(
                    ViolationReason.SPANS_UNORDERED.lower(),
                    "span starting at frame {start} overlaps or precedes the previous span",
                    {"start": span.start_frame},
                )
            if span.end_frame >= total:
                raise PydanticCustomError(
                    ViolationReason.SPAN_OUT_OF_RANGE.lower(),
                    "span end {end} is outside the video ({total} frames)",
                    {"end": span.end_frame, "total": total},
                )
            previous_end = span.end_frame
        return self

    @property
    def total_frames(self) -> int:
        """Frame count of the video, ceil(duration_s * fps)."""
        return math.ceil(round(self.duration_s * self.fps, 6))

    @property
    def span_seconds(self) -> float:
        """Total annotated span time."""
        return sum(span.duration_s for span in self.spans)

    def to_record(self) -> dict[str, Any]:
        """Serialize to the manifest line layout, unknown fields included.

        Returns:
            JSON-ready dict.
        """
        record: dict[str, Any] = {
            "id": self.id,
            "video_path": self.video_path,
            "label": self.label,
            "spans": [[s.start_frame, s.end_frame] for s in self.spans],
            "fps": self.fps,
            "duration_s": self.duration_s,
            "transcript": self.transcript,
            "community": self.community,
        }
        record.update(self.model_extra or {})
        return record


@dataclass
class Violation:
    """One manifest problem found by audit_manifest.

    Attributes:
        line: 1-based line number.
        entry_id: Entry id when it could be read, else "".
        reason: Machine-readable reason.
        message: Human-readable detail.
    """

    line: int
    entry_id: str
    reason: ViolationReason
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "line": self.line,
            "entry_id": self.entry_id,
            "reason": str(self.reason),
            "message": self.message,
        }


def _describe(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in e['loc']) or 'entry'}: {e['msg']}" for e in error.errors()
    )


def _reason(error: ValidationError) -> ViolationReason:
    codes = {r.lower(): r for r in ViolationReason}
    for e in error.errors():
        if e["type"] in codes:
            return codes[e["type"]]
    return ViolationReason.INVALID_FIELD


def _read_records(path: Path) -> Iterable[tuple[int, dict[str, Any] | ManifestParseError]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                yield lineno, ManifestParseError(lineno, f"malformed record: {e.msg}")
                continue
            if not isinstance(record, dict):
                yield lineno, ManifestParseError(lineno, "record must be a JSON object")
                continue
            yield lineno, record


def parse_entry(record: dict[str, Any]) -> ManifestEntry:
    """Validate one manifest record.

    Raises:
        ManifestValidationError: Naming the entry id on any invariant violation.
    """
    try:
        return ManifestEntry.model_validate(record)
    except ValidationError as e:
        raise ManifestValidationError(str(record.get("id", "?")), _describe(e)) from e


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Load and validate a manifest, preserving file order.

    Args:
        path: Line-delimited manifest file.

    Returns:
        Validated entries.

    Raises:
        ManifestParseError: On a malformed line.
        ManifestValidationError: On an invariant violation or duplicate id.
    """
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for _, record in _read_records(Path(path)):
        if isinstance(record, ManifestParseError):
            raise record
        entry = parse_entry(record)
        if entry.id in seen:
            raise ManifestValidationError(entry.id, "duplicate id")
        seen.add(entry.id)
        entries.append(entry)

    logger.debug("manifest loaded", path=str(path), entries=len(entries))
    return entries


def audit_manifest(path: str | Path) -> list[Violation]:
    """Collect every violation in a manifest instead of stopping at the first.

    Args:
        path: Line-delimited manifest file.

    Returns:
        Violations in file order; empty when the manifest is valid.
    """
    violations: list[Violation] = []
    seen: dict[str, int] = {}
    for lineno, record in _read_records(Path(path)):
        if isinstance(record, ManifestParseError):
            violations.append(Violation(lineno, "", ViolationReason.PARSE_ERROR, str(record)))
            continue
        entry_id = str(record.get("id", ""))
        try:
            ManifestEntry.model_validate(record)
        except ValidationError as e:
            violations.append(Violation(lineno, entry_id, _reason(e), _describe(e)))
        if entry_id and entry_id in seen:
            violations.append(
                Violation(
                    lineno,
                    entry_id,
                    ViolationReason.DUPLICATE_ID,
                    f"duplicate id (first seen on line {seen[entry_id]})",
                )
            )
        else:
            seen[entry_id] = lineno
    return violations


def write_manifest(entries: Sequence[ManifestEntry], path: str | Path) -> None:
    """Write entries as one JSON record per line.

    Args:
        entries: Entries to write, in order.
        path: Destination file (replaced atomically).
    """
    lines = [json.dumps(entry.to_record(), ensure_ascii=False) + "\n" for entry in entries]
    atomic_write(Path(path), "".join(lines).encode("utf-8"))


def select_entries(
    entries: Sequence[ManifestEntry],
    min_duration_s: float | None = None,
    max_duration_s: float | None = None,
    communities: Sequence[str] | None = None,
) -> list[ManifestEntry]:
    """Keep entries within a duration window and (optionally) a community set.

    Args:
        entries: Candidate entries.
        min_duration_s: Inclusive lower bound on duration.
        max_duration_s: Inclusive upper bound on duration.
        communities: Communities to keep; None keeps all.

    Returns:
        Matching entries in input order.
    """
    selected = []
    for entry in entries:
        if min_duration_s is not None and entry.duration_s < min_duration_s:
            continue
        if max_duration_s is not None and entry.duration_s > max_duration_s:
            continue
        if communities is not None and entry.community not in communities:
            continue
        selected.append(entry)
    return selected
