"""Corpus statistics in the shape of the dataset summary table."""

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

from multipcl.corpus.manifest import COMMUNITIES, ManifestEntry
from multipcl.errors import DomainError


@dataclass
class ClassStats:
    """Aggregates over one class (or the whole corpus).

    Attributes:
        count: Number of videos.
        hours: Summed duration in hours.
        frames: Summed duration_s * fps.
        mean_video_minutes: Mean video length in minutes.
        mean_text_chars: Mean transcript length in characters.
    """

    count: int
    hours: float
    frames: float
    mean_video_minutes: float
    mean_text_chars: float


@dataclass
class SpanStats:
    """Aggregates over PCL frame spans.

    The mean span length is reported both per span and per PCL video, since the
    summary table does not say which one it means.

    Attributes:
        count: Number of spans.
        hours: Summed span duration in hours.
        frames: Summed span frame count.
        mean_span_minutes: Mean length of one span.
        mean_minutes_per_video: Span time per PCL video.
    """

    count: int
    hours: float
    frames: int
    mean_span_minutes: float
    mean_minutes_per_video: float


@dataclass
class CorpusStats:
    """Dataset statistics.

    Attributes:
        non_pcl: Label-0 aggregates.
        pcl: Label-1 aggregates.
        total: Whole-corpus aggregates.
        spans: Span aggregates (label-1 entries only).
        communities: Community -> {"non_pcl": n, "pcl": n}.
    """

    non_pcl: ClassStats
    pcl: ClassStats
    total: ClassStats
    spans: SpanStats
    communities: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def positive_rate(self) -> float:
        """Fraction of PCL videos."""
        return self.pcl.count / self.total.count

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-ready dict."""
        data = asdict(self)
        data["positive_rate"] = self.positive_rate
        return data

    def render_table(self) -> str:
        """Render the Non-PCL / PCL / PCL Frame Spans / Total summary table.

        Returns:
            Plain-text table.
        """
        header = ["", "Non-PCL", "PCL", "PCL Frame Spans", "Total"]
        rows = [
            ["Total num", self.non_pcl.count, self.pcl.count, self.spans.count, self.total.count],
            [
                "Total len (hrs)",
                f"{self.non_pcl.hours:.1f}",
                f"{self.pcl.hours:.1f}",
                f"{self.spans.hours:.1f}",
                f"{self.total.hours:.1f}",
            ],
            [
                "Total frame (M)",
                f"{self.non_pcl.frames / 1e6:.1f}",
                f"{self.pcl.frames / 1e6:.1f}",
                f"{self.spans.frames / 1e6:.1f}",
                f"{self.total.frames / 1e6:.1f}",
            ],
            [
                "Mean video len (min)",
                f"{self.non_pcl.mean_video_minutes:.1f}",
                f"{self.pcl.mean_video_minutes:.1f}",
                f"{self.spans.mean_span_minutes:.1f}",
                f"{self.total.mean_video_minutes:.1f}",
            ],
            [
                "Mean text len (char)",
                f"{self.non_pcl.mean_text_chars:.0f}",
                f"{self.pcl.mean_text_chars:.0f}",
                "-",
                f"{self.total.mean_text_chars:.0f}",
            ],
        ]
        table = [header, *[[str(c) for c in row] for row in rows]]
        widths = [max(len(row[i]) for row in table) for i in range(len(header))]
        lines = [
            " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in table
        ]
        lines.insert(1, "-+-".join("-" * w for w in widths))
        return "\n".join(lines)


def _class_stats(entries: Sequence[ManifestEntry]) -> ClassStats:
    count = len(entries)
    seconds = math.fsum(e.duration_s for e in entries)
    return ClassStats(
        count=count,
        hours=seconds / 3600.0,
        frames=math.fsum(e.duration_s * e.fps for e in entries),
        mean_video_minutes=seconds / count / 60.0 if count else 0.0,
        mean_text_chars=(sum(len(e.transcript) for e in entries) / count) if count else 0.0,
    )


def compute_stats(entries: Sequence[ManifestEntry]) -> CorpusStats:
    """Compute corpus statistics.

    Sums use exactly-rounded summation so totals do not depend on entry order.

    Args:
        entries: Corpus entries.

    Returns:
        CorpusStats.

    Raises:
        DomainError: If entries is empty.
    """
    if not entries:
        raise DomainError("cannot compute statistics of an empty corpus")

    negatives = [e for e in entries if e.label == 0]
    positives = [e for e in entries if e.label == 1]

    spans = [span for e in positives for span in e.spans]
    span_seconds = math.fsum(span.duration_s for span in spans)
    span_stats = SpanStats(
        count=len(spans),
        hours=span_seconds / 3600.0,
        frames=sum(span.frame_count for span in spans),
        mean_span_minutes=span_seconds / len(spans) / 60.0 if spans else 0.0,
        mean_minutes_per_video=span_seconds / len(positives) / 60.0 if positives else 0.0,
    )

    communities = {c: {"non_pcl": 0, "pcl": 0} for c in COMMUNITIES}
    for e in entries:
        communities[e.community]["pcl" if e.label == 1 else "non_pcl"] += 1

    return CorpusStats(
        non_pcl=_class_stats(negatives),
        pcl=_class_stats(positives),
        total=_class_stats(entries),
        spans=span_stats,
        communities=communities,
    )
