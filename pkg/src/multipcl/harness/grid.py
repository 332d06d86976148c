"""Modality-subset and fusion-variant ablation grid."""

import json
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import structlog

from multipcl.codec import atomic_write
from multipcl.config.models import ExperimentConfig
from multipcl.errors import ConfigurationError
from multipcl.harness.crossval import cross_validate
from multipcl.harness.metrics import EvalReport
from multipcl.types import MODALITY_ORDER, Modality, Sample

logger = structlog.get_logger()

# single modalities, pairs, triples, then all four
DEFAULT_SUBSETS = (
    "A",
    "T",
    "F",
    "V",
    "A+F",
    "A+T",
    "T+F",
    "A+V",
    "V+F",
    "V+T",
    "A+T+F",
    "V+T+F",
    "V+T+A",
    "V+A+F",
    "V+A+T+F",
)

VARIANT_LABELS = {"mhca": "MHCA", "fc": "FC"}

CrossValidator = Callable[..., EvalReport]


def parse_subset(key: str) -> list[Modality]:
    """Modalities of a subset key such as "V+T", in the order written.

    Raises:
        ConfigurationError: On unknown or repeated codes.
    """
    try:
        modalities = [Modality.from_code(code.strip()) for code in key.split("+")]
    except ValueError as e:
        raise ConfigurationError(f"bad subset {key!r}: {e}") from e
    if len(set(modalities)) != len(modalities):
        raise ConfigurationError(f"bad subset {key!r}: repeated modality")
    return modalities


def parse_subsets(keys: str | Iterable[str]) -> list[list[Modality]]:
    """Parse "V,T,V+T" (or a list of keys) into modality subsets."""
    items = keys.split(",") if isinstance(keys, str) else list(keys)
    return [parse_subset(key) for key in items if key.strip()]


def subset_key(modalities: Sequence[Modality]) -> str:
    return "+".join(m.code for m in modalities)


@dataclass
class GridRow:
    """One cross-validated run of the grid."""

    subset: str
    variant: str
    report: EvalReport
    config: ExperimentConfig

    @property
    def modalities(self) -> list[Modality]:
        return self.config.modalities

    def to_record(self) -> dict[str, Any]:
        """Machine-readable record (subset, variant, metrics, per-fold breakdown)."""
        return {"subset": self.subset, "variant": self.variant, **self.report.to_dict()}


def run_ablation_grid(
    samples: Sequence[Sample],
    base_config: ExperimentConfig,
    subsets: Sequence[Sequence[Modality]] | None = None,
    variants: Sequence[str] = ("mhca",),
    *,
    jobs: int = 1,
    cross_validator: CrossValidator = cross_validate,
) -> list[GridRow]:
    """Cross-validate every requested (subset, variant) combination.

    Runs differ from base_config only in the modality subset and the fusion
    variant, and all share its seed.

    Args:
        samples: Labeled samples carrying every modality any subset uses.
        base_config: Protocol, fusion hyperparameters and seed.
        subsets: Modality subsets (default: all fifteen, singles first).
        variants: Fusion variants, "mhca" and/or "fc".
        jobs: Folds trained concurrently within a run.
        cross_validator: Function with cross_validate's signature.

    Returns:
        One GridRow per combination, subsets outermost.
    """
    if subsets is None:
        subsets = [parse_subset(key) for key in DEFAULT_SUBSETS]
    rows = []
    for modalities in subsets:
        for variant in variants:
            config = base_config.with_run(modalities, variant)
            report = cross_validator(config, samples, jobs=jobs)
            rows.append(GridRow(subset_key(modalities), variant, report, config))
            logger.info(
                "grid run complete",
                subset=rows[-1].subset,
                variant=variant,
                f1_p=round(report.f1_p, 2),
                f1_macro=round(report.f1_macro, 2),
            )
    return rows


def dump_records(rows: Sequence[GridRow]) -> str:
    """JSON lines with sorted keys, one per run."""
    return "".join(json.dumps(row.to_record(), sort_keys=True) + "\n" for row in rows)


def write_records(rows: Sequence[GridRow], path: str | Path) -> None:
    atomic_write(Path(path), dump_records(rows).encode("utf-8"))


def render_table(rows: Sequence[GridRow]) -> str:
    """Plain-text table in the column order M / Model / P_p / R_p / F1_p / F1_m / Acc."""
    width = max([len("M")] + [len(row.subset) for row in rows])
    header = f"{'M':<{width}}  {'Model':<5}  " + "  ".join(
        f"{name:>6}" for name in ("P_p", "R_p", "F1_p", "F1_m", "Acc")
    )
    lines = [header]
    for row in rows:
        label = VARIANT_LABELS.get(row.variant, row.variant)
        values = "  ".join(f"{value:>6.2f}" for value in row.report.metrics)
        lines.append(f"{row.subset:<{width}}  {label:<5}  {values}")
    return "\n".join(lines)


@dataclass
class GridSummary:
    """Best runs by modality count and each modality's contribution.

    Attributes:
        best_by_size: Modality count -> best run (highest F1_p) with that many.
        gain_by_size: Modality count -> F1_p gain of its best run over the best
            run with one fewer modality.
        contribution: Modality -> mean F1_p of runs including it minus mean F1_p
            of runs excluding it.
    """

    best_by_size: dict[int, GridRow] = field(default_factory=dict)
    gain_by_size: dict[int, float] = field(default_factory=dict)
    contribution: dict[Modality, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "best_by_size": {str(k): row.subset for k, row in sorted(self.best_by_size.items())},
            "gain_by_size": {str(k): v for k, v in sorted(self.gain_by_size.items())},
            "contribution": {m.code: v for m, v in self.contribution.items()},
        }


def summarize_grid(rows: Sequence[GridRow], variant: str = "mhca") -> GridSummary:
    """Summarize the runs of one variant.

    A modality is left out of the contribution map when every run includes it or
    none does.
    """
    selected = [row for row in rows if row.variant == variant]
    summary = GridSummary()
    for row in selected:
        size = len(row.modalities)
        best = summary.best_by_size.get(size)
        if best is None or row.report.f1_p > best.report.f1_p:
            summary.best_by_size[size] = row
    for size, row in summary.best_by_size.items():
        previous = summary.best_by_size.get(size - 1)
        if previous is not None:
            summary.gain_by_size[size] = row.report.f1_p - previous.report.f1_p
    for modality in MODALITY_ORDER:
        inside = [row.report.f1_p for row in selected if modality in row.modalities]
        outside = [row.report.f1_p for row in selected if modality not in row.modalities]
        if inside and outside:
            summary.contribution[modality] = float(np.mean(inside) - np.mean(outside))
    return summary
