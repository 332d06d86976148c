"""Workflow orchestration behind the command-line subcommands."""

import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import structlog

from multipcl.codec import atomic_write
from multipcl.config.loader import ConfigLoader
from multipcl.config.models import ExperimentConfig
from multipcl.corpus.agreement import fleiss_kappa, load_annotations
from multipcl.corpus.manifest import ManifestEntry, audit_manifest, load_manifest
from multipcl.corpus.stats import compute_stats
from multipcl.errors import (
    ConfigurationError,
    ManifestParseError,
    ManifestValidationError,
    UsageError,
)
from multipcl.fusion.checkpoint import load_checkpoint, save_checkpoint
from multipcl.fusion.model import build_model
from multipcl.harness.crossval import cross_validate
from multipcl.harness.grid import (
    GridRow,
    parse_subsets,
    render_table,
    run_ablation_grid,
    subset_key,
    summarize_grid,
    write_records,
)
from multipcl.harness.synthetic import separable_corpus, xor_corpus
from multipcl.harness.training import predict, train_one
from multipcl.ingest.pipeline import Ingestor, ingest_corpus
from multipcl.seeding import derive_seed
from multipcl.types import MODALITY_ORDER, Modality, Sample

logger = structlog.get_logger()

SUBCOMMANDS = ("validate", "stats", "kappa", "ingest", "train", "eval", "grid", "predict")

CHECKPOINT_NAME = "model.pclm"


@dataclass
class CommandInvocation:
    """One parsed command line.

    Attributes:
        command: Subcommand name.
        config_path: Explicit config file, or None to search the default paths.
        overrides: key=value overrides from --set, in order.
        out_dir: Directory receiving the artifacts.
        path: Positional input (manifest, annotation table or checkpoint).
        seed: --seed, applied as an override.
        jobs: Worker threads for ingestion and folds.
        subsets: --subset, comma-separated subset keys.
        variant: --variant (mhca, fc, or both for grid).
    """

    command: str
    config_path: str | None = None
    overrides: list[str] = field(default_factory=list)
    out_dir: str = "runs"
    path: str | None = None
    seed: int | None = None
    jobs: int = 1
    subsets: str | None = None
    variant: str | None = None

    def __post_init__(self) -> None:
        if self.command not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.command!r}")
        if self.jobs < 1:
            raise UsageError(f"--jobs must be >= 1, got {self.jobs}")
        if self.variant == "both" and self.command != "grid":
            raise UsageError("--variant both is only valid for grid")

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def all_overrides(self) -> list[str]:
        """Dedicated flags as overrides, followed by --set so that --set wins."""
        overrides = []
        if self.seed is not None:
            overrides.append(f"seed={self.seed}")
        if self.variant in ("mhca", "fc"):
            overrides.append(f"variant={self.variant}")
        if self.subsets and self.command != "grid":
            keys = [key.strip() for key in self.subsets.split(",") if key.strip()]
            if len(keys) != 1:
                raise UsageError(f"{self.command} takes a single --subset, got {self.subsets!r}")
            overrides.append(f"fusion.modalities={keys[0]}")
        return overrides + list(self.overrides)


def load_config(invocation: CommandInvocation) -> ExperimentConfig:
    """Config file, environment and defaults, with the invocation's overrides on top."""
    return ConfigLoader(explicit_path=invocation.config_path).load(invocation.all_overrides())


def _write_json(path: Path, data: Any) -> None:
    atomic_write(path, (json.dumps(data, sort_keys=True, indent=2) + "\n").encode("utf-8"))


def _write_lines(path: Path, records: Sequence[dict[str, Any]]) -> None:
    text = "".join(json.dumps(record, sort_keys=True) + "\n" for record in records)
    atomic_write(path, text.encode("utf-8"))


def _require(value: str | None, key: str) -> Path:
    if not value:
        raise ConfigurationError(f"{key} is not set (pass a path or --set {key}=...)")
    return Path(value)


def manifest_path(invocation: CommandInvocation, config: ExperimentConfig) -> Path:
    return _require(invocation.path or config.data.manifest, "data.manifest")


def load_samples(
    config: ExperimentConfig,
    modalities: Sequence[Modality],
    *,
    manifest: Path | None = None,
    jobs: int = 1,
) -> list[Sample]:
    """Labeled samples for training or evaluation.

    Generated when data.synthetic is set, otherwise ingested from the manifest
    through the feature cache.

    Raises:
        ConfigurationError: If no manifest is configured or the encoder widths
            disagree with fusion.input_dims.
    """
    dims = config.fusion.input_dims
    size = config.data.synthetic_size
    if config.data.synthetic == "separable":
        return separable_corpus(size, derive_seed(config.seed, "synthetic"), input_dims=dims)
    if config.data.synthetic == "xor":
        return xor_corpus(size, derive_seed(config.seed, "synthetic"), input_dims=dims)

    entries = load_manifest(manifest or _require(config.data.manifest, "data.manifest"))
    ingestor = _make_ingestor(config, modalities)
    return ingest_corpus(entries, ingestor, cache_dir=Path(config.data.cache_dir), jobs=jobs)


def _make_ingestor(config: ExperimentConfig, modalities: Sequence[Modality]) -> Ingestor:
    media_root = Path(config.data.media_root) if config.data.media_root else None
    ingestor = Ingestor.from_settings(
        config.ingest, modalities, seed=derive_seed(config.seed, "encoders"), media_root=media_root
    )
    for modality, dim in ingestor.output_dims.items():
        expected = config.fusion.input_dims.get(modality)
        if expected != dim:
            raise ConfigurationError(
                f"encoder for {modality} produces width {dim}, "
                f"fusion.input_dims.{modality} is {expected}"
            )
    return ingestor


def run_validate(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    path = manifest_path(invocation, config)
    violations = audit_manifest(path)
    _write_lines(invocation.out / "violations.jsonl", [v.to_dict() for v in violations])
    for violation in violations:
        where = f" entry {violation.entry_id!r}" if violation.entry_id else ""
        print(f"line {violation.line}{where}: {violation.reason}: {violation.message}")
    if violations:
        first = violations[0]
        logger.warning("manifest invalid", path=str(path), violations=len(violations))
        if first.entry_id:
            raise ManifestValidationError(first.entry_id, first.message)
        raise ManifestParseError(first.line, first.message.removeprefix(f"line {first.line}: "))
    print(f"{path}: ok")
    logger.info("manifest valid", path=str(path))


def run_stats(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    stats = compute_stats(load_manifest(manifest_path(invocation, config)))
    _write_json(invocation.out / "stats.json", stats.to_dict())
    print(stats.render_table())


def run_kappa(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    path = _require(invocation.path or config.data.annotations, "data.annotations")
    matrix = load_annotations(path)
    kappa = fleiss_kappa(matrix)
    record = {"kappa": kappa, "items": matrix.n_items, "annotators": matrix.n_annotators}
    _write_json(invocation.out / "kappa.json", record)
    print(f"fleiss kappa: {kappa:.4f} ({matrix.n_items} items, {matrix.n_annotators} annotators)")


def run_ingest(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    if config.data.synthetic != "none":
        raise ConfigurationError("ingest needs a manifest, data.synthetic must be none")
    entries: list[ManifestEntry] = load_manifest(manifest_path(invocation, config))
    ingestor = _make_ingestor(config, config.modalities)
    cache_dir = Path(config.data.cache_dir)
    samples = ingest_corpus(entries, ingestor, cache_dir=cache_dir, jobs=invocation.jobs)
    print(f"ingested {len(samples)} entries into {cache_dir}")


def _samples_for(invocation: CommandInvocation, config: ExperimentConfig) -> list[Sample]:
    manifest = Path(invocation.path) if invocation.path else None
    return load_samples(config, config.modalities, manifest=manifest, jobs=invocation.jobs)


def run_train(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    samples = _samples_for(invocation, config)
    model = build_model(config.fusion, config.variant, seed=derive_seed(config.seed, "train"))
    result = train_one(config, samples, model)
    save_checkpoint(result.model, invocation.out / CHECKPOINT_NAME)
    _write_lines(invocation.out / "trace.jsonl", [record.to_dict() for record in result.trace])
    final = result.final
    print(f"epoch {final.epoch}: loss {final.loss:.4f}, training {final.report.row()}")


def run_eval(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    samples = _samples_for(invocation, config)
    report = cross_validate(config, samples, jobs=invocation.jobs)
    row = GridRow(subset_key(config.modalities), config.variant, report, config)
    write_records([row], invocation.out / "report.jsonl")
    print(render_table([row]))


def run_grid(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    subsets = parse_subsets(invocation.subsets) if invocation.subsets else None
    variants = ("mhca", "fc") if invocation.variant == "both" else (config.variant,)
    wanted = {m for subset in subsets for m in subset} if subsets else set(MODALITY_ORDER)
    modalities = [m for m in config.modalities if m in wanted] + sorted(
        wanted - set(config.modalities), key=MODALITY_ORDER.index
    )
    samples = load_samples(
        config,
        modalities,
        manifest=Path(invocation.path) if invocation.path else None,
        jobs=invocation.jobs,
    )
    rows = run_ablation_grid(samples, config, subsets, variants, jobs=invocation.jobs)
    write_records(rows, invocation.out / "grid.jsonl")
    summary = summarize_grid(rows, variants[0])
    _write_json(invocation.out / "summary.json", summary.to_dict())
    print(render_table(rows))


def run_predict(invocation: CommandInvocation, config: ExperimentConfig) -> None:
    checkpoint = (
        Path(config.data.checkpoint) if config.data.checkpoint else invocation.out / CHECKPOINT_NAME
    )
    model = load_checkpoint(checkpoint)
    # the checkpoint decides the subset, widths and variant
    config = config.model_copy(update={"fusion": model.config, "variant": model.variant})
    samples = _samples_for(invocation, config)
    labels, probabilities = predict(model, samples, config.threshold)
    records = [
        {"id": sample.id, "label": int(label), "probability": float(probability)}
        for sample, label, probability in zip(samples, labels, probabilities)
    ]
    _write_lines(invocation.out / "predictions.jsonl", records)
    positives = int(labels.sum())
    print(f"{len(records)} videos, {positives} predicted PCL")


WORKFLOWS: dict[str, Callable[[CommandInvocation, ExperimentConfig], None]] = {
    "validate": run_validate,
    "stats": run_stats,
    "kappa": run_kappa,
    "ingest": run_ingest,
    "train": run_train,
    "eval": run_eval,
    "grid": run_grid,
    "predict": run_predict,
}


def run(invocation: CommandInvocation, config: ExperimentConfig | None = None) -> int:
    """Run one subcommand and write its artifacts under invocation.out_dir.

    Args:
        invocation: Parsed command line.
        config: Already loaded configuration; loaded from the invocation when None.

    Returns:
        Exit status 0; failures are raised as MultiPCLError subclasses.
    """
    if config is None:
        config = load_config(invocation)
    invocation.out.mkdir(parents=True, exist_ok=True)
    logger.info(
        "running",
        command=invocation.command,
        seed=config.seed,
        jobs=invocation.jobs,
        out=str(invocation.out),
    )
    WORKFLOWS[invocation.command](invocation, config)
    logger.info("done", command=invocation.command)
    return 0
