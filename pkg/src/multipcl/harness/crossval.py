"""Stratified k-fold cross-validation with top-m epoch averaging."""

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import structlog

from multipcl.config.models import ExperimentConfig, FusionConfig
from multipcl.corpus.folds import make_folds
from multipcl.errors import ContractError
from multipcl.fusion.model import FusionBase, build_model
from multipcl.harness.metrics import EvalReport, mean_report
from multipcl.harness.training import EpochRecord, TrainResult, train_one
from multipcl.seeding import derive_seed
from multipcl.types import Sample

logger = structlog.get_logger()

ModelFactory = Callable[[FusionConfig, str, int], FusionBase]
Trainer = Callable[[ExperimentConfig, Sequence[Sample], FusionBase, Sequence[Sample]], TrainResult]


def default_trainer(
    config: ExperimentConfig,
    train_set: Sequence[Sample],
    model: FusionBase,
    eval_set: Sequence[Sample],
) -> TrainResult:
    return train_one(config, train_set, model, eval_set=eval_set)


@dataclass
class FoldRun:
    """One fold's split and per-epoch held-out trace."""

    fold: int
    train_ids: list[str]
    test_ids: list[str]
    trace: list[EpochRecord]


def ranked_epochs(trace: Sequence[EpochRecord]) -> list[EpochRecord]:
    """Epochs by held-out F1_p, best first; ties go to the earlier epoch."""
    return sorted(trace, key=lambda record: (-record.report.f1_p, record.epoch))


def top_m_average(trace: Sequence[EpochRecord], m: int) -> EvalReport:
    """Mean metrics of the m epochs with the highest F1_p.

    Confusion counts are those of the best epoch.
    """
    if not trace:
        raise ContractError("empty epoch trace")
    top = ranked_epochs(trace)[:m]
    return mean_report([record.report for record in top], counts=top[0].report)


def aggregate_folds(runs: Sequence[FoldRun], m: int, scope: str = "fold") -> EvalReport:
    """Combine fold traces into one report.

    With scope "fold", each fold averages its own top m epochs and the report is
    the mean over folds. With scope "pooled", each epoch's reports are first
    pooled across folds, the top m pooled epochs are chosen once, and every fold
    is scored on those same epochs.

    Args:
        runs: One FoldRun per fold, equal trace lengths.
        m: Epochs to average.
        scope: "fold" or "pooled".

    Returns:
        Aggregated EvalReport with a per-fold breakdown. Confusion counts are
        summed over folds.
    """
    if scope == "fold":
        per_fold = [top_m_average(run.trace, m) for run in runs]
        return mean_report(per_fold, per_fold=per_fold)
    if scope != "pooled":
        raise ContractError(f"unknown top-m scope {scope!r}")

    epochs = min(len(run.trace) for run in runs)
    pooled = [
        EpochRecord(
            epoch=e,
            loss=sum(run.trace[e].loss for run in runs) / len(runs),
            report=mean_report([run.trace[e].report for run in runs]),
        )
        for e in range(epochs)
    ]
    chosen = [record.epoch for record in ranked_epochs(pooled)[:m]]
    per_fold = [
        mean_report([run.trace[e].report for e in chosen], counts=run.trace[chosen[0]].report)
        for run in runs
    ]
    return mean_report(per_fold, per_fold=per_fold)


def cross_validate(
    config: ExperimentConfig,
    samples: Sequence[Sample],
    *,
    model_factory: ModelFactory = build_model,
    trainer: Trainer = default_trainer,
    jobs: int = 1,
) -> EvalReport:
    """k-fold cross-validation of one configuration.

    Each fold trains a fresh model on the other k - 1 folds and evaluates on the
    held-out fold after every epoch. Fold models get independent seeds derived
    from the config seed, so the result does not depend on jobs.

    Args:
        config: Experiment configuration (subset, variant, protocol).
        samples: Labeled samples.
        model_factory: Builds a model from (fusion config, variant, seed).
        trainer: Trains a model and returns its per-epoch held-out trace.
        jobs: Folds trained concurrently.

    Returns:
        Aggregated EvalReport with per-fold breakdown.

    Raises:
        StratificationError: If the corpus cannot be split into k folds.
        ContractError: If a fold's training and test ids overlap.
    """
    folds = make_folds(samples, config.folds, derive_seed(config.seed, "folds"))

    def run_fold(fold: int) -> FoldRun:
        train_idx, test_idx = folds[fold]
        train_set = [samples[i] for i in train_idx]
        test_set = [samples[i] for i in test_idx]
        train_ids = [s.id for s in train_set]
        test_ids = [s.id for s in test_set]
        leaked = set(train_ids) & set(test_ids)
        if leaked:
            raise ContractError(f"fold {fold}: ids in both splits: {sorted(leaked)}")

        model = model_factory(config.fusion, config.variant, derive_seed(config.seed, "fold", fold))
        result = trainer(config, train_set, model, test_set)
        if len(result.trace) < config.top_m:
            raise ContractError(
                f"fold {fold}: trace has {len(result.trace)} epochs, top_m is {config.top_m}"
            )
        logger.info(
            "fold complete",
            fold=fold,
            subset=config.fusion.subset_key,
            variant=config.variant,
            best_f1_p=round(ranked_epochs(result.trace)[0].report.f1_p, 2),
        )
        return FoldRun(fold, train_ids, test_ids, result.trace)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        runs = list(executor.map(run_fold, range(len(folds))))

    report = aggregate_folds(runs, config.top_m, config.top_m_scope)
    logger.info(
        "cross-validation complete",
        subset=config.fusion.subset_key,
        variant=config.variant,
        f1_p=round(report.f1_p, 2),
        f1_macro=round(report.f1_macro, 2),
    )
    return report
