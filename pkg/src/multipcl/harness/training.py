"""Mini-batch training of one fusion model."""

import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
import structlog
import torch

from multipcl.config.models import ExperimentConfig
from multipcl.errors import DomainError, TrainingError
from multipcl.fusion.gradients import check_finite
from multipcl.fusion.loss import bce_with_logits
from multipcl.fusion.model import FusionBase, predict_proba
from multipcl.harness.metrics import EvalReport, compute_metrics
from multipcl.seeding import torch_generator
from multipcl.types import Sample

logger = structlog.get_logger()


@dataclass
class EpochRecord:
    """Outcome of one training epoch.

    Attributes:
        epoch: 0-based epoch index.
        loss: Mean training loss over the epoch's batches.
        report: Metrics on the evaluation set after the epoch.
    """

    epoch: int
    loss: float
    report: EvalReport

    def to_dict(self) -> dict[str, Any]:
        return {"epoch": self.epoch, "loss": self.loss, **self.report.to_dict()}


@dataclass
class TrainResult:
    """A trained model and its per-epoch trace."""

    model: FusionBase
    trace: list[EpochRecord] = field(default_factory=list)

    @property
    def final(self) -> EpochRecord:
        return self.trace[-1]


def predict(
    model: FusionBase, samples: Sequence[Sample], threshold: float = 0.5
) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.float64]]:
    """Class predictions (probability >= threshold) and probabilities."""
    probabilities = predict_proba(model, [sample.bundle for sample in samples])
    return (probabilities >= threshold).astype(np.int64), probabilities


def evaluate(model: FusionBase, samples: Sequence[Sample], threshold: float = 0.5) -> EvalReport:
    """Metrics of a model on labeled samples."""
    predictions, _ = predict(model, samples, threshold)
    return compute_metrics(predictions, [sample.label for sample in samples])


def train_one(
    config: ExperimentConfig,
    train_set: Sequence[Sample],
    model: FusionBase,
    *,
    eval_set: Sequence[Sample] | None = None,
) -> TrainResult:
    """Train a model with Adam on shuffled mini-batches.

    The shuffle order comes from a generator seeded by the config seed and the
    model seed, so identical inputs give identical traces.

    Args:
        config: Epochs, batch size, learning rate, threshold and seed.
        train_set: Training samples; both classes must be present.
        model: Freshly built model, trained in place.
        eval_set: Samples evaluated after every epoch (default: the training set).

    Returns:
        TrainResult with one EpochRecord per epoch.

    Raises:
        DomainError: If the training set is empty or lacks a class.
        TrainingError: If a loss, gradient or parameter becomes non-finite.
    """
    if not train_set:
        raise DomainError("training set is empty")
    labels = torch.tensor([sample.label for sample in train_set], dtype=torch.float64)
    if set(labels.tolist()) != {0.0, 1.0}:
        raise DomainError("training set must contain both classes")

    evaluation = train_set if eval_set is None else eval_set
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    shuffle = torch_generator(config.seed, "shuffle", model.seed)
    result = TrainResult(model=model)
    started = time.monotonic()

    for epoch in range(config.epochs):
        model.train()
        order = torch.randperm(len(train_set), generator=shuffle).tolist()
        losses = []
        for batch, start in enumerate(range(0, len(order), config.batch_size)):
            indices = order[start : start + config.batch_size]
            logits = torch.stack([model(train_set[i].bundle).logit for i in indices])
            loss = bce_with_logits(logits, labels[indices])
            if not math.isfinite(loss.item()):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {batch}", epoch=epoch, batch=batch
                )
            optimizer.zero_grad()
            loss.backward()
            named = {
                name: p.grad for name, p in model.named_parameters() if p.grad is not None
            }
            try:
                check_finite(named)
            except TrainingError as e:
                raise TrainingError(
                    f"{e} at epoch {epoch}, batch {batch}",
                    parameter=e.parameter,
                    epoch=epoch,
                    batch=batch,
                ) from e
            optimizer.step()
            losses.append(loss.item())

        record = EpochRecord(
            epoch=epoch,
            loss=float(np.mean(losses)),
            report=evaluate(model, evaluation, config.threshold),
        )
        result.trace.append(record)
        logger.debug(
            "epoch complete",
            epoch=epoch,
            loss=round(record.loss, 6),
            f1_p=round(record.report.f1_p, 2),
        )

    logger.debug(
        "training complete",
        epochs=config.epochs,
        samples=len(train_set),
        seconds=round(time.monotonic() - started, 2),
    )
    return result
