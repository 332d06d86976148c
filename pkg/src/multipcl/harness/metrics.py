"""Binary classification metrics for the PCL class, as percentages."""

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
from sklearn.metrics import confusion_matrix

from multipcl.errors import ContractError, DomainError

METRIC_NAMES = ("P_p", "R_p", "F1_p", "F1_macro", "Acc")


def _percent(numerator: int, denominator: int) -> float:
    # zero denominator counts as 0.0
    return 100.0 * numerator / denominator if denominator else 0.0


@dataclass
class EvalReport:
    """Evaluation of one prediction batch, or an average of several.

    Attributes:
        p_p: Precision of the PCL class.
        r_p: Recall of the PCL class.
        f1_p: F1 of the PCL class.
        f1_macro: Unweighted mean of both classes' F1.
        accuracy: Share of correct predictions.
        tp: True positives.
        fp: False positives.
        fn: False negatives.
        tn: True negatives.
        per_fold: Fold reports this one aggregates, if any.
    """

    p_p: float
    r_p: float
    f1_p: float
    f1_macro: float
    accuracy: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    per_fold: list["EvalReport"] = field(default_factory=list)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "EvalReport":
        """Metrics computed from confusion counts.

        Raises:
            ContractError: If the counts are negative or all zero.
        """
        if min(tp, fp, fn, tn) < 0 or tp + fp + fn + tn == 0:
            raise ContractError(f"invalid confusion counts {(tp, fp, fn, tn)}")
        f1_negative = _percent(2 * tn, 2 * tn + fn + fp)
        f1_positive = _percent(2 * tp, 2 * tp + fp + fn)
        return cls(
            p_p=_percent(tp, tp + fp),
            r_p=_percent(tp, tp + fn),
            f1_p=f1_positive,
            f1_macro=(f1_positive + f1_negative) / 2,
            accuracy=_percent(tp + tn, tp + fp + fn + tn),
            tp=tp,
            fp=fp,
            fn=fn,
            tn=tn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def metrics(self) -> tuple[float, float, float, float, float]:
        """(P_p, R_p, F1_p, F1_macro, Acc)."""
        return (self.p_p, self.r_p, self.f1_p, self.f1_macro, self.accuracy)

    def row(self) -> str:
        """Metrics as a table row, e.g. "68.09 80.00 73.56 81.06 84.03"."""
        return " ".join(f"{value:.2f}" for value in self.metrics)

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-ready dictionary.

        Returns:
            Dict with the metric names, confusion counts and fold breakdown.
        """
        record: dict[str, Any] = dict(zip(METRIC_NAMES, self.metrics, strict=True))
        record["confusion"] = {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}
        if self.per_fold:
            record["per_fold"] = [report.to_dict() for report in self.per_fold]
        return record


def _as_binary(values: Sequence[int] | npt.ArrayLike, name: str) -> npt.NDArray[np.int64]:
    array = np.asarray(values).reshape(-1)
    if not np.all((array == 0) | (array == 1)):
        raise DomainError(f"{name} must be 0 or 1")
    return array.astype(np.int64)


def compute_metrics(
    predictions: Sequence[int] | npt.ArrayLike, labels: Sequence[int] | npt.ArrayLike
) -> EvalReport:
    """Precision, recall and F1 of the PCL class, macro-F1 and accuracy.

    Args:
        predictions: Predicted classes (0 or 1).
        labels: True classes (0 or 1).

    Returns:
        EvalReport with percentages in [0, 100] and confusion counts.

    Raises:
        ContractError: If the lengths differ or are zero.
        DomainError: If a value is not 0 or 1.
    """
    y_pred = _as_binary(predictions, "predictions")
    y_true = _as_binary(labels, "labels")
    if y_pred.shape != y_true.shape:
        raise ContractError(f"{y_pred.size} predictions but {y_true.size} labels")
    if y_true.size == 0:
        raise ContractError("cannot evaluate an empty batch")
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel().tolist()
    return EvalReport.from_counts(tp=tp, fp=fp, fn=fn, tn=tn)


def mean_report(
    reports: Sequence[EvalReport],
    *,
    counts: EvalReport | None = None,
    per_fold: Sequence[EvalReport] = (),
) -> EvalReport:
    """Average the metrics of several reports.

    Args:
        reports: Reports to average (at least one).
        counts: Report whose confusion counts are carried over; by default the
            counts of all reports are summed.
        per_fold: Fold breakdown to attach.

    Returns:
        EvalReport holding the mean of every metric.
    """
    if not reports:
        raise ContractError("cannot average zero reports")
    means = np.mean([report.metrics for report in reports], axis=0).tolist()
    if counts is None:
        tp = sum(r.tp for r in reports)
        fp = sum(r.fp for r in reports)
        fn = sum(r.fn for r in reports)
        tn = sum(r.tn for r in reports)
    else:
        tp, fp, fn, tn = counts.tp, counts.fp, counts.fn, counts.tn
    return EvalReport(*means, tp=tp, fp=fp, fn=fn, tn=tn, per_fold=list(per_fold))
