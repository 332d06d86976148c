"""Inter-annotator agreement (Fleiss' kappa)."""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd
import structlog

from multipcl.errors import AnnotationError, DegenerateAgreementError

logger = structlog.get_logger()


@dataclass(frozen=True)
class AnnotationMatrix:
    """Categorical labels, one row per item and one column per annotator.

    Attributes:
        item_ids: Item identifiers, one per row.
        labels: N x R labels.
        declared_categories: Category set K; inferred from the labels when empty.
    """

    item_ids: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]
    declared_categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.labels) < 1:
            raise AnnotationError("annotation matrix needs at least one item")
        if len(self.item_ids) != len(self.labels):
            raise AnnotationError("item_ids and labels must have the same number of rows")
        widths = {len(row) for row in self.labels}
        if len(widths) != 1:
            raise AnnotationError(f"rows have inconsistent annotator counts: {sorted(widths)}")
        if widths.pop() < 2:
            raise AnnotationError("annotation matrix needs at least two annotators")
        if self.declared_categories:
            if len(set(self.declared_categories)) < 2:
                raise AnnotationError("at least two categories must be declared")
            unknown = {c for row in self.labels for c in row} - set(self.declared_categories)
            if unknown:
                raise AnnotationError(f"labels outside the declared categories: {sorted(unknown)}")

    @classmethod
    def from_rows(
        cls, rows: list[list[str]], categories: tuple[str, ...] = ()
    ) -> "AnnotationMatrix":
        """Build a matrix with generated item ids ("0", "1", ...)."""
        return cls(
            item_ids=tuple(str(i) for i in range(len(rows))),
            labels=tuple(tuple(str(c) for c in row) for row in rows),
            declared_categories=categories,
        )

    @property
    def categories(self) -> tuple[str, ...]:
        """Category set in use."""
        if self.declared_categories:
            return self.declared_categories
        return tuple(sorted({c for row in self.labels for c in row}))

    @property
    def n_items(self) -> int:
        return len(self.labels)

    @property
    def n_annotators(self) -> int:
        return len(self.labels[0])

    def category_counts(self) -> npt.NDArray[np.int64]:
        """N x K matrix: how many annotators put item i in category k."""
        index = {c: k for k, c in enumerate(self.categories)}
        counts = np.zeros((self.n_items, len(index)), dtype=np.int64)
        for i, row in enumerate(self.labels):
            for label in row:
                counts[i, index[label]] += 1
        return counts


def fleiss_kappa(matrix: AnnotationMatrix) -> float:
    """Fleiss' kappa, (P_bar - P_e) / (1 - P_e).

    Args:
        matrix: Annotation matrix.

    Returns:
        Kappa in [-1, 1].

    Raises:
        DegenerateAgreementError: If chance agreement P_e is 1.
    """
    counts = matrix.category_counts()
    n_items = matrix.n_items
    raters = matrix.n_annotators

    proportions = counts.sum(axis=0) / (n_items * raters)
    per_item = ((counts**2).sum(axis=1) - raters) / (raters * (raters - 1))

    p_bar = math.fsum(per_item.tolist()) / n_items
    p_e = math.fsum((proportions**2).tolist())
    if math.isclose(p_e, 1.0, rel_tol=0.0, abs_tol=1e-12):
        raise DegenerateAgreementError(
            "every annotation uses a single category; chance agreement is 1"
        )

    kappa = (p_bar - p_e) / (1.0 - p_e)
    logger.debug("fleiss kappa", items=n_items, annotators=raters, p_bar=p_bar, p_e=p_e)
    return kappa


def load_annotations(path: str | Path) -> AnnotationMatrix:
    """Read an annotation table: first column item id, then one column per annotator.

    Files ending in .tsv are tab-separated, anything else comma-separated.

    Args:
        path: UTF-8 table with a header row.

    Returns:
        AnnotationMatrix.

    Raises:
        AnnotationError: If the table is malformed.
    """
    try:
        frame = pd.read_csv(
            path,
            sep="\t" if Path(path).suffix.lower() == ".tsv" else ",",
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise AnnotationError(f"cannot read annotation table {path}: {e}") from e

    if frame.shape[1] < 3:
        raise AnnotationError("annotation table needs an id column and at least two annotators")
    values = frame.to_numpy()
    blank = [(str(values[i, 0]), j) for i, j in zip(*np.nonzero(values == ""), strict=True)]
    if blank:
        raise AnnotationError(f"empty cells at (item, column): {blank[:5]}")

    ids = tuple(str(v).strip() for v in values[:, 0])
    if len(set(ids)) != len(ids):
        raise AnnotationError("duplicate item ids in annotation table")
    labels = tuple(tuple(str(v).strip() for v in row[1:]) for row in values)
    return AnnotationMatrix(item_ids=ids, labels=labels)
