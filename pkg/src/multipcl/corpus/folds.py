"""Label-stratified k-fold partitions."""

from collections import Counter
from collections.abc import Sequence
from typing import Protocol

import numpy as np
import structlog
from sklearn.model_selection import StratifiedKFold

from multipcl.errors import StratificationError

logger = structlog.get_logger()

Fold = tuple[list[int], list[int]]


class Labeled(Protocol):
    """Anything carrying a binary class label (manifest entries, samples)."""

    @property
    def label(self) -> int: ...


def make_folds(items: Sequence[Labeled], k: int, seed: int) -> list[Fold]:
    """Split item indices into k stratified (train, test) partitions.

    Each test fold holds the corpus class ratio to within one item per class, and
    the test folds together cover every index exactly once.

    Args:
        items: Labeled items (ManifestEntry or Sample).
        k: Number of folds, at least 2.
        seed: Shuffle seed; identical seeds give identical partitions.

    Returns:
        k pairs of sorted (train indices, test indices).

    Raises:
        StratificationError: If k < 2 or a class has fewer than k members.
    """
    if k < 2:
        raise StratificationError(f"need at least 2 folds, got {k}")
    labels = np.array([item.label for item in items], dtype=np.int64)
    counts = Counter(labels.tolist())
    for label in (0, 1):
        if counts.get(label, 0) < k:
            raise StratificationError(
                f"class {label} has {counts.get(label, 0)} member(s), fewer than k={k}"
            )

    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed % 2**32)
    folds = [
        (sorted(train.tolist()), sorted(test.tolist()))
        for train, test in splitter.split(np.zeros(len(labels)), labels)
    ]
    logger.debug("folds built", k=k, sizes=[len(test) for _, test in folds])
    return folds
