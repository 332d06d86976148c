"""Binary cross-entropy on logits."""

import torch
from numpy.typing import ArrayLike
from torch import Tensor

from multipcl.errors import ContractError, DomainError


def bce_with_logits(logits: Tensor | ArrayLike, labels: Tensor | ArrayLike) -> Tensor:
    """Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.

    Uses the stable form max(x, 0) - x * y + log(1 + exp(-|x|)), so large |x|
    neither overflows nor loses precision.

    Args:
        logits: N logits; gradients flow through tensors.
        labels: N labels, each 0 or 1.

    Returns:
        Scalar loss tensor (>= 0).

    Raises:
        DomainError: If a label is not 0 or 1.
        ContractError: If the batch is empty or shapes differ.
    """
    x = logits if isinstance(logits, Tensor) else torch.as_tensor(logits, dtype=torch.float64)
    y = torch.as_tensor(labels, dtype=x.dtype)
    x, y = x.reshape(-1), y.reshape(-1)
    if x.numel() == 0:
        raise ContractError("loss needs at least one logit")
    if x.shape != y.shape:
        raise ContractError(f"{x.numel()} logits but {y.numel()} labels")
    if not bool(((y == 0) | (y == 1)).all()):
        raise DomainError("labels must be 0 or 1")
    return (torch.clamp(x, min=0) - x * y + torch.log1p(torch.exp(-x.abs()))).mean()
