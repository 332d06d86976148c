"""Cross-modality multi-head attention."""

import math
from dataclasses import dataclass

import torch
from torch import Tensor, nn

from multipcl.errors import ContractError


class PairBlock(nn.Module):
    """Query, key, value and output projections (each d -> d) for one modality pair."""

    def __init__(self, model_dim: int, bias: bool = True) -> None:
        super().__init__()
        self.query = nn.Linear(model_dim, model_dim, bias=bias, dtype=torch.float64)
        self.key = nn.Linear(model_dim, model_dim, bias=bias, dtype=torch.float64)
        self.value = nn.Linear(model_dim, model_dim, bias=bias, dtype=torch.float64)
        self.output = nn.Linear(model_dim, model_dim, bias=bias, dtype=torch.float64)


@dataclass
class Attention:
    """One mhca evaluation.

    Attributes:
        weights: (h, n_q, n_k) attention weights, rows summing to 1.
        attended: (n_q, d) concatenated head outputs before the output projection.
        output: (n_q, d) after the output projection.
    """

    weights: Tensor
    attended: Tensor
    output: Tensor


def split_heads(x: Tensor, heads: int) -> Tensor:
    """(n, d) -> (h, n, d / h)."""
    n, d = x.shape
    return x.reshape(n, heads, d // heads).transpose(0, 1)


def attention_weights(q: Tensor, k: Tensor, key_mask: Tensor | None = None) -> Tensor:
    """Row softmax of q k^T / sqrt(d_k) per head.

    Args:
        q: (h, n_q, d_k) queries.
        k: (h, n_k, d_k) keys.
        key_mask: (n_k,) bool, False excludes a key.

    Returns:
        (h, n_q, n_k) weights.
    """
    scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
    if key_mask is not None:
        scores = scores.masked_fill(~key_mask, float("-inf"))
    return torch.softmax(scores, dim=-1)


def mhca(
    query_seq: Tensor,
    key_value_seq: Tensor,
    block: PairBlock,
    heads: int,
    *,
    key_mask: Tensor | None = None,
    dropout: float = 0.0,
    generator: torch.Generator | None = None,
) -> Attention:
    """Multi-head attention with queries from one modality and keys/values from another.

    Per head: weights = softmax(Q K^T / sqrt(d_k)), output = weights V. Heads are
    concatenated, then output-projected.

    Args:
        query_seq: (n_q, d) projected query modality.
        key_value_seq: (n_k, d) projected key/value modality.
        block: Pair parameters.
        heads: Head count h (divides d).
        key_mask: Optional (n_k,) bool mask; at least one key must stay.
        dropout: Dropout rate on the attention weights.
        generator: Random source for the dropout mask.

    Returns:
        Attention with weights, pre-projection and projected outputs.

    Raises:
        ContractError: If either sequence is empty, dims disagree or every key is masked.
    """
    if query_seq.ndim != 2 or key_value_seq.ndim != 2:
        raise ContractError("mhca expects (rows, d) sequences")
    if query_seq.shape[0] == 0 or key_value_seq.shape[0] == 0:
        raise ContractError(
            f"mhca needs non-empty sequences, got {query_seq.shape[0]} queries "
            f"and {key_value_seq.shape[0]} keys"
        )
    d = block.query.in_features
    if query_seq.shape[1] != d or key_value_seq.shape[1] != d:
        raise ContractError(
            f"sequence widths {query_seq.shape[1]}/{key_value_seq.shape[1]} != model dim {d}"
        )
    if d % heads:
        raise ContractError(f"heads ({heads}) must divide model dim ({d})")
    if key_mask is not None and not bool(key_mask.any()):
        raise ContractError("every key is masked")

    q = split_heads(block.query(query_seq), heads)
    k = split_heads(block.key(key_value_seq), heads)
    v = split_heads(block.value(key_value_seq), heads)

    weights = attention_weights(q, k, key_mask)
    mixed = weights
    if dropout > 0.0:
        keep = torch.rand(weights.shape, generator=generator, dtype=weights.dtype) >= dropout
        mixed = weights * keep / (1.0 - dropout)

    attended = (mixed @ v).transpose(0, 1).reshape(query_seq.shape[0], d)
    return Attention(weights=weights, attended=attended, output=block.output(attended))
