"""Tests for cross-modality multi-head attention."""

import math

import pytest
import torch

from multipcl.errors import ContractError
from multipcl.fusion.attention import PairBlock, attention_weights, mhca, split_heads


def make_block(d: int, seed: int = 0, bias: bool = True) -> PairBlock:
    """Pair block with N(0, 1) weights and biases."""
    torch.manual_seed(seed)
    block = PairBlock(d, bias=bias)
    with torch.no_grad():
        for p in block.parameters():
            p.copy_(torch.randn(p.shape, dtype=torch.float64))
    return block


def identity_block(d: int) -> PairBlock:
    """Identity projections, zero biases."""
    block = PairBlock(d)
    with torch.no_grad():
        for layer in (block.query, block.key, block.value, block.output):
            layer.weight.copy_(torch.eye(d, dtype=torch.float64))
            layer.bias.zero_()
    return block


def randn(*shape: int, generator: torch.Generator) -> torch.Tensor:
    return torch.randn(shape, generator=generator, dtype=torch.float64)


class TestMHCA:
    """Tests for mhca."""

    def test_single_key(self):
        """With one key every weight is 1 and the output is O(V(k))."""
        block = make_block(4)
        g = torch.Generator().manual_seed(1)
        query, kv = randn(3, 4, generator=g), randn(1, 4, generator=g)
        result = mhca(query, kv, block, heads=2)
        assert torch.all(result.weights == 1.0)
        expected = block.output(block.value(kv[0]))
        for row in result.output:
            torch.testing.assert_close(row, expected)

    def test_zero_values(self):
        """V = 0 makes every output row the output projection of zero."""
        block = make_block(4)
        with torch.no_grad():
            block.value.bias.zero_()
        g = torch.Generator().manual_seed(2)
        result = mhca(randn(3, 4, generator=g), torch.zeros(2, 4, dtype=torch.float64), block, 2)
        assert torch.all(result.attended == 0)
        for row in result.output:
            torch.testing.assert_close(row, block.output.bias)

    def test_hand_computed_two_by_two(self):
        """Identity projections, one head: softmax(q k^T / sqrt(2)) v by hand."""
        query = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        kv = torch.tensor([[1.0, 0.0], [0.0, 2.0]], dtype=torch.float64)
        result = mhca(query, kv, identity_block(2), heads=1)

        r = 1 / math.sqrt(2)
        # row 0 scores: (1, 0) * r; row 1 scores: (0, 2) * r
        w00 = math.exp(r) / (math.exp(r) + 1)
        w01 = 1 - w00
        w10 = 1 / (1 + math.exp(2 * r))
        w11 = 1 - w10
        expected = torch.tensor([[w00, 2 * w01], [w10, 2 * w11]], dtype=torch.float64)
        weights = torch.tensor([[w00, w01], [w10, w11]], dtype=torch.float64)
        torch.testing.assert_close(result.output, expected, atol=1e-6, rtol=0)
        torch.testing.assert_close(result.weights[0], weights, atol=1e-6, rtol=0)

    @pytest.mark.parametrize("seed", range(100))
    def test_random_invariants(self, seed):
        """Row sums, shift invariance, key permutation and zero-value nullity."""
        g = torch.Generator().manual_seed(seed)
        heads = 1 + seed % 2
        d = 4 * heads
        n_q, n_k = 1 + seed % 4, 1 + (seed // 4) % 4
        block = make_block(d, seed)
        query, kv = randn(n_q, d, generator=g), randn(n_k, d, generator=g)

        result = mhca(query, kv, block, heads)
        sums = result.weights.sum(dim=-1)
        assert torch.all((sums - 1).abs() <= 1e-6)

        # adding w to every key shifts each score row by a constant
        q = split_heads(block.query(query), heads)
        k = split_heads(block.key(kv), heads)
        shifted = attention_weights(q, k + randn(heads, 1, d // heads, generator=g))
        assert torch.allclose(shifted, attention_weights(q, k), atol=1e-6, rtol=0)

        perm = torch.randperm(n_k, generator=g)
        permuted = mhca(query, kv[perm], block, heads)
        assert torch.allclose(permuted.output, result.output, atol=1e-6, rtol=0)

        with torch.no_grad():
            block.value.weight.zero_()
            block.value.bias.zero_()
        assert torch.all(mhca(query, kv, block, heads).attended == 0)

    def test_key_mask_zeroes_weight(self):
        """Masked keys get weight 0 and the rest renormalize."""
        block = make_block(4)
        g = torch.Generator().manual_seed(3)
        mask = torch.tensor([True, False, True])
        result = mhca(randn(2, 4, generator=g), randn(3, 4, generator=g), block, 2, key_mask=mask)
        assert torch.all(result.weights[..., 1] == 0)
        assert torch.allclose(result.weights.sum(-1), torch.ones(2, 2, dtype=torch.float64))

    def test_dropout_reproducible(self):
        """Same generator seed, same dropped weights."""
        block = make_block(4)
        g = torch.Generator().manual_seed(4)
        query, kv = randn(3, 4, generator=g), randn(5, 4, generator=g)
        a = mhca(query, kv, block, 2, dropout=0.5, generator=torch.Generator().manual_seed(9))
        b = mhca(query, kv, block, 2, dropout=0.5, generator=torch.Generator().manual_seed(9))
        plain = mhca(query, kv, block, 2)
        assert torch.equal(a.output, b.output)
        assert not torch.equal(a.output, plain.output)

    def test_empty_keys_rejected(self):
        """An empty key sequence breaks the contract."""
        with pytest.raises(ContractError, match="non-empty"):
            mhca(torch.ones(2, 4, dtype=torch.float64), torch.ones(0, 4, dtype=torch.float64),
                 make_block(4), 2)

    def test_all_masked_rejected(self):
        """At least one key must remain."""
        with pytest.raises(ContractError, match="masked"):
            mhca(torch.ones(2, 4, dtype=torch.float64), torch.ones(2, 4, dtype=torch.float64),
                 make_block(4), 2, key_mask=torch.tensor([False, False]))

    def test_width_mismatch_rejected(self):
        """Sequences must already be projected to d."""
        with pytest.raises(ContractError, match="model dim"):
            mhca(torch.ones(2, 3, dtype=torch.float64), torch.ones(2, 4, dtype=torch.float64),
                 make_block(4), 2)
