"""Pairwise cross-modal attention fusion and the fully connected baseline."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import structlog
import torch
from torch import Tensor, nn

from multipcl.config.models import FusionConfig, Pair
from multipcl.errors import ConfigurationError
from multipcl.fusion.attention import PairBlock, mhca
from multipcl.seeding import torch_generator
from multipcl.types import Modality, ModalityBundle

logger = structlog.get_logger()

SHARED_BLOCK = "shared"


def pair_key(pair: Pair) -> str:
    """ModuleDict key for a pair, e.g. "video__text"."""
    return f"{pair[0].value}__{pair[1].value}"


@dataclass
class FusionOutput:
    """Result of one forward pass.

    Attributes:
        attended: Per-pair attended sequences A_ij (n_i x d); empty for the baseline.
        pooled: Per-pair (or per-modality, for the baseline) pooled d-vectors.
        z: Unified representation.
        logit: Scalar logit (0-dim tensor).
    """

    attended: dict[Pair, Tensor] = field(default_factory=dict)
    pooled: dict[Pair, Tensor] = field(default_factory=dict)
    z: Tensor = field(default_factory=lambda: torch.zeros(0, dtype=torch.float64))
    logit: Tensor = field(default_factory=lambda: torch.zeros((), dtype=torch.float64))

    @property
    def probability(self) -> float:
        """sigmoid(logit)."""
        return float(torch.sigmoid(self.logit.detach()))


class FusionBase(nn.Module):
    """Shared plumbing: configuration, seeded init, bundle-to-tensor conversion."""

    variant: str = ""

    def __init__(self, config: FusionConfig, seed: int = 0) -> None:
        super().__init__()
        self.config = config
        self.seed = seed
        # private stream so concurrently trained models stay reproducible
        self.generator = torch_generator(seed, "fusion", self.variant, "dropout")

    def reset_parameters(self) -> None:
        """Xavier-uniform weights, zero biases, drawn from the model's own seed."""
        init = torch_generator(self.seed, "fusion", self.variant, "init")
        for name, parameter in self.named_parameters():
            if name.endswith("bias"):
                nn.init.zeros_(parameter)
            else:
                nn.init.xavier_uniform_(parameter, generator=init)

    def inputs(self, bundle: ModalityBundle) -> dict[Modality, Tensor]:
        """Bundle matrices for the configured modalities as float64 tensors.

        Raises:
            ConfigurationError: If a modality is missing or has the wrong width.
        """
        tensors: dict[Modality, Tensor] = {}
        for modality in self.config.modalities:
            matrix = bundle.get(modality)
            if matrix is None:
                raise ConfigurationError(f"bundle lacks configured modality {modality}")
            expected = self.config.input_dims[modality]
            if matrix.shape[1] != expected:
                raise ConfigurationError(
                    f"{modality} features are {matrix.shape[1]}-dim, model expects {expected}"
                )
            tensors[modality] = torch.from_numpy(np.asarray(matrix, dtype=np.float64))
        return tensors

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def forward(self, bundle: ModalityBundle) -> FusionOutput:
        raise NotImplementedError


class FusionModel(FusionBase):
    """Per-modality projections, per-pair attention blocks and a linear head.

    Z is the sum over the pair set of each attended sequence mean-pooled over its
    query positions; the head maps Z to one logit.
    """

    variant = "mhca"

    def __init__(self, config: FusionConfig, seed: int = 0) -> None:
        super().__init__(config, seed)
        d = config.model_dim
        self.projections = nn.ModuleDict(
            {
                m.value: nn.Linear(config.input_dims[m], d, bias=config.bias, dtype=torch.float64)
                for m in config.modalities
            }
        )
        if config.share_pair_params:
            keys = [SHARED_BLOCK]
        else:
            keys = [pair_key(p) for p in config.resolved_pairs]
        self.blocks = nn.ModuleDict({key: PairBlock(d, bias=config.bias) for key in keys})
        self.head = nn.Linear(d, 1, bias=config.bias, dtype=torch.float64)
        self.reset_parameters()

    def block(self, pair: Pair) -> PairBlock:
        key = SHARED_BLOCK if self.config.share_pair_params else pair_key(pair)
        block: PairBlock = self.blocks[key]
        return block

    def forward(self, bundle: ModalityBundle) -> FusionOutput:
        raw = self.inputs(bundle)
        projected = {m: self.projections[m.value](x) for m, x in raw.items()}
        masks: dict[Modality, Tensor] = {}
        if self.config.mask_absent_faces and Modality.FACE in raw:
            masks[Modality.FACE] = raw[Modality.FACE].ne(0).any(dim=1)

        d = self.config.model_dim
        output = FusionOutput()
        total = torch.zeros(d, dtype=torch.float64)
        for pair in self.config.resolved_pairs:
            query, key = projected[pair[0]], projected[pair[1]]
            mask = masks.get(pair[1])
            if query.shape[0] == 0 or key.shape[0] == 0 or (mask is not None and not mask.any()):
                # absent modality: contributes a zero pooled vector
                output.attended[pair] = query.new_zeros((query.shape[0], d))
                pooled = torch.zeros(d, dtype=torch.float64)
            else:
                attention = mhca(
                    query,
                    key,
                    self.block(pair),
                    self.config.heads,
                    key_mask=mask,
                    dropout=self.config.dropout if self.training else 0.0,
                    generator=self.generator,
                )
                output.attended[pair] = attention.output
                pooled = attention.output.mean(dim=0)
            output.pooled[pair] = pooled
            total = total + pooled

        output.z = total
        output.logit = self.head(total).squeeze(-1)
        return output


class FCFusionModel(FusionBase):
    """Baseline without attention: mean-pool each modality's raw features,
    concatenate, one fully connected layer of width d (ReLU), then the head."""

    variant = "fc"

    def __init__(self, config: FusionConfig, seed: int = 0) -> None:
        super().__init__(config, seed)
        width = sum(config.input_dims[m] for m in config.modalities)
        self.fc = nn.Linear(width, config.model_dim, bias=config.bias, dtype=torch.float64)
        self.head = nn.Linear(config.model_dim, 1, bias=config.bias, dtype=torch.float64)
        self.reset_parameters()

    def forward(self, bundle: ModalityBundle) -> FusionOutput:
        raw = self.inputs(bundle)
        output = FusionOutput()
        pooled = []
        for modality in self.config.modalities:
            x = raw[modality]
            vector = x.mean(dim=0) if x.shape[0] else x.new_zeros(x.shape[1])
            output.pooled[(modality, modality)] = vector
            pooled.append(vector)
        output.z = torch.relu(self.fc(torch.cat(pooled)))
        output.logit = self.head(output.z).squeeze(-1)
        return output


def build_model(config: FusionConfig, variant: str = "mhca", seed: int = 0) -> FusionBase:
    """Construct a fusion model for a variant ("mhca" or "fc").

    Raises:
        ConfigurationError: If the variant is unknown.
    """
    if variant == "mhca":
        return FusionModel(config, seed)
    if variant == "fc":
        return FCFusionModel(config, seed)
    raise ConfigurationError(f"unknown fusion variant: {variant}")


def fuse(bundle: ModalityBundle, model: FusionModel, config: FusionConfig) -> FusionOutput:
    """Forward pass of the attention model.

    Raises:
        ConfigurationError: If config differs from the model's or the bundle lacks a
            configured modality.
    """
    if config != model.config:
        raise ConfigurationError("config does not match the model it is applied to")
    return model(bundle)


def fc_fusion_baseline(bundle: ModalityBundle, model_fc: FCFusionModel) -> FusionOutput:
    """Forward pass of the fully connected baseline."""
    return model_fc(bundle)


def predict_proba(model: FusionBase, bundles: Sequence[ModalityBundle]) -> npt.NDArray[np.float64]:
    """PCL probabilities in evaluation mode (no dropout, no gradients)."""
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            logits = [model(bundle).logit for bundle in bundles]
    finally:
        model.train(was_training)
    if not logits:
        return np.zeros(0)
    return torch.sigmoid(torch.stack(logits)).numpy()
