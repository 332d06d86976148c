"""Analytic gradients and a central-difference check."""

import numpy as np
import numpy.typing as npt
import torch
from torch import Tensor

from multipcl.errors import TrainingError
from multipcl.fusion.loss import bce_with_logits
from multipcl.fusion.model import FusionBase
from multipcl.seeding import numpy_rng
from multipcl.types import ModalityBundle

Gradients = dict[str, npt.NDArray[np.float64]]


def sample_loss(model: FusionBase, bundle: ModalityBundle, label: int) -> Tensor:
    """Loss of one labeled bundle."""
    return bce_with_logits(model(bundle).logit.reshape(1), [label])


def check_finite(named: dict[str, Tensor]) -> None:
    """Raise TrainingError naming the first parameter whose gradient is not finite."""
    for name, grad in named.items():
        if not bool(torch.isfinite(grad).all()):
            raise TrainingError(f"non-finite gradient for {name}", parameter=name)


def backward(
    model: FusionBase, bundle: ModalityBundle, label: int, scale: float = 1.0
) -> Gradients:
    """Gradient of scale * loss with respect to every parameter.

    Parameters the forward pass never touches (a pair whose modality had no rows)
    get zero gradients. Nothing is accumulated into ``.grad``.

    Args:
        model: Fusion model (its current train/eval mode is used).
        bundle: Input bundle.
        label: 0 or 1.
        scale: Loss multiplier.

    Returns:
        Parameter name -> gradient array of the parameter's shape.

    Raises:
        TrainingError: If a gradient is not finite.
    """
    named = dict(model.named_parameters())
    loss = sample_loss(model, bundle, label) * scale
    grads = torch.autograd.grad(loss, list(named.values()), allow_unused=True)
    result = {
        name: grad if grad is not None else torch.zeros_like(param)
        for (name, param), grad in zip(named.items(), grads, strict=True)
    }
    check_finite(result)
    return {name: grad.detach().numpy().copy() for name, grad in result.items()}


def finite_difference_check(
    model: FusionBase,
    bundle: ModalityBundle,
    label: int,
    step: float = 1e-4,
    *,
    per_parameter: int | None = 4,
    floor: float = 1e-5,
    seed: int = 0,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    The error at a coordinate is |g - g_fd| / max(|g|, |g_fd|, floor). The model is
    evaluated in eval mode and every parameter is restored afterwards.

    Args:
        model: Fusion model.
        bundle: Input bundle.
        label: 0 or 1.
        step: Central-difference step.
        per_parameter: Coordinates sampled per parameter tensor; None checks all.
        floor: Denominator floor for near-zero gradients.
        seed: Coordinate sampling seed.

    Returns:
        Largest relative error over the checked coordinates.
    """
    was_training = model.training
    model.eval()
    try:
        analytic = backward(model, bundle, label)
        rng = numpy_rng(seed, "finite-difference")
        worst = 0.0
        with torch.no_grad():
            for name, param in model.named_parameters():
                flat = param.view(-1)
                coords = np.arange(flat.numel())
                if per_parameter is not None and flat.numel() > per_parameter:
                    coords = rng.choice(flat.numel(), size=per_parameter, replace=False)
                expected = analytic[name].reshape(-1)
                for index in coords.tolist():
                    original = flat[index].item()
                    flat[index] = original + step
                    upper = sample_loss(model, bundle, label).item()
                    flat[index] = original - step
                    lower = sample_loss(model, bundle, label).item()
                    flat[index] = original
                    numeric = (upper - lower) / (2.0 * step)
                    exact = float(expected[index])
                    error = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
                    worst = max(worst, error)
    finally:
        model.train(was_training)
    return worst
