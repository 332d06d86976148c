"""Fan one seed out into independent, deterministic per-component streams."""

import zlib

import numpy as np
import torch


def derive_seed(seed: int, *labels: str | int) -> int:
    """Derive a 63-bit seed for a named component.

    The same (seed, labels) always gives the same value; different labels give
    statistically independent streams.

    Args:
        seed: Root seed (the CLI's --seed).
        labels: Component path, e.g. ("fold", 3, "init").

    Returns:
        Non-negative integer seed.
    """
    keys = [zlib.crc32(str(label).encode("utf-8")) for label in labels]
    state = np.random.SeedSequence(entropy=seed, spawn_key=keys).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def numpy_rng(seed: int, *labels: str | int) -> np.random.Generator:
    """NumPy generator for a named component."""
    return np.random.default_rng(derive_seed(seed, *labels))


def torch_generator(seed: int, *labels: str | int) -> torch.Generator:
    """CPU torch generator for a named component."""
    generator = torch.Generator()
    generator.manual_seed(derive_seed(seed, *labels))
    return generator
