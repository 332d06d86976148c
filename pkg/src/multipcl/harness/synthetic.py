"""Generated corpora with known structure, for tests and dry runs.

``separable_corpus`` puts the label in every modality's feature mean.
``xor_corpus`` gives the video and text streams one hidden bit each and labels
a sample PCL when the bits disagree; either stream alone carries no
information about the label, and the text bit cancels in the text mean, so only
row-level cross-modal interaction recovers it.
"""

from collections.abc import Mapping

import numpy as np
import numpy.typing as npt
import structlog

from multipcl.config.models import DEFAULT_INPUT_DIMS
from multipcl.errors import DomainError
from multipcl.seeding import numpy_rng
from multipcl.types import MODALITY_ORDER, Modality, ModalityBundle, Sample

logger = structlog.get_logger()


def _unit(rng: np.random.Generator, dim: int) -> npt.NDArray[np.float64]:
    vector = rng.standard_normal(dim)
    return vector / np.linalg.norm(vector)


def balanced_labels(n: int, rng: np.random.Generator) -> npt.NDArray[np.int64]:
    """n labels, half of each class (the extra one negative), shuffled."""
    labels = np.array([i % 2 for i in range(n)], dtype=np.int64)
    rng.shuffle(labels)
    return labels


def separable_corpus(
    n: int = 60,
    seed: int = 0,
    *,
    input_dims: Mapping[Modality, int] | None = None,
    shift: float = 1.5,
    noise: float = 0.5,
    max_rows: int = 4,
) -> list[Sample]:
    """Corpus whose class shifts every feature row along a fixed direction.

    Each modality gets 1 to max_rows rows of Gaussian noise plus +shift (PCL) or
    -shift (non-PCL) times a per-modality unit vector.

    Raises:
        DomainError: If n < 2.
    """
    if n < 2:
        raise DomainError(f"need at least 2 samples, got {n}")
    dims = dict(DEFAULT_INPUT_DIMS if input_dims is None else input_dims)
    rng = numpy_rng(seed, "synthetic", "separable")
    directions = {m: _unit(rng, dims[m]) for m in MODALITY_ORDER}
    samples = []
    for i, label in enumerate(balanced_labels(n, rng).tolist()):
        sign = 1.0 if label else -1.0
        features = {}
        for m in MODALITY_ORDER:
            rows = int(rng.integers(1, max_rows + 1))
            noise_rows = noise * rng.standard_normal((rows, dims[m]))
            features[m] = noise_rows + sign * shift * directions[m]
        samples.append(Sample(id=f"sep-{i:04d}", label=label, bundle=ModalityBundle(features)))
    logger.debug("synthetic corpus generated", kind="separable", size=n)
    return samples


def xor_bits(n: int, rng: np.random.Generator) -> npt.NDArray[np.int64]:
    """(n, 2) hidden bits cycling through all four combinations, shuffled."""
    bits = np.array([(i % 2, (i // 2) % 2) for i in range(n)], dtype=np.int64)
    rng.shuffle(bits)
    return bits


def xor_corpus(
    n: int = 80,
    seed: int = 0,
    *,
    input_dims: Mapping[Modality, int] | None = None,
    shift: float = 2.0,
    offset: float = 1.0,
    noise: float = 0.2,
) -> list[Sample]:
    """Cross-modal corpus: label = video bit XOR text bit.

    With s = +1 for a set bit and -1 otherwise, video has two rows at
    offset + s1 * shift along its direction. Text has a signal row at
    offset + s2 * shift along its direction and a counter row at -s2 * shift,
    so the text mean does not depend on b2. Face and audio are
    noise. With n a multiple of 4 every bit combination is equally frequent and
    each single bit is independent of the label.

    Raises:
        DomainError: If n < 4.
    """
    if n < 4:
        raise DomainError(f"need at least 4 samples, got {n}")
    dims = dict(DEFAULT_INPUT_DIMS if input_dims is None else input_dims)
    rng = numpy_rng(seed, "synthetic", "xor")
    directions = {m: _unit(rng, dims[m]) for m in (Modality.VIDEO, Modality.TEXT)}
    offsets = {m: offset * _unit(rng, dims[m]) for m in (Modality.VIDEO, Modality.TEXT)}

    samples = []
    for i, (b1, b2) in enumerate(xor_bits(n, rng).tolist()):
        s1, s2 = (1.0 if b1 else -1.0), (1.0 if b2 else -1.0)
        video = offsets[Modality.VIDEO] + s1 * shift * directions[Modality.VIDEO]
        signal = offsets[Modality.TEXT] + s2 * shift * directions[Modality.TEXT]
        counter = -s2 * shift * directions[Modality.TEXT]
        features = {
            Modality.VIDEO: np.stack([video, video]),
            Modality.FACE: np.zeros((2, dims[Modality.FACE])),
            Modality.AUDIO: np.zeros((2, dims[Modality.AUDIO])),
            Modality.TEXT: np.stack([signal, counter]),
        }
        features = {m: x + noise * rng.standard_normal(x.shape) for m, x in features.items()}
        samples.append(
            Sample(id=f"xor-{i:04d}", label=int(b1 != b2), bundle=ModalityBundle(features))
        )
    logger.debug("synthetic corpus generated", kind="xor", size=n)
    return samples
