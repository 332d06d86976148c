"""Model checkpoints.

Layout: b"PCLM", version byte, u32 LE length of a UTF-8 JSON header holding the
variant and the fusion configuration, then one section per parameter: u16 LE name
length, name, and a matrix section (1-D parameters stored as 1 x n).
"""

import json
import struct
from pathlib import Path

import numpy as np
import structlog
import torch

from multipcl.codec import SectionReader, atomic_write, encode_header, encode_matrix
from multipcl.config.models import FusionConfig
from multipcl.errors import CacheError, CheckpointError
from multipcl.fusion.model import FusionBase, build_model

logger = structlog.get_logger()

MAGIC = b"PCLM"

_LENGTH = struct.Struct("<I")
_NAME = struct.Struct("<H")


def dump_checkpoint(model: FusionBase) -> bytes:
    """Serialize a model's configuration and parameters."""
    header = json.dumps(
        {"variant": model.variant, "config": model.config.model_dump(mode="json")},
        sort_keys=True,
    ).encode("utf-8")
    parts = [encode_header(MAGIC), _LENGTH.pack(len(header)), header]
    for name, tensor in model.state_dict().items():
        encoded = name.encode("utf-8")
        values = tensor.detach().numpy()
        parts.append(_NAME.pack(len(encoded)) + encoded)
        parts.append(encode_matrix(values.reshape(1, -1) if values.ndim == 1 else values))
    return b"".join(parts)


def save_checkpoint(model: FusionBase, path: str | Path) -> None:
    """Write a checkpoint atomically.

    Parameters are stored as float32.
    """
    atomic_write(Path(path), dump_checkpoint(model))
    logger.debug("checkpoint saved", path=str(path), parameters=model.parameter_count())


def parse_checkpoint(
    data: bytes, expected: FusionConfig | None = None, variant: str | None = None
) -> FusionBase:
    """Rebuild a model from checkpoint bytes.

    Args:
        data: Checkpoint bytes.
        expected: If given, the stored configuration must equal it.
        variant: If given, the stored variant must equal it.

    Returns:
        Model in eval mode.

    Raises:
        CheckpointError: On corruption, config or variant mismatch, or missing and
            unexpected parameters.
    """
    reader = SectionReader(data)
    try:
        reader.read_header(MAGIC)
        (length,) = _LENGTH.unpack(reader.read(_LENGTH.size, "config"))
        header = json.loads(reader.read(length, "config").decode("utf-8"))
        config = FusionConfig.model_validate(header["config"])
        stored_variant = str(header["variant"])
    except CacheError as e:
        raise CheckpointError(str(e)) from e
    except (ValueError, KeyError) as e:
        raise CheckpointError(f"config: unreadable header: {e}") from e

    if expected is not None and config != expected:
        raise CheckpointError(
            f"checkpoint config does not match: stored {config.model_dump(mode='json')}, "
            f"expected {expected.model_dump(mode='json')}"
        )
    if variant is not None and stored_variant != variant:
        raise CheckpointError(f"checkpoint holds a {stored_variant} model, expected {variant}")

    model = build_model(config, stored_variant)
    state = model.state_dict()
    loaded: dict[str, torch.Tensor] = {}
    try:
        while not reader.exhausted:
            (size,) = _NAME.unpack(reader.read(_NAME.size, "parameter name"))
            name = reader.read(size, "parameter name").decode("utf-8")
            matrix = reader.read_matrix(name)
            if name not in state:
                raise CheckpointError(f"unexpected parameter {name}")
            if matrix.size != state[name].numel():
                raise CheckpointError(
                    f"{name}: {matrix.size} values, model expects {state[name].numel()}"
                )
            loaded[name] = torch.from_numpy(
                np.asarray(matrix, dtype=np.float64).reshape(state[name].shape)
            )
    except CacheError as e:
        raise CheckpointError(str(e)) from e
    except UnicodeDecodeError as e:
        raise CheckpointError(f"parameter name: {e}") from e

    missing = sorted(set(state) - set(loaded))
    if missing:
        raise CheckpointError(f"missing parameters: {missing}")
    model.load_state_dict(loaded)
    model.eval()
    return model


def load_checkpoint(
    path: str | Path, expected: FusionConfig | None = None, variant: str | None = None
) -> FusionBase:
    """Load a model written by save_checkpoint (see parse_checkpoint)."""
    return parse_checkpoint(Path(path).read_bytes(), expected, variant)
