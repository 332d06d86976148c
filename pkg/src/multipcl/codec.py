"""Binary matrix layout shared by the feature cache and model checkpoints.

A matrix section is: row count (u32 LE), column count (u32 LE), then row-major
float32 LE values. Files start with 4 magic bytes and a version byte.
"""

import os
import struct
import tempfile
from pathlib import Path

import numpy as np
import numpy.typing as npt

from multipcl.errors import CacheError

FORMAT_VERSION = 1

_DIMS = struct.Struct("<II")
_FLOAT = np.dtype("<f4")


def encode_header(magic: bytes) -> bytes:
    """Magic bytes followed by the format version byte."""
    return magic + bytes([FORMAT_VERSION])


def encode_matrix(matrix: npt.ArrayLike) -> bytes:
    """Encode a 2-D matrix as dims + float32 payload."""
    array = np.asarray(matrix)
    if array.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {array.shape}")
    rows, cols = array.shape
    return _DIMS.pack(rows, cols) + np.ascontiguousarray(array, dtype=_FLOAT).tobytes()


class SectionReader:
    """Sequential reader over an in-memory file with section-aware errors."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._offset = 0

    @property
    def exhausted(self) -> bool:
        return self._offset >= len(self._data)

    def read(self, size: int, section: str) -> bytes:
        """Read exactly size bytes.

        Raises:
            CacheError: If fewer than size bytes remain.
        """
        end = self._offset + size
        if end > len(self._data):
            raise CacheError(
                section,
                f"truncated payload (need {size} bytes, {len(self._data) - self._offset} left)",
            )
        chunk = self._data[self._offset : end]
        self._offset = end
        return chunk

    def read_header(self, magic: bytes) -> None:
        """Validate magic bytes and version.

        Raises:
            CacheError: On mismatch.
        """
        found = self.read(len(magic), "header")
        if found != magic:
            raise CacheError("header", f"bad magic bytes {found!r}, expected {magic!r}")
        version = self.read(1, "header")[0]
        if version != FORMAT_VERSION:
            raise CacheError("header", f"unsupported version {version}")

    def read_matrix(self, section: str) -> npt.NDArray[np.float32]:
        """Read one dims + payload matrix."""
        rows, cols = _DIMS.unpack(self.read(_DIMS.size, section))
        payload = self.read(rows * cols * _FLOAT.itemsize, section)
        return np.frombuffer(payload, dtype=_FLOAT).astype(np.float32).reshape(rows, cols)


def atomic_write(path: Path, data: bytes) -> None:
    """Write data so readers see either the old file or the complete new one."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
