"""Binary feature cache for one bundle per file.

Layout: b"PCLF", version byte, then per present modality a tag byte (V, F, A or T)
followed by a matrix section, until end of file.
"""

from pathlib import Path

from multipcl.codec import SectionReader, atomic_write, encode_header, encode_matrix
from multipcl.errors import CacheError
from multipcl.types import MODALITY_ORDER, FloatMatrix, Modality, ModalityBundle

MAGIC = b"PCLF"


def dump_bundle(bundle: ModalityBundle) -> bytes:
    """Serialize a bundle, sections in canonical modality order."""
    parts = [encode_header(MAGIC)]
    for modality in MODALITY_ORDER:
        matrix = bundle.get(modality)
        if matrix is not None:
            parts.append(modality.code.encode("ascii"))
            parts.append(encode_matrix(matrix))
    return b"".join(parts)


def parse_bundle(data: bytes) -> ModalityBundle:
    """Deserialize a bundle.

    Raises:
        CacheError: Naming the section that failed (header, tag or modality).
    """
    reader = SectionReader(data)
    reader.read_header(MAGIC)
    features: dict[Modality, FloatMatrix] = {}
    while not reader.exhausted:
        tag = reader.read(1, "tag")
        try:
            modality = Modality.from_code(tag.decode("ascii"))
        except (UnicodeDecodeError, ValueError) as e:
            raise CacheError("tag", f"unknown modality tag {tag!r}") from e
        if modality in features:
            raise CacheError(str(modality), "section appears twice")
        features[modality] = reader.read_matrix(str(modality))
    return ModalityBundle(features)


def cache_bundle(bundle: ModalityBundle, path: str | Path) -> None:
    """Write a bundle atomically (write to a temporary file, then rename)."""
    atomic_write(Path(path), dump_bundle(bundle))


def load_cached(path: str | Path) -> ModalityBundle:
    """Read a bundle written by cache_bundle.

    Raises:
        CacheError: If the file is corrupt or truncated.
        OSError: If the file cannot be read.
    """
    return parse_bundle(Path(path).read_bytes())
