"""Shared fixtures."""

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixture_manifest() -> Path:
    """The bundled 6-entry manifest."""
    return FIXTURES / "manifest.jsonl"


@pytest.fixture
def fixture_annotations() -> Path:
    """The bundled 4-item, 3-annotator annotation table."""
    return FIXTURES / "annotations.csv"
