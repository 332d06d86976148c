"""Multimodal patronizing-language video classifier."""

__version__ = "2026.10.0"
