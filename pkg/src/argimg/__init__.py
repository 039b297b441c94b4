"""Stance-aware argument image retrieval and its evaluation stack."""

__version__ = "0.1.0"

from .types import Label, Stance  # noqa: F401
