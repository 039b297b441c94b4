"""Shared enums used across corpus records, queries, and judgments."""
from __future__ import annotations

from enum import Enum


class Stance(Enum):
    PRO = "PRO"
    CON = "CON"

    def __str__(self) -> str:
        return self.value


class Label(Enum):
    """Annotation / qrels label vocabulary."""

    OFF_TOPIC = "off-topic"
    PRO = "pro"
    CON = "con"
    NEUTRAL = "neutral"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, raw: str) -> "Label":
        key = raw.strip().lower().replace("_", "-")
        for label in cls:
            if label.value == key:
                return label
        raise ValueError(f"unknown label: {raw!r}")


LABELS = tuple(Label)
