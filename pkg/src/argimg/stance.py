"""Zero-shot stance scoring and candidate gating.

A stance scorer receives a text plus three label strings ("pro <query>",
"contra <query>", "neutral <query>") and returns one score per label.  The
gate partitions candidates by whether their argmax label matches the query
stance, sorts each part by the target score, and truncates.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

from .corpus import ImageDocument
from .queryprep import Query
from .remote import DEFAULT_TIMEOUT, TransportError, post_json
from .types import Stance

LABEL_PREFIXES = ("pro", "contra", "neutral")


class StanceSource(Enum):
    PAGE_TEXT = "page-text"
    IMAGE_TEXT = "image-text"
    BOTH = "both"


@dataclass(frozen=True)
class StanceScores:
    pro: float
    contra: float
    neutral: float

    def __post_init__(self) -> None:
        triple = (self.pro, self.contra, self.neutral)
        if any(not 0.0 <= v <= 1.0 for v in triple):
            raise ValueError(f"stance scores must lie in [0, 1]: {triple}")
        if abs(sum(triple) - 1.0) > 1e-6:
            raise ValueError(f"stance scores must sum to 1: {triple}")

    def target(self, stance: Stance) -> float:
        return self.pro if stance is Stance.PRO else self.contra

    def argmax(self) -> str:
        triple = (self.pro, self.contra, self.neutral)
        return LABEL_PREFIXES[max(range(3), key=lambda i: (triple[i], -i))]


class StanceScorer(Protocol):
    def classify(self, text: str, labels: Sequence[str]) -> Sequence[float]:
        """Return one non-negative score per label, in label order."""
        ...


def stance_labels(query: Query) -> tuple[str, str, str]:
    """Label strings for the three stances; a leading "not" on CON queries
    is stripped so the label prefix alone carries the stance."""
    terms = query.terms
    if terms and terms[0] == "not":
        terms = terms[1:]
    joined = " ".join(terms)
    return tuple(f"{prefix} {joined}" for prefix in LABEL_PREFIXES)  # type: ignore[return-value]


def score_stance(scorer: StanceScorer, text: str, query: Query) -> StanceScores:
    labels = stance_labels(query)
    raw = list(scorer.classify(text, labels))
    if len(raw) != 3:
        raise ValueError(f"scorer returned {len(raw)} scores, expected 3")
    if any(not math.isfinite(v) or v < 0.0 for v in raw):
        raise ValueError(f"scorer returned invalid scores: {raw}")
    total = sum(raw)
    if total <= 0.0:
        raise ValueError("scorer returned all-zero scores")
    if abs(total - 1.0) <= 1e-9:  # already normalized: pass through exactly
        return StanceScores(raw[0], raw[1], raw[2])
    return StanceScores(raw[0] / total, raw[1] / total, raw[2] / total)


def _combined_scores(
    scorer: StanceScorer, doc: ImageDocument, query: Query, source: StanceSource
) -> StanceScores:
    if source is StanceSource.PAGE_TEXT:
        return score_stance(scorer, doc.page_text, query)
    if source is StanceSource.IMAGE_TEXT:
        return score_stance(scorer, doc.image_text, query)
    a = score_stance(scorer, doc.page_text, query)
    b = score_stance(scorer, doc.image_text, query)
    mean = ((a.pro + b.pro) / 2, (a.contra + b.contra) / 2,
            (a.neutral + b.neutral) / 2)
    total = sum(mean)
    if abs(total - 1.0) <= 1e-9:
        return StanceScores(*mean)
    return StanceScores(mean[0] / total, mean[1] / total, mean[2] / total)


def stance_gate(
    candidates: Sequence[tuple[ImageDocument, float]],
    query: Query,
    scorer: StanceScorer,
    source: StanceSource,
    keep: int,
) -> list[tuple[str, StanceScores]]:
    """Reorder candidates by stance and truncate to `keep`.

    Candidates whose argmax label matches the query stance come first,
    ordered by target score descending; the rest follow, also by target
    score descending.  Ties break on image id ascending.
    """
    if keep < 1:
        raise ValueError("keep must be >= 1")
    target_label = "pro" if query.stance is Stance.PRO else "contra"
    rows = []
    for doc, _preselect_score in candidates:
        scores = _combined_scores(scorer, doc, query, source)
        rows.append((doc.id, scores))
    rows.sort(
        key=lambda row: (
            0 if row[1].argmax() == target_label else 1,
            -row[1].target(query.stance),
            row[0],
        )
    )
    return rows[:keep]


def _hash_unit(text: str, label: str) -> float:
    digest = hashlib.blake2b(
        f"{text}\x1f{label}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") / 2.0**64


def text_key(text: str) -> str:
    """Fixture key for a text (sha256 hex), so fixtures never embed texts."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class StubStanceScorer:
    """Deterministic scorer for model-free runs and tests.

    Looks up (text hash, labels) in the fixtures first; otherwise derives
    pseudo-probabilities from a stable 64-bit hash of (text, label),
    softmax-normalized.
    """

    def __init__(
        self,
        fixtures: dict[tuple[str, tuple[str, ...]], Sequence[float]] | None = None,
    ) -> None:
        self.fixtures = dict(fixtures or {})

    @classmethod
    def from_fixture_file(cls, path: str | Path) -> "StubStanceScorer":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        fixtures = {}
        for entry in payload["entries"]:
            key = (entry["text_sha256"], tuple(entry["labels"]))
            fixtures[key] = [float(v) for v in entry["scores"]]
        return cls(fixtures)

    def classify(self, text: str, labels: Sequence[str]) -> list[float]:
        fixture = self.fixtures.get((text_key(text), tuple(labels)))
        if fixture is not None:
            return list(fixture)
        raw = [_hash_unit(text, label) for label in labels]
        exps = [math.exp(v) for v in raw]
        total = sum(exps)
        return [v / total for v in exps]


class RemoteStanceScorer:
    """Client for the /classify endpoint of the inference service."""

    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def classify(self, text: str, labels: Sequence[str]) -> list[float]:
        payload = {"text": text, "labels": list(labels)}
        body = post_json(f"{self.base_url}/classify", payload, self.timeout)
        scores = body.get("scores") if isinstance(body, dict) else None
        if not isinstance(scores, list) or len(scores) != len(labels):
            raise TransportError(f"malformed /classify response: {body!r}")
        return [float(v) for v in scores]
