"""Topics, image corpus, run files, and raw annotations.

File formats:
  topics        one JSON object per line: {"id": int, "question": str}
  corpus        <dir>/<image_id>/image.(png|pgm) + page-text.txt
                [+ image-text.txt]
  run file      "topic_id stance image_id rank score tag", score printed
                with 6 decimals, LF endings
  annotations   TSV: image_id<TAB>topic_id<TAB>annotator_id<TAB>label
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .types import Label, Stance
from .vision.image import GrayImage, read_image


class FormatError(ValueError):
    """Malformed input file; message carries the file and line number."""


@dataclass(frozen=True)
class Topic:
    id: int
    question: str

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise ValueError(f"topic id must be positive, got {self.id}")
        if not self.question:
            raise ValueError(f"topic {self.id}: empty question")


@dataclass(frozen=True)
class ImageDocument:
    id: str
    image: GrayImage
    page_text: str
    image_text: str = ""


@dataclass(frozen=True)
class RunEntry:
    topic_id: int
    stance: Stance
    image_id: str
    rank: int
    score: float
    tag: str

    def __post_init__(self) -> None:
        if self.topic_id <= 0:
            raise ValueError("topic_id must be positive")
        if self.rank < 1:
            raise ValueError(f"ranks are 1-based, got {self.rank}")
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")


@dataclass(frozen=True)
class Annotation:
    image_id: str
    topic_id: int
    annotator_id: str
    label: Label


def load_topics(path: str | Path) -> list[Topic]:
    topics: list[Topic] = []
    seen: set[int] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                topic = Topic(int(obj["id"]), str(obj["question"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad topic line: {exc}") from exc
            if topic.id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate topic id {topic.id}")
            seen.add(topic.id)
            topics.append(topic)
    return topics


def save_topics(topics: Iterable[Topic], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic in topics:
            fh.write(json.dumps({"id": topic.id, "question": topic.question}))
            fh.write("\n")


def load_corpus(directory: str | Path) -> Iterator[ImageDocument]:
    """Lazily yield documents in lexicographic id order.

    Each subdirectory of `directory` is one image document; a missing
    image-text.txt means an empty image_text, a missing page-text.txt or
    image file is an error naming the id.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    for sub in sorted(p for p in directory.iterdir() if p.is_dir()):
        image_id = sub.name
        image_path = None
        for candidate in ("image.png", "image.pgm"):
            if (sub / candidate).is_file():
                image_path = sub / candidate
                break
        if image_path is None:
            raise FormatError(f"corpus id {image_id!r}: no image.png or image.pgm")
        page_path = sub / "page-text.txt"
        if not page_path.is_file():
            raise FormatError(f"corpus id {image_id!r}: missing page-text.txt")
        image_text_path = sub / "image-text.txt"
        image_text = (
            image_text_path.read_text(encoding="utf-8")
            if image_text_path.is_file()
            else ""
        )
        yield ImageDocument(
            id=image_id,
            image=read_image(image_path),
            page_text=page_path.read_text(encoding="utf-8"),
            image_text=image_text,
        )


def _validate_run(entries: Iterable[RunEntry]) -> None:
    groups: dict[tuple[int, Stance], list[RunEntry]] = {}
    for entry in entries:
        for field_name in ("image_id", "tag"):
            value = getattr(entry, field_name)
            if not value or any(ch.isspace() for ch in value):
                raise ValueError(
                    f"{field_name} must be non-empty and whitespace-free: "
                    f"{value!r}"
                )
        groups.setdefault((entry.topic_id, entry.stance), []).append(entry)
    for (topic_id, stance), group in groups.items():
        where = f"group ({topic_id}, {stance})"
        ranks = sorted(e.rank for e in group)
        if ranks != list(range(1, len(group) + 1)):
            raise ValueError(f"{where}: ranks not contiguous from 1")
        by_rank = sorted(group, key=lambda e: e.rank)
        for a, b in zip(by_rank, by_rank[1:]):
            if b.score > a.score:
                raise ValueError(f"{where}: scores increase with rank")
        ids = [e.image_id for e in group]
        if len(set(ids)) != len(ids):
            raise ValueError(f"{where}: duplicate image ids")


def write_run(entries: list[RunEntry], path: str | Path) -> None:
    _validate_run(entries)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fh.write(
                f"{e.topic_id} {e.stance} {e.image_id} {e.rank} "
                f"{e.score:.6f} {e.tag}\n"
            )


def read_run(path: str | Path) -> list[RunEntry]:
    entries: list[RunEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 6:
                raise FormatError(f"{path}:{lineno}: expected 6 fields")
            try:
                entry = RunEntry(
                    topic_id=int(parts[0]),
                    stance=Stance(parts[1]),
                    image_id=parts[2],
                    rank=int(parts[3]),
                    score=float(parts[4]),
                    tag=parts[5],
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            entries.append(entry)
    _validate_run(entries)
    return entries


def load_annotations(path: str | Path) -> list[Annotation]:
    annotations: list[Annotation] = []
    seen: set[tuple[str, int, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(
                    f"{path}:{lineno}: expected image_id, topic_id, "
                    f"annotator_id, label"
                )
            try:
                ann = Annotation(
                    image_id=parts[0],
                    topic_id=int(parts[1]),
                    annotator_id=parts[2],
                    label=Label.parse(parts[3]),
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            key = (ann.image_id, ann.topic_id, ann.annotator_id)
            if key in seen:
                raise FormatError(
                    f"{path}:{lineno}: duplicate annotation for {key}"
                )
            seen.add(key)
            annotations.append(ann)
    return annotations


def save_annotations(annotations: Iterable[Annotation], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ann in annotations:
            fh.write(
                f"{ann.image_id}\t{ann.topic_id}\t{ann.annotator_id}\t"
                f"{ann.label}\n"
            )
