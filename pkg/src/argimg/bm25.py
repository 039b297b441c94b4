"""Inverted index over page text (truncated to 4096 chars) with BM25 top-k.

idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which is non-negative for all
df <= N, so scores are non-negative and a document scores > 0 exactly when
it contains at least one query term.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import ImageDocument
from .queryprep import Query, tokenize

DEFAULT_MAX_CHARS = 4096
DEFAULT_K1 = 1.2
DEFAULT_B = 0.75
DEFAULT_PRESELECT = 50

_INDEX_MAGIC = "argimg-index"
_INDEX_VERSION = 1


@dataclass
class Index:
    postings: dict[str, list[tuple[int, int]]]  # term -> [(ordinal, tf)]
    doc_len: list[int]
    avg_len: float
    doc_ids: list[str]
    max_chars: int

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)


@dataclass(frozen=True)
class ScoredImage:
    image_id: str
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")


def index_terms(text: str, max_chars: int = DEFAULT_MAX_CHARS) -> list[str]:
    """Truncate to max_chars characters, tokenize, and drop punctuation."""
    return [t.text for t in tokenize(text[:max_chars]) if not t.is_punct]


def build_index(
    corpus: Iterable[ImageDocument], max_chars: int = DEFAULT_MAX_CHARS
) -> Index:
    if max_chars <= 0:
        raise ValueError("max_chars must be positive")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_len: list[int] = []
    doc_ids: list[str] = []
    for ordinal, doc in enumerate(corpus):
        terms = index_terms(doc.page_text, max_chars)
        doc_len.append(len(terms))
        doc_ids.append(doc.id)
        counts: dict[str, int] = {}
        for term in terms:
            counts[term] = counts.get(term, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((ordinal, tf))
    if not doc_ids:
        raise ValueError("cannot index an empty corpus")
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("duplicate document ids in corpus")
    return Index(
        postings=postings,
        doc_len=doc_len,
        avg_len=sum(doc_len) / len(doc_len),
        doc_ids=doc_ids,
        max_chars=max_chars,
    )


def idf(index: Index, term: str) -> float:
    df = len(index.postings.get(term, ()))
    return math.log(1.0 + (index.n_docs - df + 0.5) / (df + 0.5))


def bm25_score(
    index: Index,
    query_terms: Iterable[str],
    doc_ordinal: int,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> float:
    """BM25 over distinct query terms; duplicates score once."""
    if not 0 <= doc_ordinal < index.n_docs:
        raise IndexError(f"doc ordinal {doc_ordinal} out of range")
    dl = index.doc_len[doc_ordinal]
    norm = k1 * (1.0 - b + b * dl / index.avg_len) if index.avg_len > 0 else k1
    score = 0.0
    for term in dict.fromkeys(query_terms):  # de-dup, keep order
        plist = index.postings.get(term)
        if not plist:
            continue
        tf = 0
        for ordinal, term_freq in plist:
            if ordinal == doc_ordinal:
                tf = term_freq
                break
        if tf == 0:
            continue
        score += idf(index, term) * tf * (k1 + 1.0) / (tf + norm)
    return score


def retrieve(
    index: Index,
    query: Query,
    k: int = DEFAULT_PRESELECT,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> list[ScoredImage]:
    """Top-k by BM25 score (descending), ties broken by image id ascending.

    Only documents with a positive score are returned, so fewer than k
    results means fewer than k documents matched any query term.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    candidates: set[int] = set()
    for term in dict.fromkeys(query.terms):
        for ordinal, _ in index.postings.get(term, ()):
            candidates.add(ordinal)
    scored = []
    for ordinal in candidates:
        score = bm25_score(index, query.terms, ordinal, k1=k1, b=b)
        if score > 0.0:
            scored.append(ScoredImage(index.doc_ids[ordinal], score))
    scored.sort(key=lambda s: (-s.score, s.image_id))
    return scored[:k]


def save_index(index: Index, path: str | Path) -> None:
    payload = {
        "magic": _INDEX_MAGIC,
        "version": _INDEX_VERSION,
        "max_chars": index.max_chars,
        "doc_ids": index.doc_ids,
        "doc_len": index.doc_len,
        "postings": {t: p for t, p in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_index(path: str | Path) -> Index:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("magic") != _INDEX_MAGIC:
        raise ValueError(f"{path}: not an argimg index file")
    if payload.get("version") != _INDEX_VERSION:
        raise ValueError(f"{path}: unsupported index version")
    doc_len = [int(x) for x in payload["doc_len"]]
    return Index(
        postings={
            t: [(int(o), int(tf)) for o, tf in plist]
            for t, plist in payload["postings"].items()
        },
        doc_len=doc_len,
        avg_len=sum(doc_len) / len(doc_len),
        doc_ids=[str(d) for d in payload["doc_ids"]],
        max_chars=int(payload["max_chars"]),
    )
