"""Turn debate questions into PRO/CON search queries.

The question is tokenized, the first main verb is taken as the root, common
words are removed by a Zipf-frequency cutoff, and the root is placed back in
front of the survivors.  The CON query is the PRO query with a leading "not".
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence

from .types import Stance

if TYPE_CHECKING:
    from .corpus import Topic

DEFAULT_ZIPF_THRESHOLD = 5.6

AUX_WORDS = frozenset({
    "do", "does", "did", "is", "are", "was", "were", "be", "been",
    "can", "could", "should", "would", "will", "shall", "may", "might",
    "must", "have", "has", "had",
})


class EmptyQueryError(ValueError):
    """Raised when a question reduces to no query terms at all."""


@dataclass(frozen=True)
class Token:
    text: str
    is_punct: bool = False
    is_verb: bool = False
    is_aux: bool = False

    def __post_init__(self) -> None:
        if self.is_aux and not self.is_verb:
            raise ValueError("auxiliary tokens must be verbs")


@dataclass(frozen=True)
class VerbLexicon:
    words: frozenset[str]

    @classmethod
    def load(cls, path: str | Path) -> "VerbLexicon":
        words = set()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                word = line.strip().lower()
                if word:
                    words.add(word)
        return cls(frozenset(words))

    def __contains__(self, word: str) -> bool:
        return word in self.words


@dataclass(frozen=True)
class ZipfTable:
    """Word -> Zipf frequency (log10 occurrences per 1e9 tokens).

    Unknown words score 0.0, i.e. below any positive threshold, so rare
    words are always kept by the filter.
    """

    values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for word, z in self.values.items():
            if not 0.0 <= z <= 10.0:
                raise ValueError(f"zipf value out of range for {word!r}: {z}")

    @classmethod
    def load(cls, path: str | Path) -> "ZipfTable":
        values: dict[str, float] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected word<TAB>zipf")
                values[parts[0].lower()] = float(parts[1])
        return cls(values)

    def zipf(self, word: str) -> float:
        return self.values.get(word.lower(), 0.0)


@dataclass(frozen=True)
class Query:
    topic_id: int
    stance: Stance
    terms: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise EmptyQueryError(f"topic {self.topic_id}: query has no terms")
        if self.stance is Stance.CON and self.terms[0] != "not":
            raise ValueError("CON queries must start with 'not'")

    @property
    def text(self) -> str:
        return " ".join(self.terms)


def _resource_path(name: str) -> Path:
    return Path(str(importlib_resources.files("argimg.resources") / name))


_default_lexicon: Optional[VerbLexicon] = None
_default_zipf: Optional[ZipfTable] = None


def default_lexicon() -> VerbLexicon:
    global _default_lexicon
    if _default_lexicon is None:
        _default_lexicon = VerbLexicon.load(_resource_path("verbs.txt"))
    return _default_lexicon


def default_zipf_table() -> ZipfTable:
    global _default_zipf
    if _default_zipf is None:
        _default_zipf = ZipfTable.load(_resource_path("zipf.tsv"))
    return _default_zipf


def _is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _word_token(text: str, lexicon: VerbLexicon) -> Token:
    is_aux = text in AUX_WORDS
    return Token(text, is_verb=is_aux or text in lexicon, is_aux=is_aux)


def tokenize(text: str, lexicon: Optional[VerbLexicon] = None) -> list[Token]:
    """Split on whitespace, peel leading/trailing punctuation into their own
    tokens, lowercase, and split a trailing "n't" contraction off its stem
    (the "n't" piece is neither punctuation nor a verb)."""
    if lexicon is None:
        lexicon = default_lexicon()
    tokens: list[Token] = []
    for chunk in text.split():
        head: list[str] = []
        tail: list[str] = []
        while chunk and _is_punct_char(chunk[0]):
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and _is_punct_char(chunk[-1]):
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tail.reverse()
        tokens.extend(Token(ch, is_punct=True) for ch in head)
        if chunk:
            core = chunk.lower()
            if core.endswith("n't") and len(core) > 3:
                tokens.append(_word_token(core[:-3], lexicon))
                tokens.append(Token("n't"))
            else:
                tokens.append(_word_token(core, lexicon))
        tokens.extend(Token(ch, is_punct=True) for ch in tail)
    return tokens


def detect_root(tokens: Sequence[Token]) -> Optional[int]:
    """Index of the first main (non-auxiliary) verb, if any."""
    for i, token in enumerate(tokens):
        if token.is_verb and not token.is_aux:
            return i
    return None


def zipf_filter(
    tokens: Sequence[Token],
    table: ZipfTable,
    threshold: float = DEFAULT_ZIPF_THRESHOLD,
) -> list[str]:
    """Drop punctuation and the root token, then keep words rarer than the
    threshold.  Order is preserved."""
    root = detect_root(tokens)
    kept = []
    for i, token in enumerate(tokens):
        if token.is_punct or i == root:
            continue
        if table.zipf(token.text) < threshold:
            kept.append(token.text)
    return kept


def build_queries(
    topic: "Topic",
    table: Optional[ZipfTable] = None,
    threshold: float = DEFAULT_ZIPF_THRESHOLD,
    lexicon: Optional[VerbLexicon] = None,
) -> tuple[Query, Query]:
    """PRO and CON queries for a topic: root first, then the filtered words;
    CON prepends "not"."""
    if table is None:
        table = default_zipf_table()
    tokens = tokenize(topic.question, lexicon)
    root = detect_root(tokens)
    terms = zipf_filter(tokens, table, threshold)
    if root is not None:
        terms = [tokens[root].text] + terms
    if not terms:
        raise EmptyQueryError(
            f"topic {topic.id}: no root verb and every word filtered"
        )
    pro = Query(topic.id, Stance.PRO, tuple(terms))
    con = Query(topic.id, Stance.CON, ("not", *terms))
    return pro, con
