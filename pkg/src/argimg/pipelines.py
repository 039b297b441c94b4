"""The five run configurations and result pooling.

Every pipeline preselects candidates with BM25.  Pipelines 1-3 reorder the
candidates with stance detection (page text, image text, or both) before
the vision stage; pipeline 0 keeps the BM25 order.  All of them then
generate two styled reference images per query and rank candidates by
summed feature-match score.  The reference baseline is plain BM25 over the
raw question, a documented stand-in for an externally provided baseline
system.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

from .bm25 import DEFAULT_PRESELECT, Index, retrieve
from .corpus import ImageDocument, RunEntry, Topic
from .imagegen import DEFAULT_SIZE, ImageGenerator, build_prompts, generate
from .queryprep import (
    DEFAULT_ZIPF_THRESHOLD,
    EmptyQueryError,
    Query,
    VerbLexicon,
    ZipfTable,
    build_queries,
    tokenize,
)
from .stance import StanceScorer, StanceSource, stance_gate
from .types import Stance
from .vision.match import (
    ImageFeatures,
    MatchParams,
    ReferenceIndex,
    extract_features,
    match_score_features,
)

DEFAULT_OUTPUT_DEPTH = 10


class PipelineId(Enum):
    BASELINE_REF = "baseline"
    P0 = "0"
    P1 = "1"
    P2 = "2"
    P3 = "3"


class RankOrder(Enum):
    MATCH_FIRST = "match-first"
    STANCE_FIRST = "stance-first"


_STANCE_SOURCES = {
    PipelineId.BASELINE_REF: None,
    PipelineId.P0: None,
    PipelineId.P1: StanceSource.PAGE_TEXT,
    PipelineId.P2: StanceSource.IMAGE_TEXT,
    PipelineId.P3: StanceSource.BOTH,
}

_DEFAULT_TAGS = {
    PipelineId.BASELINE_REF: "baseline-ref",
    PipelineId.P0: "pipeline-0",
    PipelineId.P1: "pipeline-1",
    PipelineId.P2: "pipeline-2",
    PipelineId.P3: "pipeline-3",
}


@dataclass(frozen=True)
class PipelineConfig:
    pipeline: PipelineId
    preselect_k: int = DEFAULT_PRESELECT
    output_depth: int = DEFAULT_OUTPUT_DEPTH
    stance_source: Optional[StanceSource] = None
    match: MatchParams = field(default_factory=MatchParams)
    order: RankOrder = RankOrder.MATCH_FIRST
    zipf_threshold: float = DEFAULT_ZIPF_THRESHOLD
    prompt_size: int = DEFAULT_SIZE
    tag: str = ""

    def __post_init__(self) -> None:
        if self.output_depth < 1 or self.output_depth > self.preselect_k:
            raise ValueError("need 1 <= output_depth <= preselect_k")

    @classmethod
    def for_pipeline(cls, pipeline: PipelineId, **overrides) -> "PipelineConfig":
        config = cls(
            pipeline=pipeline,
            stance_source=_STANCE_SOURCES[pipeline],
            tag=_DEFAULT_TAGS[pipeline],
        )
        return replace(config, **overrides) if overrides else config


@dataclass
class RunResult:
    entries: list[RunEntry]
    warnings: list[str] = field(default_factory=list)

    def by_group(self) -> dict[tuple[int, Stance], list[RunEntry]]:
        groups: dict[tuple[int, Stance], list[RunEntry]] = {}
        for entry in self.entries:
            groups.setdefault((entry.topic_id, entry.stance), []).append(entry)
        for group in groups.values():
            group.sort(key=lambda e: e.rank)
        return groups


def _baseline_query(topic: Topic, lexicon: Optional[VerbLexicon]) -> Query:
    terms = [t.text for t in tokenize(topic.question, lexicon) if not t.is_punct]
    if not terms:
        raise EmptyQueryError(f"topic {topic.id}: question has no words")
    return Query(topic.id, Stance.PRO, tuple(terms))


class _FeatureCache:
    """Per-run feature store so an image is analyzed at most once."""

    def __init__(self, params: MatchParams) -> None:
        self.params = params
        self._store: dict[str, ImageFeatures] = {}

    def get(self, doc: ImageDocument) -> ImageFeatures:
        if doc.id not in self._store:
            self._store[doc.id] = extract_features(doc.image, self.params)
        return self._store[doc.id]


def run_pipeline(
    config: PipelineConfig,
    topics: Sequence[Topic],
    corpus: Iterable[ImageDocument],
    index: Index,
    scorer: Optional[StanceScorer] = None,
    generator: Optional[ImageGenerator] = None,
    zipf_table: Optional[ZipfTable] = None,
    lexicon: Optional[VerbLexicon] = None,
) -> RunResult:
    docs = {doc.id: doc for doc in corpus}
    if config.stance_source is not None and scorer is None:
        raise ValueError(f"pipeline {config.pipeline.value} needs a stance scorer")
    if config.pipeline is not PipelineId.BASELINE_REF and generator is None:
        raise ValueError(f"pipeline {config.pipeline.value} needs a generator")

    entries: list[RunEntry] = []
    warnings: list[str] = []
    cache = _FeatureCache(config.match)
    reference_cache: dict[tuple[str, ...], list[ReferenceIndex]] = {}

    for topic in sorted(topics, key=lambda t: t.id):
        try:
            if config.pipeline is PipelineId.BASELINE_REF:
                base = _baseline_query(topic, lexicon)
                queries = [
                    base,
                    Query(topic.id, Stance.CON, ("not", *base.terms)),
                ]
            else:
                queries = list(
                    build_queries(topic, zipf_table, config.zipf_threshold, lexicon)
                )
        except EmptyQueryError as exc:
            warnings.append(f"skipped topic {topic.id}: {exc}")
            continue

        for query in queries:
            preselected = retrieve(index, query, config.preselect_k)
            if config.pipeline is PipelineId.BASELINE_REF:
                ranked = [(s.image_id, s.score) for s in preselected]
                for rank, (image_id, score) in enumerate(
                    ranked[: config.output_depth], 1
                ):
                    entries.append(
                        RunEntry(topic.id, query.stance, image_id, rank,
                                 score, config.tag)
                    )
                continue

            if not preselected:
                continue
            if config.stance_source is not None:
                gated = stance_gate(
                    [(docs[s.image_id], s.score) for s in preselected],
                    query,
                    scorer,
                    config.stance_source,
                    keep=len(preselected),
                )
                ordered_ids = [image_id for image_id, _ in gated]
            else:
                ordered_ids = [s.image_id for s in preselected]

            references = reference_cache.get(query.terms)
            if references is None:
                prompts = build_prompts(query, config.prompt_size, config.prompt_size)
                references = [
                    ReferenceIndex.build(
                        extract_features(generate(generator, p), config.match),
                        config.match,
                    )
                    for p in prompts
                ]
                reference_cache[query.terms] = references

            scored = []
            for position, image_id in enumerate(ordered_ids):
                score = match_score_features(
                    cache.get(docs[image_id]), references, config.match
                )
                scored.append((image_id, position, score))
            if config.order is RankOrder.MATCH_FIRST:
                scored.sort(key=lambda row: (-row[2], row[1], row[0]))
                final_scores = [float(score) for _, _, score in scored]
            else:
                scored.sort(key=lambda row: (row[1], -row[2], row[0]))
                # positional pseudo-scores keep the run-file invariant
                # (non-increasing scores) under stance-first ordering
                final_scores = [float(len(scored) - i) for i in range(len(scored))]
            for rank, ((image_id, _, _), score) in enumerate(
                list(zip(scored, final_scores))[: config.output_depth], 1
            ):
                entries.append(
                    RunEntry(topic.id, query.stance, image_id, rank, score,
                             config.tag)
                )

    entries.sort(key=lambda e: (e.topic_id, e.stance.value != "PRO", e.rank))
    return RunResult(entries=entries, warnings=warnings)


@dataclass(frozen=True)
class PoolResult:
    pairs: frozenset[tuple[int, str]]
    considered: int  # pre-dedup count: sum over runs/groups of top-depth sizes


def pool_runs(
    runs: Sequence[RunResult | Sequence[RunEntry]],
    depth: int = DEFAULT_OUTPUT_DEPTH,
) -> PoolResult:
    """Union of top-`depth` (topic, image) pairs over all runs and groups."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    pairs: set[tuple[int, str]] = set()
    considered = 0
    for run in runs:
        entries = run.entries if isinstance(run, RunResult) else run
        groups: dict[tuple[int, Stance], list[RunEntry]] = {}
        for entry in entries:
            groups.setdefault((entry.topic_id, entry.stance), []).append(entry)
        for group in groups.values():
            group.sort(key=lambda e: e.rank)
            top = group[:depth]
            considered += len(top)
            pairs.update((e.topic_id, e.image_id) for e in top)
    return PoolResult(pairs=frozenset(pairs), considered=considered)
