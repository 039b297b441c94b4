from __future__ import annotations

import pytest

from argimg import bm25
from argimg.corpus import ImageDocument, RunEntry, Topic
from argimg.imagegen import StubGenerator
from argimg.pipelines import (
    PipelineConfig,
    PipelineId,
    RankOrder,
    RunResult,
    pool_runs,
    run_pipeline,
)
from argimg.queryprep import ZipfTable
from argimg.stance import StubStanceScorer
from argimg.types import Stance
from argimg.vision.image import GrayImage
from argimg.vision.match import MatchParams
from argimg.vision.sift import SiftParams

_FAST_MATCH = MatchParams(sift=SiftParams(max_keypoints=60))


def _tiny_corpus(rng):
    """Six 64x64 noise docs whose texts mention 'legalize testing'."""
    docs = []
    for i in range(6):
        pixels = rng.random((64, 64))
        docs.append(
            ImageDocument(
                id=f"d{i}",
                image=GrayImage(pixels),
                page_text=f"should we legalize testing {'very ' * i}widely",
                image_text=f"poster {i}",
            )
        )
    return docs


@pytest.fixture()
def tiny_setup(rng):
    docs = _tiny_corpus(rng)
    index = bm25.build_index(docs)
    topics = [Topic(1, "Should we legalize testing?")]
    table = ZipfTable({"should": 6.0, "we": 6.5})
    return docs, index, topics, table


def _config(pipeline, **overrides):
    defaults = dict(
        preselect_k=6, output_depth=4, match=_FAST_MATCH, prompt_size=64
    )
    defaults.update(overrides)
    return PipelineConfig.for_pipeline(pipeline, **defaults)


def test_baseline_equals_bm25_order(tiny_setup):
    docs, index, topics, table = tiny_setup
    config = _config(PipelineId.BASELINE_REF)
    result = run_pipeline(config, topics, docs, index, zipf_table=table)
    groups = result.by_group()
    from argimg.queryprep import Query

    raw_terms = ("should", "we", "legalize", "testing")
    expected = bm25.retrieve(index, Query(1, Stance.PRO, raw_terms), 6)
    for stance in Stance:
        group = groups[(1, stance)]
        assert [e.image_id for e in group] == [s.image_id for s in expected[:4]]
        assert [e.score for e in group] == [s.score for s in expected[:4]]


def test_p0_candidates_come_from_preselection(tiny_setup):
    docs, index, topics, table = tiny_setup
    config = _config(PipelineId.P0)
    result = run_pipeline(
        config, topics, docs, index, StubStanceScorer(), StubGenerator(), table
    )
    from argimg.queryprep import build_queries

    pro, con = build_queries(topics[0], table)
    allowed = {
        s.image_id for q in (pro, con) for s in bm25.retrieve(index, q, 6)
    }
    assert {e.image_id for e in result.entries} <= allowed
    assert result.entries, "pipeline returned nothing"


def test_stance_pipelines_share_candidate_sets(tiny_setup):
    docs, index, topics, table = tiny_setup
    results = {}
    for pid in (PipelineId.P0, PipelineId.P1, PipelineId.P2, PipelineId.P3):
        results[pid] = run_pipeline(
            _config(pid, output_depth=6),
            topics,
            docs,
            index,
            StubStanceScorer(),
            StubGenerator(),
            table,
        )
    for stance in Stance:
        baseline_ids = {
            e.image_id for e in results[PipelineId.P0].by_group()[(1, stance)]
        }
        for pid in (PipelineId.P1, PipelineId.P2, PipelineId.P3):
            ids = {e.image_id for e in results[pid].by_group()[(1, stance)]}
            assert ids == baseline_ids  # stance only reorders


def test_short_group_when_few_matches(tiny_setup, rng):
    docs, index, topics, table = tiny_setup
    # only 3 docs mention the query words at all
    sparse_docs = docs[:3]
    sparse_index = bm25.build_index(sparse_docs)
    config = _config(PipelineId.P0)
    result = run_pipeline(
        config, topics, sparse_docs, sparse_index, None, StubGenerator(), table
    )
    for group in result.by_group().values():
        assert len(group) == 3  # fewer docs than output_depth


def test_run_is_deterministic(tiny_setup):
    docs, index, topics, table = tiny_setup
    config = _config(PipelineId.P3)
    first = run_pipeline(
        config, topics, docs, index, StubStanceScorer(), StubGenerator(), table
    )
    second = run_pipeline(
        config, topics, docs, index, StubStanceScorer(), StubGenerator(), table
    )
    assert first.entries == second.entries


def test_warning_on_unparseable_topic(tiny_setup):
    docs, index, topics, table = tiny_setup
    bad = Topic(9, "???")
    config = _config(PipelineId.P0)
    result = run_pipeline(
        config, [topics[0], bad], docs, index, None, StubGenerator(), table
    )
    assert any("topic 9" in w for w in result.warnings)
    assert {e.topic_id for e in result.entries} == {1}


def test_stance_first_order_is_config_escape_hatch(tiny_setup):
    docs, index, topics, table = tiny_setup
    config = _config(PipelineId.P1, order=RankOrder.STANCE_FIRST)
    result = run_pipeline(
        config, topics, docs, index, StubStanceScorer(), StubGenerator(), table
    )
    # scores are positional, so strictly decreasing within each group
    for group in result.by_group().values():
        scores = [e.score for e in group]
        assert scores == sorted(scores, reverse=True)


def test_missing_backends_rejected(tiny_setup):
    docs, index, topics, table = tiny_setup
    with pytest.raises(ValueError, match="stance scorer"):
        run_pipeline(_config(PipelineId.P1), topics, docs, index, None,
                     StubGenerator(), table)
    with pytest.raises(ValueError, match="generator"):
        run_pipeline(_config(PipelineId.P0), topics, docs, index, None, None, table)


def test_config_invariant():
    with pytest.raises(ValueError):
        PipelineConfig.for_pipeline(PipelineId.P0, preselect_k=5, output_depth=6)


def _synthetic_run(tag, topics, stances, depth, image_namer):
    entries = []
    for topic_id in topics:
        for stance in stances:
            for rank in range(1, depth + 1):
                entries.append(
                    RunEntry(
                        topic_id,
                        stance,
                        image_namer(topic_id, stance, rank),
                        rank,
                        float(depth - rank + 1),
                        tag,
                    )
                )
    return RunResult(entries=entries)


def test_pool_runs_considered_count():
    # 5 runs x 50 topics x 2 stances x depth 10 -> 5000 considered
    runs = [
        _synthetic_run(
            f"run{r}",
            range(1, 51),
            list(Stance),
            10,
            lambda t, s, rank, r=r: f"img-{r}-{t}-{s.value}-{rank}",
        )
        for r in range(5)
    ]
    pool = pool_runs(runs, depth=10)
    assert pool.considered == 5000
    assert len(pool.pairs) == 5000  # all unique by construction


def test_pool_runs_identical_runs_dedup():
    run = _synthetic_run(
        "a", [1, 2], list(Stance), 10, lambda t, s, rank: f"img{rank}"
    )
    clone = _synthetic_run(
        "b", [1, 2], list(Stance), 10, lambda t, s, rank: f"img{rank}"
    )
    pool = pool_runs([run, clone], depth=10)
    assert pool.considered == 80
    assert len(pool.pairs) == 20  # 2 topics x 10 images; stances collapse


def test_pool_runs_disjoint_sum():
    a = _synthetic_run("a", [1], [Stance.PRO], 5, lambda t, s, rank: f"a{rank}")
    b = _synthetic_run("b", [2], [Stance.PRO], 5, lambda t, s, rank: f"b{rank}")
    pool = pool_runs([a, b], depth=5)
    assert len(pool.pairs) == pool.considered == 10


def test_pool_depth_truncates():
    run = _synthetic_run(
        "a", [1], [Stance.PRO], 10, lambda t, s, rank: f"img{rank}"
    )
    pool = pool_runs([run], depth=3)
    assert pool.considered == 3
    assert pool.pairs == frozenset({(1, "img1"), (1, "img2"), (1, "img3")})
