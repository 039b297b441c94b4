from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from argimg.vision.ann import AnnParams, build_ann, knn2, knn2_batch

from oracles import knn_exact


def test_empty_index_rejected():
    with pytest.raises(ValueError):
        build_ann(np.zeros((0, 128)))


def test_exact_self_query(rng):
    vectors = rng.random((50, 128))
    forest = build_ann(vectors)
    match = knn2(forest, vectors[17])[0]
    assert match.train_idx == 17
    assert match.distance == 0.0


def test_index_of_size_one():
    forest = build_ann(np.ones((1, 128)))
    matches = knn2(forest, np.zeros(128))
    assert len(matches) == 1
    assert matches[0].train_idx == 0


def test_recall_at_one_on_random_vectors(rng):
    vectors = rng.random((1000, 128))
    forest = build_ann(vectors)
    hits = sum(
        knn2(forest, v)[0].train_idx == i for i, v in enumerate(vectors)
    )
    assert hits / 1000 >= 0.95


def test_exhaustive_budget_equals_brute_force(rng):
    vectors = rng.random((300, 128))
    forest = build_ann(vectors)
    queries = rng.random((40, 128))
    for q in queries:
        got = knn2(forest, q, checks=vectors.shape[0])
        expected = knn_exact(vectors, q, k=2)
        assert [(m.train_idx) for m in got] == [i for i, _ in expected]
        for m, (_, d) in zip(got, expected):
            assert abs(m.distance - d) <= 1e-12


def test_results_sorted_and_distinct(rng):
    vectors = rng.random((100, 16))
    forest = build_ann(vectors)
    for q in rng.random((20, 16)):
        matches = knn2(forest, q)
        assert len(matches) == 2
        assert matches[0].distance <= matches[1].distance
        assert matches[0].train_idx != matches[1].train_idx


def test_build_deterministic(rng):
    vectors = rng.random((200, 32))
    f1 = build_ann(vectors)
    f2 = build_ann(vectors.copy())
    q = rng.random(32)
    assert [(m.train_idx, m.distance) for m in knn2(f1, q)] == [
        (m.train_idx, m.distance) for m in knn2(f2, q)
    ]


def test_duplicate_vectors_handled():
    vectors = np.tile(np.ones(8), (20, 1))  # every split is degenerate
    forest = build_ann(vectors)
    matches = knn2(forest, np.ones(8))
    assert matches[0].distance == 0.0
    assert matches[0].train_idx == 0  # ties break on index
    assert matches[1].train_idx == 1


def test_query_idx_passthrough(rng):
    vectors = rng.random((30, 8))
    forest = build_ann(vectors)
    batches = knn2_batch(forest, vectors[:5])
    for i, matches in enumerate(batches):
        assert all(m.query_idx == i for m in matches)


@settings(max_examples=25, deadline=None)
@given(
    data=st.data(),
    n=st.integers(3, 40),
    dim=st.integers(2, 16),
)
def test_exhaustive_matches_oracle_property(data, n, dim):
    vectors = data.draw(
        arrays(
            np.float64,
            (n, dim),
            elements=st.floats(-10, 10, allow_nan=False, width=32),
        )
    )
    query = data.draw(
        arrays(
            np.float64,
            (dim,),
            elements=st.floats(-10, 10, allow_nan=False, width=32),
        )
    )
    forest = build_ann(vectors, AnnParams(leaf_size=4))
    got = knn2(forest, query, checks=n)
    expected = knn_exact(vectors, query, k=2)
    assert [m.train_idx for m in got] == [i for i, _ in expected[: len(got)]]
