"""Approximate 2-nearest-neighbor search over descriptor sets.

A forest of randomized kd-trees: each split picks a dimension uniformly
from the top-variance dimensions of the node and splits at the mean.
Queries run a shared best-bin-first priority search with a budget of leaf
point checks; with a budget at least the index size the search degenerates
to an exact scan (plane distances are sound lower bounds, so pruning never
discards a true neighbor).
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

_BUILD_SEED = 0x5EED_AB1E_0001


@dataclass(frozen=True)
class AnnParams:
    trees: int = 4
    leaf_size: int = 8
    checks: int = 32
    top_variance_dims: int = 5


@dataclass(frozen=True)
class Match:
    query_idx: int
    train_idx: int
    distance: float

    def __post_init__(self) -> None:
        if self.distance < 0.0:
            raise ValueError("distance must be non-negative")


class _Tree:
    __slots__ = ("split_dim", "split_val", "left", "right", "lo", "hi", "order")

    def __init__(self) -> None:
        self.split_dim: list[int] = []
        self.split_val: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.lo: list[int] = []
        self.hi: list[int] = []
        self.order: np.ndarray


class KdForest:
    def __init__(self, vectors: np.ndarray, params: AnnParams = AnnParams()) -> None:
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] == 0:
            raise ValueError("cannot build an index on an empty descriptor set")
        self.vectors = vectors
        self.params = params
        self.trees = [
            self._build_tree(tree_index) for tree_index in range(params.trees)
        ]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def _build_tree(self, tree_index: int) -> _Tree:
        rng = np.random.Generator(np.random.Philox(key=_BUILD_SEED + tree_index))
        tree = _Tree()
        order = np.arange(self.size)
        top_k = self.params.top_variance_dims
        leaf_size = self.params.leaf_size

        def new_node() -> int:
            tree.split_dim.append(-1)
            tree.split_val.append(0.0)
            tree.left.append(-1)
            tree.right.append(-1)
            tree.lo.append(0)
            tree.hi.append(0)
            return len(tree.split_dim) - 1

        def build(start: int, end: int) -> int:
            node = new_node()
            idx = order[start:end].copy()  # slice is a view of `order`
            if end - start <= leaf_size:
                tree.lo[node], tree.hi[node] = start, end
                return node
            sub = self.vectors[idx]
            variances = sub.var(axis=0)
            top = np.argsort(-variances, kind="stable")[:top_k]
            dim = int(top[rng.integers(len(top))])
            val = float(sub[:, dim].mean())
            mask = sub[:, dim] < val
            n_left = int(mask.sum())
            if n_left == 0 or n_left == end - start:
                tree.lo[node], tree.hi[node] = start, end  # degenerate split
                return node
            order[start : start + n_left] = idx[mask]
            order[start + n_left : end] = idx[~mask]
            tree.split_dim[node] = dim
            tree.split_val[node] = val
            tree.left[node] = build(start, start + n_left)
            tree.right[node] = build(start + n_left, end)
            return node

        build(0, self.size)
        tree.order = order
        return tree


def build_ann(descriptors: np.ndarray, params: AnnParams = AnnParams()) -> KdForest:
    return KdForest(descriptors, params)


def knn2(
    forest: KdForest,
    query: np.ndarray,
    query_idx: int = 0,
    checks: int | None = None,
) -> list[Match]:
    """Up to two nearest matches, sorted by distance (ties on index)."""
    if checks is None:
        checks = forest.params.checks
    query = np.asarray(query, dtype=np.float64)
    vectors = forest.vectors
    n = forest.size
    visited = np.zeros(n, dtype=bool)
    best: list[tuple[float, int]] = []  # [(dist_sq, train_idx)], len <= 2
    counter = itertools.count()
    heap: list[tuple[float, int, int, int]] = []
    checks_done = 0

    def offer(d2: float, idx: int) -> None:
        entry = (d2, idx)
        if len(best) < 2:
            best.append(entry)
            best.sort()
        elif entry < best[1]:
            best[1] = entry
            best.sort()

    def scan_leaf(tree: _Tree, node: int) -> None:
        nonlocal checks_done
        idxs = tree.order[tree.lo[node] : tree.hi[node]]
        fresh = idxs[~visited[idxs]]
        if fresh.size == 0:
            return
        visited[fresh] = True
        checks_done += int(fresh.size)
        diffs = vectors[fresh] - query
        d2s = np.einsum("ij,ij->i", diffs, diffs)
        for d2, idx in zip(d2s, fresh):
            offer(float(d2), int(idx))

    def descend(tree_i: int, node: int) -> None:
        tree = forest.trees[tree_i]
        while tree.split_dim[node] >= 0:
            delta = query[tree.split_dim[node]] - tree.split_val[node]
            if delta < 0:
                near, far = tree.left[node], tree.right[node]
            else:
                near, far = tree.right[node], tree.left[node]
            heapq.heappush(heap, (delta * delta, next(counter), tree_i, far))
            node = near
        scan_leaf(tree, node)

    for tree_i in range(len(forest.trees)):
        descend(tree_i, 0)
    while heap and checks_done < checks:
        bound, _, tree_i, node = heapq.heappop(heap)
        if len(best) == 2 and bound >= best[1][0]:
            continue
        descend(tree_i, node)

    return [
        Match(query_idx=query_idx, train_idx=idx, distance=math.sqrt(d2))
        for d2, idx in best
    ]


def knn2_batch(
    forest: KdForest, queries: np.ndarray, checks: int | None = None
) -> list[list[Match]]:
    return [
        knn2(forest, q, query_idx=i, checks=checks)
        for i, q in enumerate(np.asarray(queries, dtype=np.float64))
    ]
