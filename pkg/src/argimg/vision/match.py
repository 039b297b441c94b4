"""Descriptor matching, good-match filtering, and per-image match scores.

A candidate is scored against each generated reference image: 2-NN matches
candidate -> reference, Lowe ratio filtering (or an absolute distance
cutoff), and, when at least `min_matches_for_homography` good matches
exist and a homography can be estimated, the RANSAC inlier count replaces
the raw good-match count.  Per-reference counts are summed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .ann import AnnParams, KdForest, Match, build_ann, knn2
from .homography import (
    DEFAULT_CONFIDENCE,
    DEFAULT_ITERS_MAX,
    DEFAULT_REPROJ_TOL,
    estimate_homography,
)
from .image import GrayImage
from .sift import Keypoint, SiftParams, detect_and_describe


class MatchMode(Enum):
    RATIO = "ratio"
    ABSOLUTE = "absolute"


DEFAULT_RATIO = 0.7


@dataclass(frozen=True)
class MatchParams:
    sift: SiftParams = field(default_factory=SiftParams)
    ann: AnnParams = field(default_factory=AnnParams)
    mode: MatchMode = MatchMode.RATIO
    threshold: float = DEFAULT_RATIO
    min_matches_for_homography: int = 8
    reproj_tol: float = DEFAULT_REPROJ_TOL
    iters_max: int = DEFAULT_ITERS_MAX
    confidence: float = DEFAULT_CONFIDENCE

    def __post_init__(self) -> None:
        if self.threshold <= 0.0:
            raise ValueError("threshold must be positive")


@dataclass(frozen=True)
class ImageFeatures:
    keypoints: list[Keypoint]
    descriptors: np.ndarray  # (n, 128)

    def __len__(self) -> int:
        return len(self.keypoints)


def extract_features(
    img: GrayImage, params: MatchParams = MatchParams()
) -> ImageFeatures:
    keypoints, descriptors = detect_and_describe(img, params.sift)
    return ImageFeatures(keypoints, descriptors)


def good_matches(
    pairs: Sequence[tuple[Match, Optional[Match]]],
    mode: MatchMode = MatchMode.RATIO,
    threshold: float = DEFAULT_RATIO,
) -> list[Match]:
    """RATIO keeps best < threshold * second (kept outright without a
    second); ABSOLUTE keeps best < threshold."""
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    kept = []
    for best, second in pairs:
        if mode is MatchMode.RATIO:
            if second is None or best.distance < threshold * second.distance:
                kept.append(best)
        else:
            if best.distance < threshold:
                kept.append(best)
    return kept


def knn2_pairs(
    forest: KdForest, descriptors: np.ndarray, checks: int | None = None
) -> list[tuple[Match, Optional[Match]]]:
    pairs: list[tuple[Match, Optional[Match]]] = []
    for i, query in enumerate(descriptors):
        found = knn2(forest, query, query_idx=i, checks=checks)
        if not found:
            continue
        pairs.append((found[0], found[1] if len(found) > 1 else None))
    return pairs


@dataclass(frozen=True)
class ReferenceIndex:
    """A reference image's features plus its search forest, reusable across
    many candidates."""

    features: ImageFeatures
    forest: Optional[KdForest]

    @classmethod
    def build(
        cls, features: ImageFeatures, params: MatchParams = MatchParams()
    ) -> "ReferenceIndex":
        forest = (
            build_ann(features.descriptors, params.ann) if len(features) else None
        )
        return cls(features, forest)


def match_against_reference(
    candidate: ImageFeatures,
    reference: ReferenceIndex,
    params: MatchParams = MatchParams(),
) -> int:
    """Good-match count against one reference, upgraded to the RANSAC
    inlier count when geometry is estimable."""
    if reference.forest is None or len(candidate) == 0:
        return 0
    pairs = knn2_pairs(reference.forest, candidate.descriptors)
    good = good_matches(pairs, params.mode, params.threshold)
    if len(good) < params.min_matches_for_homography:
        return len(good)
    src = np.array([
        (candidate.keypoints[m.query_idx].x, candidate.keypoints[m.query_idx].y)
        for m in good
    ])
    dst = np.array([
        (
            reference.features.keypoints[m.train_idx].x,
            reference.features.keypoints[m.train_idx].y,
        )
        for m in good
    ])
    result = estimate_homography(
        src,
        dst,
        iters_max=params.iters_max,
        reproj_tol=params.reproj_tol,
        confidence=params.confidence,
    )
    if result is None:
        return len(good)
    _, inlier_mask = result
    return int(inlier_mask.sum())


def match_score_features(
    candidate: ImageFeatures,
    references: Sequence[ReferenceIndex],
    params: MatchParams = MatchParams(),
) -> int:
    if not references:
        raise ValueError("at least one reference is required")
    return sum(
        match_against_reference(candidate, ref, params) for ref in references
    )


def match_score(
    candidate: GrayImage,
    references: Sequence[GrayImage],
    params: MatchParams = MatchParams(),
) -> int:
    """Summed per-reference match counts for a candidate image."""
    if not references:
        raise ValueError("at least one reference is required")
    candidate_features = extract_features(candidate, params)
    reference_indexes = [
        ReferenceIndex.build(extract_features(ref, params), params)
        for ref in references
    ]
    return match_score_features(candidate_features, reference_indexes, params)
