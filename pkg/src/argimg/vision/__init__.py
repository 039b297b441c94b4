"""Local-feature pipeline: grayscale rasters, SIFT keypoints/descriptors,
randomized kd-tree matching, RANSAC homography, and match scoring."""
from .ann import AnnParams, KdForest, Match, build_ann, knn2, knn2_batch
from .homography import Homography, estimate_homography
from .image import (
    GrayImage,
    decode_png,
    encode_png,
    luma_gray,
    read_image,
    read_pgm,
    read_png,
    write_pgm,
)
from .match import (
    ImageFeatures,
    MatchMode,
    MatchParams,
    ReferenceIndex,
    extract_features,
    good_matches,
    knn2_pairs,
    match_against_reference,
    match_score,
    match_score_features,
)
from .sift import (
    Keypoint,
    SiftParams,
    detect_and_describe,
    sift_describe,
    sift_detect,
)

__all__ = [
    "AnnParams",
    "GrayImage",
    "Homography",
    "ImageFeatures",
    "KdForest",
    "Keypoint",
    "Match",
    "MatchMode",
    "MatchParams",
    "ReferenceIndex",
    "SiftParams",
    "build_ann",
    "decode_png",
    "detect_and_describe",
    "encode_png",
    "estimate_homography",
    "extract_features",
    "good_matches",
    "knn2",
    "knn2_batch",
    "knn2_pairs",
    "luma_gray",
    "match_against_reference",
    "match_score",
    "match_score_features",
    "read_image",
    "read_pgm",
    "read_png",
    "sift_describe",
    "sift_detect",
    "write_pgm",
]
