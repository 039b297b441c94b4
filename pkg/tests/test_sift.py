from __future__ import annotations

import numpy as np
import pytest

from argimg.vision.image import GrayImage
from argimg.vision.sift import (
    SiftParams,
    detect_and_describe,
    sift_describe,
    sift_detect,
)


def _blob_image(size=128, center=(64.0, 64.0), sigma=4.0):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    blob = np.exp(
        -((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / (2 * sigma**2)
    )
    return GrayImage(blob / blob.max())


def test_constant_image_no_keypoints():
    img = GrayImage(np.full((64, 64), 0.5))
    assert sift_detect(img) == []


def test_too_small_image_rejected():
    with pytest.raises(ValueError, match="too small"):
        sift_detect(GrayImage(np.random.default_rng(0).random((16, 16))))


def test_gaussian_blob_detected_at_center():
    kps = sift_detect(_blob_image())
    near = [k for k in kps if abs(k.x - 64) <= 2 and abs(k.y - 64) <= 2]
    assert near, "no keypoint within 2 px of the blob center"
    assert all(k.scale > 0 for k in kps)


def test_detection_deterministic(stub_image):
    copy = GrayImage(stub_image.pixels.copy())
    assert sift_detect(stub_image) == sift_detect(copy)


def test_keypoints_inside_image(stub_image):
    for kp in sift_detect(stub_image):
        assert 0 <= kp.x < stub_image.width
        assert 0 <= kp.y < stub_image.height
        assert 0 <= kp.orientation < 2 * np.pi


def test_descriptor_contract(stub_image):
    kps, descs = detect_and_describe(stub_image)
    assert len(kps) == descs.shape[0]
    assert descs.shape[1] == 128
    norms = np.linalg.norm(descs, axis=1)
    assert np.all(np.abs(norms - 1.0) <= 1e-6)
    # clamping happened before the final renormalization
    assert descs.min() >= 0.0


def test_describe_empty_keypoints(stub_image):
    kept, descs = sift_describe(stub_image, [])
    assert kept == []
    assert descs.shape == (0, 128)


def test_describe_parallel_lists(stub_image):
    kps = sift_detect(stub_image)
    kept, descs = sift_describe(stub_image, kps)
    assert len(kept) == descs.shape[0]
    assert set(id(k) for k in kept) <= set(id(k) for k in kps)


def test_max_keypoints_cap(stub_image):
    params = SiftParams(max_keypoints=10)
    capped = sift_detect(stub_image, params)
    full = sift_detect(stub_image)
    assert len(capped) == 10
    floor = sorted((k.response for k in full), reverse=True)[9]
    assert all(k.response >= floor - 1e-12 for k in capped)


def test_rotated_copy_descriptors_close(stub_image):
    """Keypoints paired through the exact 90-degree map should carry nearly
    identical descriptors (threshold fixed from an oracle run)."""
    rot = GrayImage(np.ascontiguousarray(np.rot90(stub_image.pixels)))
    kp1, d1 = detect_and_describe(stub_image)
    kp2, d2 = detect_and_describe(rot)
    width = stub_image.width
    dists = []
    for i, kp in enumerate(kp1):
        # np.rot90 maps (x, y) -> (y, width - 1 - x)
        tx, ty = kp.y, width - 1 - kp.x
        best = None
        for j, kq in enumerate(kp2):
            if (
                abs(kq.x - tx) < 1.5
                and abs(kq.y - ty) < 1.5
                and abs(np.log2(kq.scale / kp.scale)) < 0.5
            ):
                dist = float(np.linalg.norm(d1[i] - d2[j]))
                best = dist if best is None else min(best, dist)
        if best is not None:
            dists.append(best)
    assert len(dists) >= 0.5 * len(kp1)
    assert float(np.median(dists)) < 0.5
