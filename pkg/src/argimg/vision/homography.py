"""Robust planar homography estimation.

RANSAC over 4-point samples, models fit by the normalized DLT (Hartley
normalization to centroid 0 and RMS radius sqrt(2)), inliers by symmetric
transfer error, adaptive iteration count, and a final DLT refit on all
inliers.  The sampler is a counter-based generator keyed by a hash of the
input points, so estimation is a pure function of its inputs.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_ITERS_MAX = 2000
DEFAULT_REPROJ_TOL = 3.0
DEFAULT_CONFIDENCE = 0.995


@dataclass(frozen=True)
class Homography:
    matrix: np.ndarray  # 3x3, h33 == 1 whenever h33 != 0

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        det = float(np.linalg.det(m))
        if det == 0.0 or not math.isfinite(det):
            raise ValueError("homography must be invertible")
        if m[2, 2] != 0.0:
            m = m / m[2, 2]
        object.__setattr__(self, "matrix", m)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return _project(self.matrix, np.asarray(points, dtype=np.float64))


def _project(h: np.ndarray, points: np.ndarray) -> np.ndarray:
    ones = np.ones((points.shape[0], 1))
    q = np.hstack([points, ones]) @ h.T
    w = q[:, 2:3]
    w = np.where(np.abs(w) < 1e-12, 1e-12, w)
    return q[:, :2] / w


def _normalize(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centroid = points.mean(axis=0)
    rms = math.sqrt(float(((points - centroid) ** 2).sum(axis=1).mean()))
    scale = math.sqrt(2.0) / max(rms, 1e-12)
    t = np.array([
        [scale, 0.0, -scale * centroid[0]],
        [0.0, scale, -scale * centroid[1]],
        [0.0, 0.0, 1.0],
    ])
    return _project(t, points), t


def _dlt(src: np.ndarray, dst: np.ndarray) -> Optional[np.ndarray]:
    """Normalized direct linear transform; None when degenerate."""
    src_n, t_src = _normalize(src)
    dst_n, t_dst = _normalize(dst)
    n = src_n.shape[0]
    a = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1.0
    a[0::2, 6] = -u * x
    a[0::2, 7] = -u * y
    a[0::2, 8] = -u
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1.0
    a[1::2, 6] = -v * x
    a[1::2, 7] = -v * y
    a[1::2, 8] = -v
    try:
        _, s, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError:
        return None
    if s[-2] < 1e-10:  # rank-deficient system, e.g. collinear sample
        return None
    h_n = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_n @ t_src
    if abs(np.linalg.det(h)) < 1e-12:
        return None
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    return h


def _symmetric_error(h: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    h_inv = np.linalg.inv(h)
    forward = _project(h, src) - dst
    backward = _project(h_inv, dst) - src
    return np.sqrt((forward**2).sum(axis=1) + (backward**2).sum(axis=1))


def _collinear(points: np.ndarray, eps: float = 1e-8) -> bool:
    p0 = points[0]
    best = 0.0
    for i in range(1, 4):
        for j in range(i + 1, 4):
            area = abs(
                (points[i][0] - p0[0]) * (points[j][1] - p0[1])
                - (points[j][0] - p0[0]) * (points[i][1] - p0[1])
            )
            best = max(best, area)
    return best < eps


def _input_seed(src: np.ndarray, dst: np.ndarray) -> int:
    digest = hashlib.blake2b(
        src.tobytes() + dst.tobytes(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def estimate_homography(
    src_pts: np.ndarray,
    dst_pts: np.ndarray,
    iters_max: int = DEFAULT_ITERS_MAX,
    reproj_tol: float = DEFAULT_REPROJ_TOL,
    confidence: float = DEFAULT_CONFIDENCE,
) -> Optional[tuple[Homography, np.ndarray]]:
    """RANSAC homography from src to dst; None when under 4 correspondences
    or no 4-inlier model exists.  Returns the refit model and the inlier
    mask under it."""
    src = np.asarray(src_pts, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst_pts, dtype=np.float64).reshape(-1, 2)
    if src.shape != dst.shape:
        raise ValueError("point lists must have equal length")
    n = src.shape[0]
    if n < 4:
        return None
    rng = np.random.Generator(np.random.Philox(key=_input_seed(src, dst)))

    best_mask: Optional[np.ndarray] = None
    best_count = 0
    needed = iters_max
    iteration = 0
    while iteration < min(iters_max, needed):
        iteration += 1
        sample = rng.choice(n, size=4, replace=False)
        if _collinear(src[sample]) or _collinear(dst[sample]):
            continue
        h = _dlt(src[sample], dst[sample])
        if h is None:
            continue
        errors = _symmetric_error(h, src, dst)
        mask = errors < reproj_tol
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
            ratio = count / n
            if 0.0 < ratio < 1.0:
                denom = math.log(max(1.0 - ratio**4, 1e-12))
                needed = min(
                    iters_max,
                    int(math.ceil(math.log(1.0 - confidence) / denom)),
                )
            elif ratio >= 1.0:
                needed = iteration  # every point fits; stop
    if best_mask is None or best_count < 4:
        return None
    refit = _dlt(src[best_mask], dst[best_mask])
    if refit is None:
        return None
    final_errors = _symmetric_error(refit, src, dst)
    final_mask = final_errors < reproj_tol
    if int(final_mask.sum()) < 4:
        final_mask = best_mask
        refit = _dlt(src[best_mask], dst[best_mask])
        if refit is None:
            return None
    try:
        model = Homography(refit)
    except ValueError:
        return None
    return model, final_mask
