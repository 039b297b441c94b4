"""Scale-space keypoint detection and 128-d gradient descriptors.

Difference-of-Gaussian extrema over a doubled-base pyramid, quadratic
subpixel refinement, contrast and edge rejection, 36-bin orientation
histogram with 0.8-peak duplication, and 4x4x8 descriptors with trilinear
binning, 0.2 clamping, and renormalization.  Everything is pure numpy, no
randomness, so repeated runs are bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from .image import GrayImage

MIN_IMAGE_SIDE = 32


@dataclass(frozen=True)
class SiftParams:
    sigma: float = 1.6
    intervals: int = 3
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    border: int = 5
    refine_steps: int = 5
    ori_bins: int = 36
    ori_sigma_factor: float = 1.5
    ori_radius_factor: float = 3.0
    ori_peak_ratio: float = 0.8
    descriptor_clamp: float = 0.2
    max_keypoints: int = 0  # 0 = unlimited; otherwise keep strongest


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    scale: float
    orientation: float  # radians in [0, 2*pi)
    response: float
    octave: int  # pyramid address used by the descriptor stage
    layer: float


def _bilinear_upsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    ys = np.arange(2 * h) * 0.5
    xs = np.arange(2 * w) * 0.5
    y0 = np.minimum(ys.astype(int), h - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x0 = np.minimum(xs.astype(int), w - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    ty = (ys - y0)[:, None]
    tx = (xs - x0)[None, :]
    top = img[y0][:, x0] * (1 - tx) + img[y0][:, x1] * tx
    bottom = img[y1][:, x0] * (1 - tx) + img[y1][:, x1] * tx
    return top * (1 - ty) + bottom * ty


class _Pyramid:
    """Gaussian + DoG stacks; octave 0 is the doubled input image."""

    def __init__(self, img: GrayImage, params: SiftParams) -> None:
        if min(img.width, img.height) < MIN_IMAGE_SIDE:
            raise ValueError(
                f"image too small for detection: {img.width}x{img.height}, "
                f"need {MIN_IMAGE_SIDE} on the short side"
            )
        self.params = params
        base = _bilinear_upsample2(img.pixels)
        # doubling makes the assumed capture blur 0.5 into 1.0
        base = gaussian_filter(
            base, math.sqrt(max(params.sigma**2 - 1.0, 0.01)), mode="nearest"
        )
        self.n_octaves = max(
            1, int(math.floor(math.log2(min(img.width, img.height)))) - 3
        )
        k = 2.0 ** (1.0 / params.intervals)
        sigmas = [params.sigma * k**i for i in range(params.intervals + 3)]
        increments = [
            math.sqrt(sigmas[i] ** 2 - sigmas[i - 1] ** 2)
            for i in range(1, len(sigmas))
        ]
        self.gaussians: list[list[np.ndarray]] = []
        self.dogs: list[list[np.ndarray]] = []
        current = base
        for _ in range(self.n_octaves):
            stack = [current]
            for inc in increments:
                stack.append(gaussian_filter(stack[-1], inc, mode="nearest"))
            self.gaussians.append(stack)
            self.dogs.append(
                [stack[i + 1] - stack[i] for i in range(len(stack) - 1)]
            )
            current = stack[params.intervals][::2, ::2]
        self._gradients: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def gradients(self, octave: int, layer: int) -> tuple[np.ndarray, np.ndarray]:
        key = (octave, layer)
        if key not in self._gradients:
            img = self.gaussians[octave][layer]
            gx = np.zeros_like(img)
            gy = np.zeros_like(img)
            gx[:, 1:-1] = 0.5 * (img[:, 2:] - img[:, :-2])
            gy[1:-1, :] = 0.5 * (img[2:, :] - img[:-2, :])
            self._gradients[key] = (gx, gy)
        return self._gradients[key]


def _extremum_candidates(
    dogs: list[np.ndarray], layer: int, pre_threshold: float, border: int
) -> np.ndarray:
    mid = dogs[layer]
    h, w = mid.shape
    if h <= 2 * border or w <= 2 * border:
        return np.empty((0, 2), dtype=int)
    center = mid[border : h - border, border : w - border]
    strong = np.abs(center) > pre_threshold
    is_max = strong.copy()
    is_min = strong.copy()
    for dz in (-1, 0, 1):
        arr = dogs[layer + dz]
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dz == 0 and dy == 0 and dx == 0:
                    continue
                neighbor = arr[
                    border + dy : h - border + dy, border + dx : w - border + dx
                ]
                is_max &= center > neighbor
                is_min &= center < neighbor
                if not (is_max.any() or is_min.any()):
                    return np.empty((0, 2), dtype=int)
    rows, cols = np.nonzero(is_max | is_min)
    return np.stack([rows + border, cols + border], axis=1)


def _refine(
    dogs: list[np.ndarray], i: int, j: int, layer: int, params: SiftParams
) -> Optional[tuple[float, float, float, float, int, int, int]]:
    """Quadratic subpixel refinement; returns (di, dj, dl, value, i, j, layer)
    or None when the candidate is rejected."""
    h, w = dogs[0].shape
    intervals = params.intervals
    offset = np.zeros(3)
    for step in range(params.refine_steps):
        prev_l, mid, next_l = dogs[layer - 1], dogs[layer], dogs[layer + 1]
        gradient = np.array([
            0.5 * (mid[i, j + 1] - mid[i, j - 1]),
            0.5 * (mid[i + 1, j] - mid[i - 1, j]),
            0.5 * (next_l[i, j] - prev_l[i, j]),
        ])
        dxx = mid[i, j + 1] - 2 * mid[i, j] + mid[i, j - 1]
        dyy = mid[i + 1, j] - 2 * mid[i, j] + mid[i - 1, j]
        dss = next_l[i, j] - 2 * mid[i, j] + prev_l[i, j]
        dxy = 0.25 * (
            mid[i + 1, j + 1] - mid[i + 1, j - 1] - mid[i - 1, j + 1] + mid[i - 1, j - 1]
        )
        dxs = 0.25 * (
            next_l[i, j + 1] - next_l[i, j - 1] - prev_l[i, j + 1] + prev_l[i, j - 1]
        )
        dys = 0.25 * (
            next_l[i + 1, j] - next_l[i - 1, j] - prev_l[i + 1, j] + prev_l[i - 1, j]
        )
        hessian = np.array([
            [dxx, dxy, dxs],
            [dxy, dyy, dys],
            [dxs, dys, dss],
        ])
        try:
            offset = -np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(offset) < 0.5):
            break
        j += int(round(offset[0]))
        i += int(round(offset[1]))
        layer += int(round(offset[2]))
        if (
            layer < 1
            or layer > intervals
            or i < params.border
            or i >= h - params.border
            or j < params.border
            or j >= w - params.border
        ):
            return None
    else:
        return None
    value = dogs[layer][i, j] + 0.5 * float(gradient @ offset)
    if abs(value) < params.contrast_threshold:
        return None
    trace = dxx + dyy
    det = dxx * dyy - dxy * dxy
    r = params.edge_ratio
    if det <= 0 or trace * trace * r >= (r + 1) ** 2 * det:
        return None
    return offset[1], offset[0], offset[2], value, i, j, layer


def _orientations(
    pyramid: _Pyramid,
    octave: int,
    layer_round: int,
    x_oct: float,
    y_oct: float,
    scale_oct: float,
    params: SiftParams,
) -> list[float]:
    gx, gy = pyramid.gradients(octave, layer_round)
    h, w = gx.shape
    sigma = params.ori_sigma_factor * scale_oct
    radius = int(round(params.ori_radius_factor * sigma))
    ci = int(round(y_oct))
    cj = int(round(x_oct))
    i0, i1 = max(ci - radius, 1), min(ci + radius, h - 2)
    j0, j1 = max(cj - radius, 1), min(cj + radius, w - 2)
    if i0 > i1 or j0 > j1:
        return []
    sub_gx = gx[i0 : i1 + 1, j0 : j1 + 1]
    sub_gy = gy[i0 : i1 + 1, j0 : j1 + 1]
    mag = np.hypot(sub_gx, sub_gy)
    ang = np.arctan2(sub_gy, sub_gx) % (2 * math.pi)
    di = (np.arange(i0, i1 + 1) - ci)[:, None]
    dj = (np.arange(j0, j1 + 1) - cj)[None, :]
    weight = np.exp(-(di * di + dj * dj) / (2.0 * sigma * sigma))
    bins = params.ori_bins
    idx = np.rint(ang * bins / (2 * math.pi)).astype(int) % bins
    hist = np.zeros(bins)
    np.add.at(hist, idx.ravel(), (mag * weight).ravel())
    smooth = (
        6 * hist
        + 4 * (np.roll(hist, 1) + np.roll(hist, -1))
        + np.roll(hist, 2)
        + np.roll(hist, -2)
    ) / 16.0
    peak_floor = params.ori_peak_ratio * smooth.max()
    if smooth.max() <= 0.0:
        return []
    left = np.roll(smooth, 1)
    right = np.roll(smooth, -1)
    angles = []
    for b in range(bins):
        v = smooth[b]
        if v > left[b] and v > right[b] and v >= peak_floor:
            denom = left[b] - 2 * v + right[b]
            shift = 0.5 * (left[b] - right[b]) / denom if denom != 0 else 0.0
            angle = ((b + shift) / bins) * 2 * math.pi
            angles.append(angle % (2 * math.pi))
    return angles


def _detect_on_pyramid(pyramid: _Pyramid, width: int, height: int) -> list[Keypoint]:
    params = pyramid.params
    pre_threshold = 0.5 * params.contrast_threshold / params.intervals
    keypoints: list[Keypoint] = []
    for octave, dogs in enumerate(pyramid.dogs):
        octave_scale = 2.0 ** (octave - 1)
        for layer in range(1, params.intervals + 1):
            for i, j in _extremum_candidates(
                dogs, layer, pre_threshold, params.border
            ):
                refined = _refine(dogs, int(i), int(j), layer, params)
                if refined is None:
                    continue
                di, dj, dl, value, ri, rj, rlayer = refined
                x_oct = rj + dj
                y_oct = ri + di
                layer_f = rlayer + dl
                x = x_oct * octave_scale
                y = y_oct * octave_scale
                if not (0.0 <= x < width and 0.0 <= y < height):
                    continue
                scale_oct = params.sigma * 2.0 ** (layer_f / params.intervals)
                scale = scale_oct * octave_scale
                layer_round = min(max(int(round(layer_f)), 0), params.intervals + 2)
                for angle in _orientations(
                    pyramid, octave, layer_round, x_oct, y_oct, scale_oct, params
                ):
                    keypoints.append(
                        Keypoint(
                            x=float(x),
                            y=float(y),
                            scale=float(scale),
                            orientation=float(angle),
                            response=float(abs(value)),
                            octave=octave,
                            layer=float(layer_f),
                        )
                    )
    # collapse numerically coincident detections (one extremum can be
    # reached from several scan starts)
    keypoints.sort(key=lambda k: (k.y, k.x, k.scale, k.orientation))
    unique: list[Keypoint] = []
    for kp in keypoints:
        if unique:
            prev = unique[-1]
            if (
                abs(kp.x - prev.x) <= 1e-3
                and abs(kp.y - prev.y) <= 1e-3
                and abs(kp.scale - prev.scale) <= 1e-3
                and abs(kp.orientation - prev.orientation) <= 1e-3
            ):
                continue
        unique.append(kp)
    keypoints = unique
    if params.max_keypoints and len(keypoints) > params.max_keypoints:
        keypoints.sort(
            key=lambda k: (-k.response, k.octave, k.y, k.x, k.orientation)
        )
        keypoints = keypoints[: params.max_keypoints]
        keypoints.sort(key=lambda k: (k.y, k.x, k.scale, k.orientation))
    return keypoints


def sift_detect(img: GrayImage, params: SiftParams = SiftParams()) -> list[Keypoint]:
    pyramid = _Pyramid(img, params)
    return _detect_on_pyramid(pyramid, img.width, img.height)


_GRID = np.arange(16) - 7.5
_GRID_U, _GRID_V = np.meshgrid(_GRID, _GRID)
_GRID_WEIGHT = np.exp(-(_GRID_U**2 + _GRID_V**2) / (2.0 * 8.0**2))


def _describe_one(
    pyramid: _Pyramid, kp: Keypoint, params: SiftParams
) -> Optional[np.ndarray]:
    octave_scale = 2.0 ** (kp.octave - 1)
    x_oct = kp.x / octave_scale
    y_oct = kp.y / octave_scale
    layer_round = min(max(int(round(kp.layer)), 0), params.intervals + 2)
    gx, gy = pyramid.gradients(kp.octave, layer_round)
    h, w = gx.shape
    if not (1.0 <= x_oct <= w - 2 and 1.0 <= y_oct <= h - 2):
        return None  # no gradient support at the keypoint center
    scale_oct = params.sigma * 2.0 ** (kp.layer / params.intervals)
    spacing = 0.75 * scale_oct  # 16 samples span 12 sigma
    cos_t = math.cos(kp.orientation)
    sin_t = math.sin(kp.orientation)
    px = x_oct + spacing * (_GRID_U * cos_t - _GRID_V * sin_t)
    py = y_oct + spacing * (_GRID_U * sin_t + _GRID_V * cos_t)
    valid = (px >= 0) & (px <= w - 1.000001) & (py >= 0) & (py <= h - 1.000001)
    if not valid.any():
        return None
    pxv = px[valid]
    pyv = py[valid]
    x0 = pxv.astype(int)
    y0 = pyv.astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = pxv - x0
    ty = pyv - y0
    def sample(arr: np.ndarray) -> np.ndarray:
        top = arr[y0, x0] * (1 - tx) + arr[y0, x1] * tx
        bottom = arr[y1, x0] * (1 - tx) + arr[y1, x1] * tx
        return top * (1 - ty) + bottom * ty
    sgx = sample(gx)
    sgy = sample(gy)
    mag = np.hypot(sgx, sgy) * _GRID_WEIGHT[valid]
    rel = (np.arctan2(sgy, sgx) - kp.orientation) % (2 * math.pi)
    obin = rel * (8 / (2 * math.pi))
    rbin = _GRID_V[valid] / 4.0 + 1.5
    cbin = _GRID_U[valid] / 4.0 + 1.5
    hist = np.zeros((6, 6, 8))
    r0 = np.floor(rbin).astype(int)
    c0 = np.floor(cbin).astype(int)
    o0 = np.floor(obin).astype(int)
    fr = rbin - r0
    fc = cbin - c0
    fo = obin - o0
    for dr in (0, 1):
        wr = mag * (fr if dr else 1 - fr)
        for dc in (0, 1):
            wc = wr * (fc if dc else 1 - fc)
            for do in (0, 1):
                wo = wc * (fo if do else 1 - fo)
                np.add.at(
                    hist, (r0 + 1 + dr, c0 + 1 + dc, (o0 + do) % 8), wo
                )
    desc = hist[1:5, 1:5, :].ravel()
    norm = np.linalg.norm(desc)
    if norm < 1e-12:
        return None
    desc = np.minimum(desc / norm, params.descriptor_clamp)
    norm = np.linalg.norm(desc)
    if norm < 1e-12:
        return None
    return desc / norm


def _describe_on_pyramid(
    pyramid: _Pyramid, keypoints: list[Keypoint], params: SiftParams
) -> tuple[list[Keypoint], np.ndarray]:
    kept: list[Keypoint] = []
    rows: list[np.ndarray] = []
    for kp in keypoints:
        desc = _describe_one(pyramid, kp, params)
        if desc is not None:
            kept.append(kp)
            rows.append(desc)
    if not rows:
        return [], np.zeros((0, 128))
    return kept, np.stack(rows)


def sift_describe(
    img: GrayImage, keypoints: list[Keypoint], params: SiftParams = SiftParams()
) -> tuple[list[Keypoint], np.ndarray]:
    """Descriptors for the keypoints; keypoints without gradient support are
    dropped from both returned lists so they stay parallel."""
    pyramid = _Pyramid(img, params)
    return _describe_on_pyramid(pyramid, keypoints, params)


def detect_and_describe(
    img: GrayImage, params: SiftParams = SiftParams()
) -> tuple[list[Keypoint], np.ndarray]:
    """Detect + describe sharing one pyramid build."""
    pyramid = _Pyramid(img, params)
    keypoints = _detect_on_pyramid(pyramid, img.width, img.height)
    return _describe_on_pyramid(pyramid, keypoints, params)
