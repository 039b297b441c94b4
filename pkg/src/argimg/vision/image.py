"""Grayscale raster type plus PGM/PNG reading and writing.

Pixels are stored row-major as floats in [0, 1]; 8-bit inputs are divided
by 255.  PGM (P5 binary / P2 ascii) is parsed natively so tests never need
an imaging library; PNG goes through Pillow.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray  # (height, width) float64 in [0, 1]

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixels must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixels must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_uint8(cls, raw: np.ndarray) -> "GrayImage":
        raw = np.asarray(raw)
        if raw.dtype != np.uint8:
            raise ValueError("expected uint8 input")
        return cls(raw.astype(np.float64) / 255.0)

    def to_uint8(self) -> np.ndarray:
        return np.floor(self.pixels * 255.0 + 0.5).astype(np.uint8)


def luma_gray(rgb: np.ndarray) -> GrayImage:
    """Convert an (h, w, 3) uint8 RGB array with 0.299/0.587/0.114 weights,
    rounded half-up to 8 bits before scaling."""
    rgb = np.asarray(rgb, dtype=np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return GrayImage.from_uint8(np.floor(y + 0.5).astype(np.uint8))


def read_pgm(path: str | Path) -> GrayImage:
    data = Path(path).read_bytes()
    return decode_pgm(data, name=str(path))


def decode_pgm(data: bytes, name: str = "<pgm>") -> GrayImage:
    fields: list[bytes] = []
    pos = 0

    def next_field() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{name}: truncated PGM header")
        return data[start:pos]

    magic = next_field()
    if magic not in (b"P5", b"P2"):
        raise ValueError(f"{name}: not a PGM file (magic {magic!r})")
    width = int(next_field())
    height = int(next_field())
    maxval = int(next_field())
    if width <= 0 or height <= 0:
        raise ValueError(f"{name}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ValueError(f"{name}: only 8-bit PGM supported (maxval {maxval})")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raster = data[pos : pos + width * height]
        if len(raster) != width * height:
            raise ValueError(f"{name}: truncated PGM raster")
        raw = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    else:
        values = data[pos:].split()
        if len(values) != width * height:
            raise ValueError(f"{name}: expected {width * height} samples")
        raw = np.array([int(v) for v in values], dtype=np.uint8).reshape(
            height, width
        )
    if maxval != 255:
        raw = np.floor(raw.astype(np.float64) * (255.0 / maxval) + 0.5).astype(
            np.uint8
        )
    return GrayImage.from_uint8(raw)


def write_pgm(img: GrayImage, path: str | Path) -> None:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.to_uint8().tobytes())


def decode_png(data: bytes, name: str = "<png>") -> GrayImage:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("PNG support requires Pillow") from exc
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode == "L":
                return GrayImage.from_uint8(np.asarray(im, dtype=np.uint8))
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ValueError(f"{name}: cannot decode PNG: {exc}") from exc
    return luma_gray(rgb)


def read_png(path: str | Path) -> GrayImage:
    return decode_png(Path(path).read_bytes(), name=str(path))


def encode_png(img: GrayImage) -> bytes:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("PNG support requires Pillow") from exc
    buf = io.BytesIO()
    Image.fromarray(img.to_uint8(), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def read_image(path: str | Path) -> GrayImage:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        return read_png(path)
    raise ValueError(f"{path}: unsupported image format {suffix!r}")
