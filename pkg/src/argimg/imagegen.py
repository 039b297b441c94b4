"""Styled prompts and reference-image generation.

Two prompts per query: the space-joined terms suffixed with
", photorealistic" and ", comic".  The bundled stub renders deterministic
multi-octave value noise so feature matching has real gradient structure
without any model; the remote client speaks the /generate wire protocol.
"""
from __future__ import annotations

import base64
import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import numpy as np

from .queryprep import Query
from .remote import DEFAULT_TIMEOUT, TransportError, post_json
from .vision.image import GrayImage, decode_png

DEFAULT_SIZE = 512
NOISE_OCTAVE_CELLS = (8, 16, 32, 64)


class PromptStyle(Enum):
    PHOTOREALISTIC = "photorealistic"
    COMIC = "comic"


@dataclass(frozen=True)
class Prompt:
    text: str
    style: PromptStyle
    width: int = DEFAULT_SIZE
    height: int = DEFAULT_SIZE
    seed: int = 0

    def __post_init__(self) -> None:
        for name, value in (("width", self.width), ("height", self.height)):
            if value <= 0 or value % 8 != 0:
                raise ValueError(f"{name} must be a positive multiple of 8")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


class ImageGenerator(Protocol):
    def generate(self, prompt: Prompt) -> GrayImage: ...


def prompt_seed(text: str, style: PromptStyle) -> int:
    digest = hashlib.blake2b(
        f"{text}\x1f{style.value}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def build_prompts(
    query: Query, width: int = DEFAULT_SIZE, height: int = DEFAULT_SIZE
) -> tuple[Prompt, Prompt]:
    base = " ".join(query.terms)
    prompts = []
    for style in (PromptStyle.PHOTOREALISTIC, PromptStyle.COMIC):
        text = f"{base}, {style.value}"
        prompts.append(
            Prompt(text, style, width, height, seed=prompt_seed(text, style))
        )
    return prompts[0], prompts[1]


def generate(client: ImageGenerator, prompt: Prompt) -> GrayImage:
    """Run the generator and enforce the requested dimensions."""
    img = client.generate(prompt)
    if img.width != prompt.width or img.height != prompt.height:
        raise ValueError(
            f"generator returned {img.width}x{img.height}, "
            f"requested {prompt.width}x{prompt.height}"
        )
    return img


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def _octave_noise(rng: np.random.Generator, h: int, w: int, cell: int) -> np.ndarray:
    lattice = rng.random((h // cell + 2, w // cell + 2))
    ys = np.arange(h) / cell
    xs = np.arange(w) / cell
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    ty = _smoothstep(ys - y0)[:, None]
    tx = _smoothstep(xs - x0)[None, :]
    top = lattice[y0][:, x0] * (1 - tx) + lattice[y0][:, x0 + 1] * tx
    bottom = lattice[y0 + 1][:, x0] * (1 - tx) + lattice[y0 + 1][:, x0 + 1] * tx
    return top * (1 - ty) + bottom * ty


def stub_raster(seed: int, width: int, height: int) -> GrayImage:
    """Equal-weight sum of smoothed value noise at the four lattice sizes,
    min-max normalized and quantized to 8 bits.  Pure in (seed, w, h)."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    acc = np.zeros((height, width))
    for cell in NOISE_OCTAVE_CELLS:
        acc += _octave_noise(rng, height, width, cell)
    lo, hi = acc.min(), acc.max()
    if hi > lo:
        acc = (acc - lo) / (hi - lo)
    else:  # pragma: no cover - constant noise cannot happen with 4 octaves
        acc = np.zeros_like(acc)
    return GrayImage.from_uint8(np.floor(acc * 255.0 + 0.5).astype(np.uint8))


class StubGenerator:
    def generate(self, prompt: Prompt) -> GrayImage:
        return stub_raster(prompt.seed, prompt.width, prompt.height)


class RemoteGenerator:
    """Client for the /generate endpoint of the inference service."""

    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def generate(self, prompt: Prompt) -> GrayImage:
        payload = {
            "prompt": prompt.text,
            "width": prompt.width,
            "height": prompt.height,
            "seed": prompt.seed,
        }
        body = post_json(f"{self.base_url}/generate", payload, self.timeout)
        encoded = body.get("png_base64") if isinstance(body, dict) else None
        if not isinstance(encoded, str):
            raise TransportError(f"malformed /generate response: {body!r}")
        try:
            raw = base64.b64decode(encoded, validate=True)
        except (ValueError, TypeError) as exc:
            raise TransportError("png_base64 payload is not base64") from exc
        return decode_png(raw, name=f"{self.base_url}/generate")
