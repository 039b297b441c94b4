"""Classifier and generator backends.

The stub backends are self-contained and deterministic so the service can
be driven and conformance-tested without any model weights.  The model
backends load lazily behind a lock (requests during loading wait; a failed
load surfaces as BackendUnavailable, which the app maps to 503).
"""
from __future__ import annotations

import hashlib
import io
import math
import threading
from typing import Protocol, Sequence

import numpy as np

from .config import ServiceConfig


class BackendUnavailable(RuntimeError):
    """The backend cannot serve (missing dependency or failed model load)."""


class Classifier(Protocol):
    name: str

    def classify(self, text: str, labels: Sequence[str]) -> list[float]: ...


class Generator(Protocol):
    name: str

    def generate(self, prompt: str, width: int, height: int, seed: int) -> bytes:
        """Return PNG bytes of the requested size."""
        ...


def _hash_unit(*parts: str) -> float:
    digest = hashlib.blake2b(
        "\x1f".join(parts).encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") / 2.0**64


class StubClassifier:
    """Softmax over stable 64-bit hashes of (text, label)."""

    name = "stub"

    def classify(self, text: str, labels: Sequence[str]) -> list[float]:
        raw = [math.exp(_hash_unit(text, label)) for label in labels]
        total = sum(raw)
        return [v / total for v in raw]


class StubGenerator:
    """Seeded multi-octave value noise rendered to PNG; a fixed seed gives
    byte-identical payloads."""

    name = "stub"
    _cells = (8, 16, 32, 64)

    def generate(self, prompt: str, width: int, height: int, seed: int) -> bytes:
        rng = np.random.Generator(np.random.Philox(key=seed))
        acc = np.zeros((height, width))
        for cell in self._cells:
            acc += self._octave(rng, height, width, cell)
        lo, hi = acc.min(), acc.max()
        if hi > lo:
            acc = (acc - lo) / (hi - lo)
        raw = np.floor(acc * 255.0 + 0.5).astype(np.uint8)
        return _encode_png(raw)

    @staticmethod
    def _octave(rng: np.random.Generator, h: int, w: int, cell: int) -> np.ndarray:
        lattice = rng.random((h // cell + 2, w // cell + 2))
        ys = np.arange(h) / cell
        xs = np.arange(w) / cell
        y0 = ys.astype(int)
        x0 = xs.astype(int)
        sy = ys - y0
        sx = xs - x0
        ty = (sy * sy * (3 - 2 * sy))[:, None]
        tx = (sx * sx * (3 - 2 * sx))[None, :]
        top = lattice[y0][:, x0] * (1 - tx) + lattice[y0][:, x0 + 1] * tx
        bottom = lattice[y0 + 1][:, x0] * (1 - tx) + lattice[y0 + 1][:, x0 + 1] * tx
        return top * (1 - ty) + bottom * ty


def _encode_png(gray: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return buf.getvalue()


class TransformersClassifier:
    """Zero-shot classification via a pretrained NLI pipeline."""

    name = "transformers"

    def __init__(self, model: str, device: str) -> None:
        self._model = model
        self._device = device
        self._lock = threading.Lock()
        self._pipeline = None

    def _ensure_loaded(self):
        with self._lock:
            if self._pipeline is None:
                try:
                    from transformers import pipeline
                except ImportError as exc:
                    raise BackendUnavailable(
                        "transformers is not installed; install "
                        "argimg-sidecar[models]"
                    ) from exc
                try:
                    self._pipeline = pipeline(
                        "zero-shot-classification",
                        model=self._model,
                        device=self._device,
                    )
                except Exception as exc:
                    raise BackendUnavailable(
                        f"cannot load {self._model}: {exc}"
                    ) from exc
            return self._pipeline

    def classify(self, text: str, labels: Sequence[str]) -> list[float]:
        zs = self._ensure_loaded()
        with self._lock:  # model access serialized
            result = zs(text if text else " ", list(labels))
        by_label = dict(zip(result["labels"], result["scores"]))
        raw = [float(by_label[label]) for label in labels]
        total = sum(raw)
        return [v / total for v in raw]


class DiffusersGenerator:
    """Latent-diffusion text-to-image with seeded sampling."""

    name = "diffusers"

    def __init__(self, model: str, device: str, steps: int, guidance: float) -> None:
        self._model = model
        self._device = device
        self._steps = steps
        self._guidance = guidance
        self._lock = threading.Lock()
        self._pipe = None

    def _ensure_loaded(self):
        with self._lock:
            if self._pipe is None:
                try:
                    import torch  # noqa: F401
                    from diffusers import StableDiffusionPipeline
                except ImportError as exc:
                    raise BackendUnavailable(
                        "diffusers/torch are not installed; install "
                        "argimg-sidecar[models]"
                    ) from exc
                try:
                    self._pipe = StableDiffusionPipeline.from_pretrained(
                        self._model
                    ).to(self._device)
                except Exception as exc:
                    raise BackendUnavailable(
                        f"cannot load {self._model}: {exc}"
                    ) from exc
            return self._pipe

    def generate(self, prompt: str, width: int, height: int, seed: int) -> bytes:
        pipe = self._ensure_loaded()
        import torch

        with self._lock:
            generator = torch.Generator(device=self._device).manual_seed(
                seed % 2**63
            )
            image = pipe(
                prompt,
                width=width,
                height=height,
                num_inference_steps=self._steps,
                guidance_scale=self._guidance,
                generator=generator,
            ).images[0]
        buf = io.BytesIO()
        image.save(buf, format="PNG")
        return buf.getvalue()


def make_classifier(config: ServiceConfig) -> Classifier:
    if config.classifier_backend == "stub":
        return StubClassifier()
    if config.classifier_backend == "transformers":
        return TransformersClassifier(config.classifier_model, config.device)
    raise ValueError(f"unknown classifier backend: {config.classifier_backend}")


def make_generator(config: ServiceConfig) -> Generator:
    if config.generator_backend == "stub":
        return StubGenerator()
    if config.generator_backend == "diffusers":
        return DiffusersGenerator(
            config.generator_model, config.device, config.steps,
            config.guidance_scale,
        )
    raise ValueError(f"unknown generator backend: {config.generator_backend}")
