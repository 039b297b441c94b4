from __future__ import annotations

from dataclasses import dataclass

DEFAULT_CLASSIFIER_MODEL = "facebook/bart-large-mnli"
DEFAULT_GENERATOR_MODEL = "CompVis/stable-diffusion-v1-4"

# generation settings served by /info so clients can record them
DEFAULT_STEPS = 30
DEFAULT_GUIDANCE_SCALE = 7.5


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8008
    classifier_backend: str = "stub"  # "stub" | "transformers"
    generator_backend: str = "stub"  # "stub" | "diffusers"
    classifier_model: str = DEFAULT_CLASSIFIER_MODEL
    generator_model: str = DEFAULT_GENERATOR_MODEL
    device: str = "cpu"
    max_batch: int = 8
    steps: int = DEFAULT_STEPS
    guidance_scale: float = DEFAULT_GUIDANCE_SCALE

    def __post_init__(self) -> None:
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
