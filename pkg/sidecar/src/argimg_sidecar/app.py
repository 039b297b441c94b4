"""FastAPI application serving the argimg inference wire protocol.

POST /classify {"text": str, "labels": [str, ...]}
    -> {"scores": [float, ...]} in request label order, summing to 1.
POST /generate {"prompt": str, "width": int, "height": int, "seed": int}
    -> {"png_base64": str} at the requested size, honoring the seed.
GET /info
    -> backend and model metadata, including generation defaults.

Malformed requests get HTTP 400 with an error message; an unavailable
backend (missing optional model dependencies, failed load) gets HTTP 503.
"""
from __future__ import annotations

import base64

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import BackendUnavailable, make_classifier, make_generator
from .config import ServiceConfig

SCORE_TOLERANCE = 1e-6


class ClassifyRequest(BaseModel):
    text: str
    labels: list[str] = Field(min_length=1)


class GenerateRequest(BaseModel):
    prompt: str
    width: int = 512
    height: int = 512
    seed: int = Field(default=0, ge=0, lt=2**64)


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="argimg-sidecar", version="0.1.0")
    classifier = make_classifier(config)
    generator = make_generator(config)

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": f"malformed request: {exc.errors()[:3]}"},
        )

    @app.exception_handler(BackendUnavailable)
    async def on_backend_unavailable(request: Request, exc: BackendUnavailable):
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.get("/info")
    def info() -> dict:
        return {
            "service": "argimg-sidecar",
            "classify": {
                "backend": classifier.name,
                "model": config.classifier_model,
            },
            "generate": {
                "backend": generator.name,
                "model": config.generator_model,
                "steps": config.steps,
                "guidance_scale": config.guidance_scale,
            },
            "device": config.device,
            "max_batch": config.max_batch,
        }

    @app.post("/classify")
    def classify(body: ClassifyRequest) -> dict:
        scores = classifier.classify(body.text, body.labels)
        total = sum(scores)
        if abs(total - 1.0) > SCORE_TOLERANCE:
            scores = [s / total for s in scores]
        return {"scores": scores}

    @app.post("/generate")
    def generate(body: GenerateRequest) -> dict:
        if body.width <= 0 or body.width % 8 or body.height <= 0 or body.height % 8:
            return JSONResponse(
                status_code=400,
                content={"error": "width and height must be positive multiples of 8"},
            )
        png = generator.generate(body.prompt, body.width, body.height, body.seed)
        return {"png_base64": base64.b64encode(png).decode("ascii")}

    return app
