"""Serve the sidecar:  python -m argimg_sidecar [--port 8008] [...]"""
from __future__ import annotations

import argparse

from .app import create_app
from .config import ServiceConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8008)
    parser.add_argument(
        "--classifier", choices=["stub", "transformers"], default="stub"
    )
    parser.add_argument("--generator", choices=["stub", "diffusers"], default="stub")
    parser.add_argument("--classifier-model")
    parser.add_argument("--generator-model")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--steps", type=int, default=ServiceConfig.steps)
    parser.add_argument(
        "--guidance-scale", type=float, default=ServiceConfig.guidance_scale
    )
    args = parser.parse_args()

    overrides = dict(
        host=args.host,
        port=args.port,
        classifier_backend=args.classifier,
        generator_backend=args.generator,
        device=args.device,
        steps=args.steps,
        guidance_scale=args.guidance_scale,
    )
    if args.classifier_model:
        overrides["classifier_model"] = args.classifier_model
    if args.generator_model:
        overrides["generator_model"] = args.generator_model
    config = ServiceConfig(**overrides)

    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
