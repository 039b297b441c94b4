#!/usr/bin/env python3
"""Record canonical /classify and /generate request/response examples.

The examples are produced by the deterministic stubs, so any service that
implements the wire protocol can be checked against the same files.  Run
from the repository root:

    python scripts/record_wire_fixtures.py
"""
from __future__ import annotations

import base64
import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT_DIR = ROOT / "fixtures" / "wire"


def classify_fixture() -> dict:
    from argimg.queryprep import Query
    from argimg.stance import StubStanceScorer, stance_labels
    from argimg.types import Stance

    scorer = StubStanceScorer()
    examples = []
    cases = [
        ("sex education is a vital part of school curricula",
         Query(1, Stance.PRO, ("need", "sex", "education", "schools"))),
        ("", Query(2, Stance.CON, ("not", "wear", "uniforms"))),
    ]
    for text, query in cases:
        labels = list(stance_labels(query))
        examples.append({
            "request": {"text": text, "labels": labels},
            "response": {"scores": scorer.classify(text, labels)},
        })
    return {
        "endpoint": "/classify",
        "schema": {
            "request": {"text": "string", "labels": "array of 3 strings"},
            "response": {
                "scores": "array of floats, request label order, sums to 1 +-1e-6"
            },
        },
        "examples": examples,
    }


def generate_fixture() -> dict:
    from argimg.imagegen import Prompt, PromptStyle, StubGenerator, prompt_seed
    from argimg.vision.image import encode_png

    generator = StubGenerator()
    examples = []
    for text, style in (
        ("need sex education schools, photorealistic", PromptStyle.PHOTOREALISTIC),
        ("not wear uniforms, comic", PromptStyle.COMIC),
    ):
        prompt = Prompt(text, style, 64, 64, seed=prompt_seed(text, style))
        image = generator.generate(prompt)
        examples.append({
            "request": {
                "prompt": prompt.text,
                "width": prompt.width,
                "height": prompt.height,
                "seed": prompt.seed,
            },
            "response": {
                "png_base64": base64.b64encode(encode_png(image)).decode("ascii")
            },
        })
    return {
        "endpoint": "/generate",
        "schema": {
            "request": {
                "prompt": "string",
                "width": "int, multiple of 8",
                "height": "int, multiple of 8",
                "seed": "uint64",
            },
            "response": {
                "png_base64": "base64 PNG decodable to the requested size"
            },
        },
        "examples": examples,
    }


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name, payload in (
        ("classify.json", classify_fixture()),
        ("generate.json", generate_fixture()),
    ):
        path = OUT_DIR / name
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
