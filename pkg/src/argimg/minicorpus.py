"""Bundled synthetic mini-corpus with known ground truth.

Four debate topics, 40 images: per topic, five planted images that are
projectively warped + noised copies of the stub reference images for the
topic's PRO query (with stance-consistent text), plus twenty shared
distractors whose text weakly matches every topic but whose noise images
match nothing.  A correct pipeline must place the planted images on top.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Topic, save_topics
from .imagegen import PromptStyle, build_prompts, stub_raster
from .queryprep import build_queries
from .vision.image import GrayImage, write_pgm

TOPICS = [
    Topic(1, "Do we need sex education in schools?"),
    Topic(2, "Should students wear uniforms in school?"),
    Topic(3, "Do we need stricter gun control laws?"),
    Topic(4, "Should animals be used for scientific research?"),
]

PLANTED_PER_TOPIC = 5
DISTRACTORS = 20
IMAGE_SIZE = 256
NOISE_SIGMA = 4.0 / 255.0

# one query term per topic so every distractor lands in every preselection
_DISTRACTOR_MARKERS = "education uniforms laws research"


@dataclass(frozen=True)
class MiniCorpus:
    root: Path
    topics_path: Path
    corpus_dir: Path
    planted: dict[int, list[str]]  # topic id -> planted image ids


def _warp_from_reference(
    ref: GrayImage, size: int, homography: np.ndarray, rng: np.random.Generator
) -> GrayImage:
    """Sample the reference through the homography (planted -> reference
    coordinates), add pixel noise, and quantize back to 8 bits."""
    px = ref.pixels
    h, w = px.shape
    ys, xs = np.mgrid[0:size, 0:size].astype(float)
    coords = np.stack([xs, ys, np.ones_like(xs)])
    mapped = np.tensordot(homography, coords, axes=1)
    u = np.clip(mapped[0] / mapped[2], 0, w - 1.001)
    v = np.clip(mapped[1] / mapped[2], 0, h - 1.001)
    x0 = u.astype(int)
    y0 = v.astype(int)
    tx = u - x0
    ty = v - y0
    top = px[y0, x0] * (1 - tx) + px[y0, x0 + 1] * tx
    bottom = px[y0 + 1, x0] * (1 - tx) + px[y0 + 1, x0 + 1] * tx
    warped = top * (1 - ty) + bottom * ty
    warped = np.clip(warped + rng.normal(0.0, NOISE_SIGMA, warped.shape), 0, 1)
    return GrayImage.from_uint8(np.floor(warped * 255.0 + 0.5).astype(np.uint8))


def _planted_homography(index: int, rng: np.random.Generator) -> np.ndarray:
    theta = np.deg2rad(rng.uniform(-12.0, 12.0))
    scale = rng.uniform(0.95, 1.1)
    c, s = scale * np.cos(theta), scale * np.sin(theta)
    tx, ty = rng.uniform(-10.0, 10.0, size=2)
    px, py = rng.uniform(-3e-5, 3e-5, size=2)
    return np.array([[c, -s, tx], [s, c, ty], [px, py, 1.0]])


def _write_doc(
    corpus_dir: Path, image_id: str, image: GrayImage, page_text: str,
    image_text: str | None,
) -> None:
    doc_dir = corpus_dir / image_id
    doc_dir.mkdir(parents=True, exist_ok=True)
    write_pgm(image, doc_dir / "image.pgm")
    (doc_dir / "page-text.txt").write_text(page_text, encoding="utf-8")
    if image_text is not None:
        (doc_dir / "image-text.txt").write_text(image_text, encoding="utf-8")


def build_minicorpus(root: str | Path, ref_size: int = IMAGE_SIZE) -> MiniCorpus:
    root = Path(root)
    corpus_dir = root / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    topics_path = root / "topics.jsonl"
    save_topics(TOPICS, topics_path)

    planted: dict[int, list[str]] = {}
    for topic in TOPICS:
        pro, _con = build_queries(topic)
        prompts = build_prompts(pro, ref_size, ref_size)
        references = {
            p.style: stub_raster(p.seed, p.width, p.height) for p in prompts
        }
        joined = " ".join(pro.terms)
        page_text = (
            f"Yes, {joined}. Why {joined} matters: {joined} helps everyone "
            f"and deserves support."
        )
        ids = []
        rng = np.random.default_rng(1000 + topic.id)
        for i in range(PLANTED_PER_TOPIC):
            style = PromptStyle.PHOTOREALISTIC if i % 2 == 0 else PromptStyle.COMIC
            image = _warp_from_reference(
                references[style], ref_size, _planted_homography(i, rng), rng
            )
            image_id = f"t{topic.id}p{i}"
            _write_doc(corpus_dir, image_id, image, page_text, joined)
            ids.append(image_id)
        planted[topic.id] = ids

    for i in range(DISTRACTORS):
        image = stub_raster(500_000 + i, ref_size, ref_size)
        page_text = (
            f"Stock photo archive {_DISTRACTOR_MARKERS} gallery page {i}."
        )
        _write_doc(corpus_dir, f"zdist{i:02d}", image, page_text, None)

    return MiniCorpus(
        root=root, topics_path=topics_path, corpus_dir=corpus_dir, planted=planted
    )
