#!/usr/bin/env python3
"""Materialize the bundled synthetic mini-corpus to disk.

    python scripts/make_minicorpus.py --out /tmp/minicorpus

Writes topics.jsonl plus corpus/<image_id>/{image.pgm,page-text.txt,...}
and prints the planted ground truth per topic.
"""
from __future__ import annotations

import argparse

from argimg.minicorpus import build_minicorpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--size", type=int, default=256, help="image side length")
    args = parser.parse_args()
    built = build_minicorpus(args.out, ref_size=args.size)
    print(f"topics:  {built.topics_path}")
    print(f"corpus:  {built.corpus_dir}")
    for topic_id, ids in sorted(built.planted.items()):
        print(f"topic {topic_id} planted: {' '.join(ids)}")


if __name__ == "__main__":
    main()
