#!/usr/bin/env python3
"""Run the reference baseline plus pipelines 0-3 over one corpus and report
every run against supplied qrels (or just write the run files).

    python scripts/run_all_pipelines.py --corpus DIR --topics FILE \
        --out-dir runs/ [--qrels QRELS] [--stub | --infer-url URL]

With qrels, prints one metrics row per pipeline and the paired t-test of
each pipeline against the baseline run.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from argimg import bm25, evaluation, pipelines
from argimg.corpus import load_corpus, load_topics, write_run
from argimg.imagegen import RemoteGenerator, StubGenerator
from argimg.remote import infer_url_from_env
from argimg.stance import RemoteStanceScorer, StubStanceScorer
from argimg.vision.match import MatchParams
from argimg.vision.sift import SiftParams


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--topics", required=True)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--qrels")
    parser.add_argument("--preselect-k", type=int, default=50)
    parser.add_argument("--depth", type=int, default=10)
    parser.add_argument("--prompt-size", type=int, default=512)
    parser.add_argument("--max-keypoints", type=int, default=300)
    parser.add_argument("--stub", action="store_true")
    parser.add_argument("--infer-url")
    args = parser.parse_args()

    if args.stub:
        scorer, generator = StubStanceScorer(), StubGenerator()
    else:
        url = args.infer_url or infer_url_from_env()
        if not url:
            print("pass --stub or --infer-url", file=sys.stderr)
            return 1
        scorer, generator = RemoteStanceScorer(url), RemoteGenerator(url)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    topics = load_topics(args.topics)
    docs = list(load_corpus(args.corpus))
    index = bm25.build_index(docs)
    match = MatchParams(sift=SiftParams(max_keypoints=args.max_keypoints))

    runs = {}
    for pid in pipelines.PipelineId:
        config = pipelines.PipelineConfig.for_pipeline(
            pid,
            preselect_k=args.preselect_k,
            output_depth=args.depth,
            match=match,
            prompt_size=args.prompt_size,
        )
        result = pipelines.run_pipeline(
            config, topics, docs, index, scorer, generator
        )
        for warning in result.warnings:
            print(f"warning [{pid.value}]: {warning}", file=sys.stderr)
        path = out_dir / f"{config.tag}.run"
        write_run(result.entries, path)
        runs[pid] = result.entries
        print(f"wrote {path} ({len(result.entries)} entries)")

    if args.qrels:
        qrels = evaluation.Qrels.load(args.qrels)
        baseline = runs[pipelines.PipelineId.BASELINE_REF]
        topic_ids = [t.id for t in topics]
        header = f"{'pipeline':<14} {'P@10':>7} {'P@1':>7} {'MAP':>7} {'p-value':>8}"
        print()
        print(header)
        print("-" * len(header))
        for pid, entries in runs.items():
            report = evaluation.evaluate(
                entries,
                qrels,
                baseline_run=None if pid is pipelines.PipelineId.BASELINE_REF else baseline,
                topic_ids=topic_ids,
            )
            p_txt = "" if report.p_value is None else f"{report.p_value:8.3f}"
            print(
                f"{pid.value:<14} {report.precision_at_10:7.3f} "
                f"{report.precision_at_1:7.3f} {report.map:7.3f} {p_txt}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
