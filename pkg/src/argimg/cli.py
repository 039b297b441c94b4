"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime error.  Diagnostics go to
stderr; results go to files named by flags or to stdout.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bm25, corpus, evaluation, imagegen, pipelines, queryprep, stance
from .remote import TransportError, infer_url_from_env
from .vision import image as vimage
from .vision import match as vmatch


class UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str) -> None:
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(self, message)


def _add_lexicon_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--zipf", help="word<TAB>zipf table overriding the bundled one")
    parser.add_argument("--verbs", help="verb lexicon overriding the bundled one")
    parser.add_argument(
        "--threshold",
        type=float,
        default=queryprep.DEFAULT_ZIPF_THRESHOLD,
        help="zipf cutoff below which words are kept (default %(default)s)",
    )


def _lexicons(args) -> tuple[Optional[queryprep.ZipfTable], Optional[queryprep.VerbLexicon]]:
    table = queryprep.ZipfTable.load(args.zipf) if args.zipf else None
    lexicon = queryprep.VerbLexicon.load(args.verbs) if args.verbs else None
    return table, lexicon


def _add_infer_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--stub", action="store_true", help="use the deterministic stubs")
    group.add_argument("--infer-url", help="inference service base URL")
    parser.add_argument(
        "--timeout", type=float, default=60.0, help="inference request timeout"
    )


def _infer_backends(args, parser: argparse.ArgumentParser):
    """(scorer, generator) per flags; --stub and --infer-url are mutually
    exclusive and the ARGIMG_INFER_URL env var backs --infer-url."""
    if args.stub:
        return stance.StubStanceScorer(), imagegen.StubGenerator()
    url = args.infer_url or infer_url_from_env()
    if not url:
        raise UsageError(
            parser, "pass --stub or --infer-url (or set ARGIMG_INFER_URL)"
        )
    return (
        stance.RemoteStanceScorer(url, timeout=args.timeout),
        imagegen.RemoteGenerator(url, timeout=args.timeout),
    )


def _cmd_prep(args, parser) -> int:
    table, lexicon = _lexicons(args)
    topic = corpus.Topic(1, args.question)
    pro, con = queryprep.build_queries(topic, table, args.threshold, lexicon)
    print(f"PRO: {pro.text}")
    print(f"CON: {con.text}")
    return 0


def _cmd_index_build(args, parser) -> int:
    index = bm25.build_index(corpus.load_corpus(args.corpus), args.max_chars)
    bm25.save_index(index, args.out)
    print(
        f"indexed {index.n_docs} documents, {len(index.postings)} terms",
        file=sys.stderr,
    )
    return 0


def _cmd_index_query(args, parser) -> int:
    index = bm25.load_index(args.index)
    table, lexicon = _lexicons(args)
    topic = corpus.Topic(1, args.question)
    pro, con = queryprep.build_queries(topic, table, args.threshold, lexicon)
    query = pro if args.stance == "PRO" else con
    for rank, hit in enumerate(bm25.retrieve(index, query, args.k), 1):
        print(f"{rank} {hit.image_id} {hit.score:.6f}")
    return 0


def _cmd_run(args, parser) -> int:
    pipeline = pipelines.PipelineId(args.pipeline)
    table, lexicon = _lexicons(args)
    overrides = {
        "preselect_k": args.preselect_k,
        "output_depth": args.depth,
        "order": pipelines.RankOrder(args.order),
        "zipf_threshold": args.threshold,
        "prompt_size": args.prompt_size,
    }
    if args.tag:
        overrides["tag"] = args.tag
    if args.max_keypoints is not None:
        sift = vmatch.SiftParams(max_keypoints=args.max_keypoints)
        overrides["match"] = vmatch.MatchParams(sift=sift)
    config = pipelines.PipelineConfig.for_pipeline(pipeline, **overrides)
    scorer = generator = None
    if pipeline is not pipelines.PipelineId.BASELINE_REF:
        scorer, generator = _infer_backends(args, parser)
    topics = corpus.load_topics(args.topics)
    docs = list(corpus.load_corpus(args.corpus))
    index = bm25.build_index(docs, args.max_chars)
    result = pipelines.run_pipeline(
        config, topics, docs, index, scorer, generator, table, lexicon
    )
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    corpus.write_run(result.entries, args.out)
    print(f"wrote {len(result.entries)} entries to {args.out}", file=sys.stderr)
    return 0


def _cmd_match(args, parser) -> int:
    params = vmatch.MatchParams(
        mode=vmatch.MatchMode(args.mode), threshold=args.match_threshold
    )
    candidate = vmatch.extract_features(vimage.read_image(args.query_image), params)
    reference = vmatch.ReferenceIndex.build(
        vmatch.extract_features(vimage.read_image(args.ref_image), params), params
    )
    if reference.forest is None or len(candidate) == 0:
        print("good-matches 0")
        print("inliers -")
        return 0
    pairs = vmatch.knn2_pairs(reference.forest, candidate.descriptors)
    good = vmatch.good_matches(pairs, params.mode, params.threshold)
    print(f"good-matches {len(good)}")
    if len(good) < params.min_matches_for_homography:
        print("inliers -")
        return 0
    import numpy as np

    src = np.array([
        (candidate.keypoints[m.query_idx].x, candidate.keypoints[m.query_idx].y)
        for m in good
    ])
    dst = np.array([
        (
            reference.features.keypoints[m.train_idx].x,
            reference.features.keypoints[m.train_idx].y,
        )
        for m in good
    ])
    found = vmatch.estimate_homography(src, dst)
    print(f"inliers {int(found[1].sum())}" if found else "inliers -")
    return 0


def _cmd_generate(args, parser) -> int:
    table, lexicon = _lexicons(args)
    _, generator = _infer_backends(args, parser)
    topic = corpus.Topic(1, args.question)
    pro, con = queryprep.build_queries(topic, table, args.threshold, lexicon)
    query = pro if args.stance == "PRO" else con
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for prompt in imagegen.build_prompts(query, args.size, args.size):
        raster = imagegen.generate(generator, prompt)
        path = out_dir / f"{prompt.style.value}.pgm"
        vimage.write_pgm(raster, path)
        print(path)
    return 0


def _cmd_curate(args, parser) -> int:
    annotations = corpus.load_annotations(args.annotations)
    qrels = evaluation.curate_all(annotations)
    qrels.save(args.out)
    print(f"wrote {len(qrels)} judgments to {args.out}", file=sys.stderr)
    return 0


def _cmd_kappa(args, parser) -> int:
    annotations = corpus.load_annotations(args.annotations)
    print(f"{evaluation.fleiss_kappa(annotations):.6f}")
    return 0


def _cmd_eval(args, parser) -> int:
    run = corpus.read_run(args.run)
    qrels = evaluation.Qrels.load(args.qrels)
    baseline = corpus.read_run(args.baseline) if args.baseline else None
    topic_ids = None
    if args.topics:
        topic_ids = [t.id for t in corpus.load_topics(args.topics)]
    report = evaluation.evaluate(
        run,
        qrels,
        baseline_run=baseline,
        topic_ids=topic_ids,
        ap_depth=args.ap_depth,
        neutral_relevant=args.neutral_relevant,
    )
    print(report.to_json() if args.json else report.format_table())
    return 0


def _read_floats(path: str) -> list[float]:
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from exc
    return values


def _cmd_ttest(args, parser) -> int:
    t, p = evaluation.paired_t_test(_read_floats(args.a), _read_floats(args.b))
    print(f"t {t:.6f}")
    print(f"p {p:.6f}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="argimg", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("prep", parents=[], help="print PRO/CON queries for a question")
    p.add_argument("--question", required=True)
    _add_lexicon_flags(p)
    p.set_defaults(func=_cmd_prep)

    p_index = sub.add_parser("index", help="build or query a BM25 index")
    index_sub = p_index.add_subparsers(dest="index_command")
    p = index_sub.add_parser("build")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-chars", type=int, default=bm25.DEFAULT_MAX_CHARS)
    p.set_defaults(func=_cmd_index_build)
    p = index_sub.add_parser("query")
    p.add_argument("--index", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--stance", choices=["PRO", "CON"], default="PRO")
    p.add_argument("-k", type=int, default=bm25.DEFAULT_PRESELECT)
    _add_lexicon_flags(p)
    p.set_defaults(func=_cmd_index_query)

    p = sub.add_parser("run", help="run a retrieval pipeline and write a run file")
    p.add_argument(
        "--pipeline", required=True, choices=[pid.value for pid in pipelines.PipelineId]
    )
    p.add_argument("--corpus", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--preselect-k", type=int, default=bm25.DEFAULT_PRESELECT)
    p.add_argument("--depth", type=int, default=pipelines.DEFAULT_OUTPUT_DEPTH)
    p.add_argument("--max-chars", type=int, default=bm25.DEFAULT_MAX_CHARS)
    p.add_argument("--tag", default="")
    p.add_argument(
        "--order",
        choices=[o.value for o in pipelines.RankOrder],
        default=pipelines.RankOrder.MATCH_FIRST.value,
    )
    p.add_argument("--max-keypoints", type=int, default=None)
    p.add_argument("--prompt-size", type=int, default=imagegen.DEFAULT_SIZE)
    _add_lexicon_flags(p)
    _add_infer_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("match", help="match two images and print counts")
    p.add_argument("--query-image", required=True)
    p.add_argument("--ref-image", required=True)
    p.add_argument(
        "--mode",
        choices=[m.value for m in vmatch.MatchMode],
        default=vmatch.MatchMode.RATIO.value,
    )
    p.add_argument(
        "--match-threshold", type=float, default=vmatch.DEFAULT_RATIO
    )
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("generate", help="generate the two styled reference images")
    p.add_argument("--question", required=True)
    p.add_argument("--stance", choices=["PRO", "CON"], default="PRO")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--size", type=int, default=imagegen.DEFAULT_SIZE)
    _add_lexicon_flags(p)
    _add_infer_flags(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("curate", help="collapse raw annotations into qrels")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_curate)

    p = sub.add_parser("kappa", help="Fleiss kappa of the raw annotations")
    p.add_argument("--annotations", required=True)
    p.set_defaults(func=_cmd_kappa)

    p = sub.add_parser("eval", help="score a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--baseline")
    p.add_argument("--topics")
    p.add_argument("--ap-depth", type=int, default=evaluation.DEFAULT_AP_DEPTH)
    p.add_argument("--neutral-relevant", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ttest", help="paired t-test over two value files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=_cmd_ttest)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError(parser, "missing subcommand")
        return args.func(args, parser)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        exc.parser.print_help(sys.stderr)
        return 1
    except (ValueError, OSError, TransportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:  # console script
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
