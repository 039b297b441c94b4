"""Judgment curation and run scoring: P@k, AP/MAP, Fleiss kappa, t-tests.

Relevance of a judged label depends on the query stance: PRO queries count
"pro" images (optionally also "neutral"), CON queries count "con" images.
Unjudged images are non-relevant, the standard pooling assumption.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from scipy.special import betainc

from .corpus import Annotation, FormatError, RunEntry
from .types import LABELS, Label, Stance

RATERS = 3
CATEGORIES = len(LABELS)
DEFAULT_AP_DEPTH = 10


@dataclass
class Qrels:
    labels: dict[tuple[int, str], Label] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)

    def get(self, topic_id: int, image_id: str) -> Optional[Label]:
        return self.labels.get((topic_id, image_id))

    def add(self, topic_id: int, image_id: str, label: Label) -> None:
        key = (topic_id, image_id)
        if key in self.labels and self.labels[key] != label:
            raise ValueError(f"conflicting labels for {key}")
        self.labels[key] = label

    def topics(self) -> set[int]:
        return {topic_id for topic_id, _ in self.labels}

    @classmethod
    def load(cls, path: str | Path) -> "Qrels":
        qrels = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise FormatError(
                        f"{path}:{lineno}: expected topic_id, image_id, label"
                    )
                try:
                    qrels.add(int(parts[0]), parts[1], Label.parse(parts[2]))
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from exc
        return qrels

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for (topic_id, image_id), label in sorted(self.labels.items()):
                fh.write(f"{topic_id}\t{image_id}\t{label}\n")


def curate(annotations: Sequence[Annotation]) -> Label:
    """Collapse the three annotator labels for one (topic, image).

    Majority label when two agree; when all three differ the image was
    called on-topic by at least two raters, so it becomes NEUTRAL.
    """
    if len(annotations) != RATERS:
        keys = {(a.topic_id, a.image_id) for a in annotations}
        raise ValueError(
            f"expected {RATERS} annotations for {sorted(keys)}, "
            f"got {len(annotations)}"
        )
    counts: dict[Label, int] = {}
    for ann in annotations:
        counts[ann.label] = counts.get(ann.label, 0) + 1
    best = max(counts.items(), key=lambda kv: kv[1])
    if best[1] >= 2:
        return best[0]
    return Label.NEUTRAL


def curate_all(annotations: Iterable[Annotation]) -> Qrels:
    groups: dict[tuple[int, str], list[Annotation]] = {}
    for ann in annotations:
        groups.setdefault((ann.topic_id, ann.image_id), []).append(ann)
    qrels = Qrels()
    for (topic_id, image_id), group in sorted(groups.items()):
        qrels.add(topic_id, image_id, curate(group))
    return qrels


def relevance(
    label: Optional[Label], stance: Stance, neutral_relevant: bool = False
) -> bool:
    if label is None or label is Label.OFF_TOPIC:
        return False
    if label is Label.NEUTRAL:
        return neutral_relevant
    wanted = Label.PRO if stance is Stance.PRO else Label.CON
    return label is wanted


def _group_flags(
    entries: Sequence[RunEntry],
    qrels: Qrels,
    stance: Stance,
    neutral_relevant: bool,
) -> list[bool]:
    return [
        relevance(qrels.get(e.topic_id, e.image_id), stance, neutral_relevant)
        for e in sorted(entries, key=lambda e: e.rank)
    ]


def precision_at_k(
    entries: Sequence[RunEntry],
    qrels: Qrels,
    stance: Stance,
    k: int,
    neutral_relevant: bool = False,
) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    flags = _group_flags(entries, qrels, stance, neutral_relevant)
    return sum(flags[:k]) / k


def _relevant_count(
    qrels: Qrels, topic_id: int, stance: Stance, neutral_relevant: bool
) -> int:
    return sum(
        1
        for (t, _), label in qrels.labels.items()
        if t == topic_id and relevance(label, stance, neutral_relevant)
    )


def average_precision(
    entries: Sequence[RunEntry],
    qrels: Qrels,
    stance: Stance,
    depth: int = DEFAULT_AP_DEPTH,
    neutral_relevant: bool = False,
) -> float:
    """AP = (1/R) * sum of P@r at each relevant rank r <= depth, where R is
    the number of judged-relevant images for the (topic, stance); 0 if R=0."""
    if not entries:
        return 0.0
    topic_id = entries[0].topic_id
    r_total = _relevant_count(qrels, topic_id, stance, neutral_relevant)
    if r_total == 0:
        return 0.0
    flags = _group_flags(entries, qrels, stance, neutral_relevant)[:depth]
    hits = 0
    acc = 0.0
    for rank, flag in enumerate(flags, 1):
        if flag:
            hits += 1
            acc += hits / rank
    return acc / r_total


def run_groups(
    entries: Iterable[RunEntry],
) -> dict[tuple[int, Stance], list[RunEntry]]:
    groups: dict[tuple[int, Stance], list[RunEntry]] = {}
    for entry in entries:
        groups.setdefault((entry.topic_id, entry.stance), []).append(entry)
    for group in groups.values():
        group.sort(key=lambda e: e.rank)
    return groups


def _universe(
    qrels: Qrels,
    runs: Sequence[Iterable[RunEntry]],
    topic_ids: Optional[Iterable[int]],
) -> list[tuple[int, Stance]]:
    if topic_ids is not None:
        return [(t, s) for t in sorted(topic_ids) for s in Stance]
    keys: set[tuple[int, Stance]] = set()
    for t in qrels.topics():
        keys.update((t, s) for s in Stance)
    for run in runs:
        keys.update(run_groups(run).keys())
    return sorted(keys, key=lambda k: (k[0], k[1].value))


def mean_ap(
    run: Iterable[RunEntry],
    qrels: Qrels,
    topic_ids: Optional[Iterable[int]] = None,
    depth: int = DEFAULT_AP_DEPTH,
    neutral_relevant: bool = False,
) -> float:
    """Mean AP over the (topic, stance) universe; groups the run does not
    return contribute 0."""
    universe = _universe(qrels, [run], topic_ids)
    if not universe:
        return 0.0
    groups = run_groups(run)
    total = 0.0
    for topic_id, stance in universe:
        entries = groups.get((topic_id, stance), [])
        total += average_precision(entries, qrels, stance, depth, neutral_relevant)
    return total / len(universe)


def fleiss_kappa(
    annotations: Iterable[Annotation],
    categories: int = CATEGORIES,
    raters: int = RATERS,
) -> float:
    """Chance-corrected agreement for a fixed rater count per item."""
    groups: dict[tuple[int, str], list[Label]] = {}
    for ann in annotations:
        groups.setdefault((ann.topic_id, ann.image_id), []).append(ann.label)
    if not groups:
        raise ValueError("no annotations")
    label_order = list(LABELS)[:categories]
    n_items = len(groups)
    p_bar = 0.0
    category_totals = [0] * len(label_order)
    for key, labels in groups.items():
        if len(labels) != raters:
            raise ValueError(
                f"item {key} has {len(labels)} annotations, expected {raters}"
            )
        counts = [0] * len(label_order)
        for label in labels:
            counts[label_order.index(label)] += 1
        p_bar += (sum(c * c for c in counts) - raters) / (raters * (raters - 1))
        for j, c in enumerate(counts):
            category_totals[j] += c
    p_bar /= n_items
    total = n_items * raters
    p_e = sum((c / total) ** 2 for c in category_totals)
    if p_e >= 1.0:
        if p_bar >= 1.0:
            return 1.0
        raise ValueError("degenerate expected agreement with imperfect raters")
    return (p_bar - p_e) / (1.0 - p_e)


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided paired Student's t-test.

    p comes from the regularized incomplete beta: p = I_{v/(v+t^2)}(v/2, 1/2)
    with v = n-1.  All-zero differences give (0, 1); zero variance with a
    nonzero mean gives (+-inf, 0).
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = [x - y for x, y in zip(a, b)]
    mean = sum(d) / n
    var = sum((x - mean) ** 2 for x in d) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / math.sqrt(var / n)
    nu = n - 1
    p = float(betainc(nu / 2.0, 0.5, nu / (nu + t * t)))
    return t, min(max(p, 0.0), 1.0)


@dataclass
class EvalReport:
    tag: str
    precision_at_10: float
    precision_at_1: float
    map: float
    group_ap: dict[tuple[int, Stance], float]
    t_statistic: Optional[float] = None
    p_value: Optional[float] = None
    baseline_tag: Optional[str] = None
    notices: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")

    def to_json(self) -> str:
        payload = {
            "tag": self.tag,
            "precision_at_10": self.precision_at_10,
            "precision_at_1": self.precision_at_1,
            "map": self.map,
            "t_test": (
                None
                if self.p_value is None
                else {
                    "baseline": self.baseline_tag,
                    "kind": "paired over per-group average precision",
                    "t": self.t_statistic,
                    "p": self.p_value,
                }
            ),
            "group_ap": {
                f"{topic_id} {stance}": ap
                for (topic_id, stance), ap in sorted(
                    self.group_ap.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
                )
            },
            "notices": self.notices,
        }
        return json.dumps(payload, indent=2)

    def format_table(self) -> str:
        rows = [
            ("run", self.tag),
            ("precision@10", f"{self.precision_at_10:.4f}"),
            ("precision@1", f"{self.precision_at_1:.4f}"),
            ("MAP", f"{self.map:.4f}"),
        ]
        if self.p_value is not None:
            rows.append(("t (paired AP)", f"{self.t_statistic:.4f}"))
            rows.append(("p-value", f"{self.p_value:.4f}"))
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v}" for k, v in rows]
        lines.extend(f"note: {n}" for n in self.notices)
        return "\n".join(lines)


def evaluate(
    run: Iterable[RunEntry],
    qrels: Qrels,
    baseline_run: Optional[Iterable[RunEntry]] = None,
    topic_ids: Optional[Iterable[int]] = None,
    ap_depth: int = DEFAULT_AP_DEPTH,
    neutral_relevant: bool = False,
) -> EvalReport:
    run = list(run)
    baseline = list(baseline_run) if baseline_run is not None else None
    groups = run_groups(run)
    tag = run[0].tag if run else "empty-run"
    runs_for_universe = [run] + ([baseline] if baseline is not None else [])
    universe = _universe(qrels, runs_for_universe, topic_ids)
    notices: list[str] = []

    if not qrels.labels:
        notices.append("empty qrels: all metrics are 0")
        if baseline is not None:
            notices.append("t-test skipped: no judgments")
        return EvalReport(tag, 0.0, 0.0, 0.0, {}, notices=notices)

    p10 = p1 = 0.0
    group_ap: dict[tuple[int, Stance], float] = {}
    for key in universe:
        entries = groups.get(key, [])
        stance = key[1]
        p10 += precision_at_k(entries, qrels, stance, 10, neutral_relevant) if entries else 0.0
        p1 += precision_at_k(entries, qrels, stance, 1, neutral_relevant) if entries else 0.0
        group_ap[key] = average_precision(
            entries, qrels, stance, ap_depth, neutral_relevant
        )
    n = len(universe) or 1
    report = EvalReport(
        tag=tag,
        precision_at_10=p10 / n,
        precision_at_1=p1 / n,
        map=sum(group_ap.values()) / n,
        group_ap=group_ap,
        notices=notices,
    )

    if baseline is not None:
        base_groups = run_groups(baseline)
        base_ap = [
            average_precision(
                base_groups.get(key, []), qrels, key[1], ap_depth, neutral_relevant
            )
            for key in universe
        ]
        run_ap = [group_ap[key] for key in universe]
        if len(universe) < 2:
            notices.append("t-test skipped: fewer than 2 groups")
        else:
            t, p = paired_t_test(run_ap, base_ap)
            report.t_statistic = t
            report.p_value = p
            report.baseline_tag = baseline[0].tag if baseline else "baseline"
    return report
