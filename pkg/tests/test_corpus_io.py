from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from argimg.corpus import (
    Annotation,
    FormatError,
    RunEntry,
    Topic,
    load_annotations,
    load_corpus,
    load_topics,
    read_run,
    save_annotations,
    save_topics,
    write_run,
)
from argimg.types import Label, Stance
from argimg.vision.image import GrayImage, write_pgm


def _write_doc(root, image_id, with_page=True, with_image_text=False):
    doc = root / image_id
    doc.mkdir()
    img = GrayImage(np.full((4, 4), 0.5))
    write_pgm(img, doc / "image.pgm")
    if with_page:
        (doc / "page-text.txt").write_text(f"text for {image_id}", encoding="utf-8")
    if with_image_text:
        (doc / "image-text.txt").write_text("ocr words", encoding="utf-8")


def test_load_topics_worked_example(tmp_path):
    path = tmp_path / "topics.jsonl"
    path.write_text(
        '{"id":1,"question":"Do we need sex education in schools?"}\n',
        encoding="utf-8",
    )
    topics = load_topics(path)
    assert topics == [Topic(1, "Do we need sex education in schools?")]


def test_load_topics_empty_file(tmp_path):
    path = tmp_path / "topics.jsonl"
    path.write_text("", encoding="utf-8")
    assert load_topics(path) == []


def test_load_topics_duplicate_id(tmp_path):
    path = tmp_path / "topics.jsonl"
    path.write_text(
        '{"id":7,"question":"a?"}\n{"id":7,"question":"b?"}\n', encoding="utf-8"
    )
    with pytest.raises(FormatError, match="duplicate topic id 7"):
        load_topics(path)


def test_load_topics_malformed_line_reports_number(tmp_path):
    path = tmp_path / "topics.jsonl"
    path.write_text('{"id":1,"question":"a?"}\nnot json\n', encoding="utf-8")
    with pytest.raises(FormatError, match=":2"):
        load_topics(path)


def test_topics_round_trip(tmp_path):
    topics = [Topic(3, "A?"), Topic(1, "B?")]
    path = tmp_path / "topics.jsonl"
    save_topics(topics, path)
    assert load_topics(path) == topics  # file order preserved


def test_load_corpus_order_and_defaults(tmp_path):
    _write_doc(tmp_path, "b")
    _write_doc(tmp_path, "a", with_image_text=True)
    docs = list(load_corpus(tmp_path))
    assert [d.id for d in docs] == ["a", "b"]
    assert docs[0].image_text == "ocr words"
    assert docs[1].image_text == ""
    assert docs[1].page_text == "text for b"
    assert docs[0].image.width == 4


def test_load_corpus_missing_page_text(tmp_path):
    _write_doc(tmp_path, "x", with_page=False)
    with pytest.raises(FormatError, match="'x'"):
        list(load_corpus(tmp_path))


def test_load_corpus_unreadable_image(tmp_path):
    doc = tmp_path / "bad"
    doc.mkdir()
    (doc / "image.pgm").write_bytes(b"P5\n4 4\n255\nxx")  # truncated raster
    (doc / "page-text.txt").write_text("t", encoding="utf-8")
    with pytest.raises(ValueError, match="truncated"):
        list(load_corpus(tmp_path))


def test_load_corpus_each_id_once(tmp_path):
    for name in ("a", "b", "c"):
        _write_doc(tmp_path, name)
    ids = [d.id for d in load_corpus(tmp_path)]
    assert ids == sorted(set(ids))
    assert len(ids) == 3


def test_run_entry_line_format(tmp_path):
    path = tmp_path / "run.txt"
    write_run([RunEntry(1, Stance.PRO, "img01", 1, 12.0, "p0")], path)
    assert path.read_bytes() == b"1 PRO img01 1 12.000000 p0\n"


def test_run_round_trip(tmp_path):
    entries = [
        RunEntry(1, Stance.PRO, "a", 1, 3.5, "t"),
        RunEntry(1, Stance.PRO, "b", 2, 1.25, "t"),
        RunEntry(1, Stance.CON, "a", 1, 9.0, "t"),
    ]
    path = tmp_path / "run.txt"
    write_run(entries, path)
    assert read_run(path) == entries


def test_read_run_rank_zero_rejected(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text("1 PRO img01 0 1.000000 p0\n", encoding="utf-8")
    with pytest.raises(FormatError, match=":1"):
        read_run(path)


def test_write_run_rejects_bad_groups(tmp_path):
    path = tmp_path / "run.txt"
    with pytest.raises(ValueError, match="contiguous"):
        write_run([RunEntry(1, Stance.PRO, "a", 2, 1.0, "t")], path)
    with pytest.raises(ValueError, match="increase"):
        write_run(
            [
                RunEntry(1, Stance.PRO, "a", 1, 1.0, "t"),
                RunEntry(1, Stance.PRO, "b", 2, 2.0, "t"),
            ],
            path,
        )
    with pytest.raises(ValueError, match="duplicate"):
        write_run(
            [
                RunEntry(1, Stance.PRO, "a", 1, 2.0, "t"),
                RunEntry(1, Stance.PRO, "a", 2, 1.0, "t"),
            ],
            path,
        )


_scores = st.integers(min_value=-10**6, max_value=10**6).map(
    lambda micros: micros / 1e6  # exactly representable at 6 decimals
)
_ids = st.text(alphabet="abcdefgh0123456789", min_size=1, max_size=6)


@st.composite
def _runs(draw):
    entries = []
    for topic_id in draw(st.lists(st.integers(1, 5), min_size=1, max_size=3, unique=True)):
        for stance in (Stance.PRO, Stance.CON):
            ids = draw(st.lists(_ids, min_size=1, max_size=5, unique=True))
            scores = sorted(
                draw(
                    st.lists(_scores, min_size=len(ids), max_size=len(ids))
                ),
                reverse=True,
            )
            for rank, (image_id, score) in enumerate(zip(ids, scores), 1):
                entries.append(
                    RunEntry(topic_id, stance, image_id, rank, score, "tag")
                )
    return entries


@given(_runs())
def test_run_round_trip_property(tmp_path_factory, entries):
    path = tmp_path_factory.mktemp("runs") / "run.txt"
    write_run(entries, path)
    assert read_run(path) == entries


def test_annotations_round_trip(tmp_path):
    annotations = [
        Annotation("img1", 1, "a", Label.PRO),
        Annotation("img1", 1, "b", Label.OFF_TOPIC),
        Annotation("img2", 2, "a", Label.NEUTRAL),
    ]
    path = tmp_path / "annotations.tsv"
    save_annotations(annotations, path)
    assert load_annotations(path) == annotations


def test_annotations_duplicate_rater_rejected(tmp_path):
    path = tmp_path / "annotations.tsv"
    path.write_text("img1\t1\ta\tpro\nimg1\t1\ta\tcon\n", encoding="utf-8")
    with pytest.raises(FormatError, match=":2"):
        load_annotations(path)


def test_label_parse_variants():
    assert Label.parse("OFF_TOPIC") is Label.OFF_TOPIC
    assert Label.parse("off-topic") is Label.OFF_TOPIC
    assert Label.parse("Pro") is Label.PRO
    with pytest.raises(ValueError):
        Label.parse("maybe")


def test_topic_invariants():
    with pytest.raises(ValueError):
        Topic(0, "q?")
    with pytest.raises(ValueError):
        Topic(1, "")
