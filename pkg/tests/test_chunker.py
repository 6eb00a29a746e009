"""Splitter tests: pinned cases plus linear-scan oracle properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memrouter.chunker import (
    ChunkerConfig,
    RawDocument,
    load_corpus,
    split_corpus,
    split_document,
    split_spans,
)


def _scan_check(body, cfg, spans):
    """Linear-scan oracle over produced spans: size, coverage, order, overlap."""
    assert spans[0][0] == 0
    assert spans[-1][1] == len(body)
    prev_start, prev_end = None, 0
    for start, end in spans:
        assert end - start <= cfg.chunk_size
        assert start < end
        if prev_start is not None:
            assert start > prev_start  # document order, strict progress
            assert end > prev_end
            assert start <= prev_end  # no gap
            assert prev_end - start <= cfg.overlap
        prev_start, prev_end = start, end
    # Dropping each span's leading overlap reconstructs the body exactly.
    rebuilt = "".join(body[max(s, p):e] for (s, e), p in zip(spans, [0] + [e for _, e in spans]))
    assert rebuilt == body


def test_small_body_is_one_chunk():
    body = "x" * 100
    doc = RawDocument("d", "t", body)
    chunks = split_document(doc, ChunkerConfig(512, 50))
    assert len(chunks) == 1
    assert chunks[0].text == body
    assert chunks[0].chunk_id == "d#0"
    assert chunks[0].embedding is None


def test_empty_body_no_chunks():
    assert split_document(RawDocument("d", "t", ""), ChunkerConfig()) == []


def test_no_separator_1024_exact_overlap():
    # No spaces, newlines, or ". " anywhere: forces the hard-cut level.
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789"
    body = "".join(alphabet[i % len(alphabet)] for i in range(1024))
    cfg = ChunkerConfig(512, 50)
    spans = split_spans(body, cfg)
    _scan_check(body, cfg, spans)
    covered = np.zeros(1024, dtype=bool)
    for start, end in spans:
        assert end - start <= 512
        covered[start:end] = True
    assert covered.all()
    for (_, prev_end), (start, _) in zip(spans, spans[1:]):
        assert prev_end - start == 50  # hard cuts back up exactly the budget
    chunks = split_document(RawDocument("d", "t", body), cfg)
    assert [c.text for c in chunks] == [body[s:e] for s, e in spans]


def test_chunk_ids_are_doc_and_index():
    body = ("para one. " * 30 + "\n\n") * 4
    chunks = split_document(RawDocument("guide", "t", body), ChunkerConfig(128, 20))
    assert len(chunks) > 2
    assert [c.chunk_id for c in chunks] == [f"guide#{i}" for i in range(len(chunks))]
    assert all(c.doc_id == "guide" for c in chunks)


def test_paragraphs_pack_without_mid_word_cuts():
    body = "Alpha beta gamma.\n\nDelta epsilon zeta.\n\nEta theta iota kappa."
    chunks = split_document(RawDocument("d", "t", body), ChunkerConfig(40, 10))
    # With 40-char windows each paragraph stays intact.
    assert chunks[0].text.startswith("Alpha")
    for c in chunks:
        assert len(c.text) <= 40


def test_config_validation():
    with pytest.raises(ValueError):
        ChunkerConfig(0, 0)
    with pytest.raises(ValueError):
        ChunkerConfig(100, 100)
    with pytest.raises(ValueError):
        ChunkerConfig(100, -1)


# Consecutive newlines in the alphabet produce paragraph breaks naturally.
_BODY = st.text(alphabet="ab .\n", min_size=0, max_size=1500)


@settings(max_examples=80, deadline=None)
@given(_BODY)
def test_invariants_hold_for_any_body(body):
    cfg = ChunkerConfig(64, 10)
    spans = split_spans(body, cfg)
    if not body:
        assert spans == []
        return
    _scan_check(body, cfg, spans)


@settings(max_examples=40, deadline=None)
@given(_BODY, st.integers(8, 96), st.integers(0, 7))
def test_invariants_hold_for_any_config(body, size, overlap):
    cfg = ChunkerConfig(size, min(overlap, size - 1))
    spans = split_spans(body, cfg)
    if not body:
        assert spans == []
        return
    _scan_check(body, cfg, spans)


def test_load_corpus(tmp_path):
    (tmp_path / "b_doc.txt").write_text("Second Title\n\nBody two.\n", encoding="utf-8")
    (tmp_path / "a_doc.txt").write_text("First Title\nLine one.\nLine two.\n", encoding="utf-8")
    (tmp_path / "notes.md").write_text("ignored", encoding="utf-8")
    docs = load_corpus(tmp_path)
    assert [d.doc_id for d in docs] == ["a_doc", "b_doc"]
    assert docs[0].title == "First Title"
    assert docs[0].body == "Line one.\nLine two."
    assert docs[1].body == "Body two."
    chunks = split_corpus(docs, ChunkerConfig(512, 50))
    assert [c.chunk_id for c in chunks] == ["a_doc#0", "b_doc#0"]


def test_load_corpus_missing_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "nope")
