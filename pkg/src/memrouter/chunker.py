"""Recursive character splitting of documents into overlapping chunks.

The splitter works on character spans of the original body, never on
copied fragments, so every chunk is literally ``body[start:end]`` and the
document reconstructs exactly from the spans.  Splitting descends a fixed
separator hierarchy (paragraph break, line break, sentence end, space,
hard cut) only as far as needed to get pieces under the size limit, then
greedily packs pieces into windows and backs up whole pieces, up to the
configured overlap, so consecutive chunks share trailing context.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .vector_store import DocumentChunk

SEPARATORS = ("\n\n", "\n", ". ", " ", "")


@dataclass
class ChunkerConfig:
    chunk_size: int = 512
    overlap: int = 50

    def __post_init__(self):
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be positive")
        if not 0 <= self.overlap < self.chunk_size:
            raise ValueError("need 0 <= overlap < chunk_size")


@dataclass
class RawDocument:
    doc_id: str
    title: str
    body: str


def _atom_spans(body: str, start: int, end: int, level: int, size: int, out: list) -> None:
    """Append minimal spans, each <= size, splitting only where needed.

    Separators stay attached to the piece they terminate, which keeps the
    spans contiguous and the reconstruction exact.
    """
    if end - start <= size:
        out.append((start, end))
        return
    sep = SEPARATORS[level]
    if sep == "":
        for i in range(start, end):
            out.append((i, i + 1))
        return
    cursor = start
    while cursor < end:
        pos = body.find(sep, cursor, end)
        piece_end = end if pos == -1 else pos + len(sep)
        if piece_end - cursor <= size:
            out.append((cursor, piece_end))
        else:
            _atom_spans(body, cursor, piece_end, level + 1, size, out)
        cursor = piece_end


def split_spans(body: str, cfg: ChunkerConfig) -> list[tuple[int, int]]:
    """Chunk boundaries as (start, end) spans over ``body``.

    Guarantees: every span length <= chunk_size, spans cover every
    character, starts strictly increase, and consecutive spans share at
    most ``overlap`` characters.
    """
    if not body:
        return []
    atoms: list[tuple[int, int]] = []
    _atom_spans(body, 0, len(body), 0, cfg.chunk_size, atoms)
    spans: list[tuple[int, int]] = []
    i = 0
    n = len(atoms)
    while i < n:
        start = atoms[i][0]
        j = i
        while j < n and atoms[j][1] - start <= cfg.chunk_size:
            j += 1
        end = atoms[j - 1][1]
        spans.append((start, end))
        if j >= n:
            break
        # Back up whole atoms into the next window: stay within the overlap
        # budget, keep the first uncovered atom fitting, and always advance.
        m = j
        while (
            m - 1 > i
            and end - atoms[m - 1][0] <= cfg.overlap
            and atoms[j][1] - atoms[m - 1][0] <= cfg.chunk_size
        ):
            m -= 1
        i = m
    return spans


def split_document(doc: RawDocument, cfg: ChunkerConfig | None = None) -> list[DocumentChunk]:
    """Split one document body into ordered chunks with ids ``{doc_id}#{i}``."""
    cfg = cfg or ChunkerConfig()
    return [
        DocumentChunk(chunk_id=f"{doc.doc_id}#{i}", doc_id=doc.doc_id, text=doc.body[s:e])
        for i, (s, e) in enumerate(split_spans(doc.body, cfg))
    ]


def load_corpus(directory: str | Path) -> list[RawDocument]:
    """Read every ``*.txt`` in a directory as one document.

    The filename (without extension) is the doc_id and the first line is
    the title; the rest of the file is the body.  Files load in name order
    so downstream chunk numbering is stable.
    """
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    docs = []
    for path in sorted(root.glob("*.txt")):
        text = path.read_text(encoding="utf-8")
        title, _, rest = text.partition("\n")
        docs.append(RawDocument(doc_id=path.stem, title=title.strip(), body=rest.strip("\n")))
    return docs


def split_corpus(docs: list[RawDocument], cfg: ChunkerConfig | None = None) -> list[DocumentChunk]:
    """Split many documents, concatenating their chunk lists in doc order."""
    cfg = cfg or ChunkerConfig()
    out: list[DocumentChunk] = []
    for doc in docs:
        out.extend(split_document(doc, cfg))
    return out
