"""Evaluation dataset: schema, validation, and loading.

A dataset file is tree-structured JSON:

.. code-block:: json

    {
      "embedder":  {"kind": "fixture", "dim": 64,
                    "rules": [{"keyword": "dues", "axis": 0}]},
      "documents": [{"source": "club-handbook", "text": "..."}],
      "questions": [
        {"id": "per-fen-01", "quality": "perception", "subtype": "fen-position",
         "prompt": "...", "payload": {"moves": ["e4"]},
         "expected": ["rnbqkbnr/..."], "grading": "exact"}
      ]
    }

``documents`` seed the vector store for memory/attention runs (ingested at a
fixed timestamp so runs are reproducible). ``embedder`` selects the embedding
used for those runs; it defaults to the hashing embedder.

Loading validates everything it can decide statically: ids are unique,
quality/subtype pairs are ones the runners know, the grading mode fits the
subtype, the key shape fits the grading mode, move lists replay legally,
ground-truth keys (final FEN, capture counts) agree with a fresh replay,
expected chunk ids exist in the chunked documents, and puzzle references
resolve. Violations raise :class:`DatasetError` naming the question id and
field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

from ..board import START_FEN, parse_fen
from ..engine import Puzzle
from ..moves import ChessError, GameRecord, capture_summary, replay
from ..store import FixtureEmbedder, HashingEmbedder, VectorStore, chunk_text
from .grading import GRADING_MODES

QUALITIES = ("perception", "memory", "attention", "reasoning", "anticipation")

#: quality -> allowed subtypes
SUBTYPES = {
    "perception": ("fen-position", "piece-status", "capture-count"),
    "memory": ("base-knowledge", "game-memory", "store-update"),
    "attention": ("rag-book", "off-domain"),
    "reasoning": ("puzzle",),
    "anticipation": ("puzzle",),
}

#: subtype -> allowed grading modes (None means the question is engine-driven
#: and carries no text-grading mode)
_GRADING_FOR_SUBTYPE = {
    "fen-position": ("exact",),
    "piece-status": ("normalized",),
    "capture-count": ("capture-eq1",),
    "base-knowledge": ("exact", "normalized"),
    "game-memory": ("exact", "normalized"),
    "store-update": ("exact", "normalized"),
    "rag-book": ("chunk-id-match",),
    "off-domain": ("normalized",),
    "puzzle": (None,),
}

#: timestamp used when ingesting dataset documents, fixed for reproducibility
DOCUMENT_TIMESTAMP = 0.0


class DatasetError(ValueError):
    """Schema or ground-truth violation, naming the offending question/field."""


@dataclass(frozen=True)
class Question:
    id: str
    quality: str
    subtype: str
    prompt: str
    payload: Mapping = field(default_factory=dict)
    expected: object = None
    grading: Optional[str] = None


@dataclass(frozen=True)
class Document:
    source: str
    text: str


@dataclass(frozen=True)
class EmbedderSpec:
    kind: str = "hashing"
    dim: int = 256
    rules: Tuple[Tuple[str, int], ...] = ()

    def build(self):
        if self.kind == "hashing":
            return HashingEmbedder(dim=self.dim)
        if self.kind == "fixture":
            return FixtureEmbedder(list(self.rules), dim=self.dim)
        raise DatasetError(f"embedder: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Dataset:
    questions: Tuple[Question, ...]
    documents: Tuple[Document, ...] = ()
    embedder_spec: EmbedderSpec = EmbedderSpec()

    def by_quality(self, quality: str) -> Tuple[Question, ...]:
        if quality not in QUALITIES:
            raise DatasetError(f"unknown quality {quality!r}")
        return tuple(q for q in self.questions if q.quality == quality)

    def build_store(self, *, threshold: Optional[float] = None) -> VectorStore:
        """A fresh vector store seeded with the dataset documents."""
        kwargs = {} if threshold is None else {"threshold": threshold}
        store = VectorStore(self.embedder_spec.build(), **kwargs)
        for doc in self.documents:
            store.ingest(doc.text, doc.source, timestamp=DOCUMENT_TIMESTAMP)
        return store

    def document_chunk_ids(self) -> Tuple[str, ...]:
        ids = []
        for doc in self.documents:
            ids.extend(
                c.id for c in chunk_text(doc.text, doc.source, timestamp=DOCUMENT_TIMESTAMP)
            )
        return tuple(ids)


def _fail(qid: Optional[str], field_name: str, message: str) -> DatasetError:
    where = f"question {qid!r}, field {field_name!r}" if qid else f"field {field_name!r}"
    return DatasetError(f"{where}: {message}")


def _want_str(value, qid, field_name) -> str:
    if not isinstance(value, str) or not value.strip():
        raise _fail(qid, field_name, f"expected a non-empty string, got {value!r}")
    return value


def _want_str_list(value, qid, field_name) -> Tuple[str, ...]:
    if not isinstance(value, list) or not value or any(not isinstance(v, str) or not v for v in value):
        raise _fail(qid, field_name, f"expected a non-empty list of non-empty strings, got {value!r}")
    return tuple(value)


def _want_int(value, qid, field_name) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise _fail(qid, field_name, f"expected a non-negative integer, got {value!r}")
    return value


def _replay_moves(moves: Sequence[str], start_fen: Optional[str], qid: str):
    try:
        return replay(GameRecord(moves=tuple(moves), start_fen=start_fen))
    except ChessError as exc:
        raise _fail(qid, "payload.moves", f"move list does not replay: {exc}")


def _validate_question(question: Question, chunk_ids: frozenset, puzzle_ids: Optional[frozenset]) -> None:
    qid = question.id
    if question.quality not in QUALITIES:
        raise _fail(qid, "quality", f"unknown quality {question.quality!r}")
    allowed = SUBTYPES[question.quality]
    if question.subtype not in allowed:
        raise _fail(qid, "subtype", f"{question.subtype!r} is not valid for {question.quality!r} (allowed: {', '.join(allowed)})")
    modes = _GRADING_FOR_SUBTYPE[question.subtype]
    if question.grading not in modes:
        wanted = ", ".join(str(m) for m in modes)
        raise _fail(qid, "grading", f"{question.grading!r} is not valid for subtype {question.subtype!r} (allowed: {wanted})")
    if question.grading is not None and question.grading not in GRADING_MODES:
        raise _fail(qid, "grading", f"unsupported mode {question.grading!r}")

    payload = question.payload
    subtype = question.subtype

    if subtype == "fen-position":
        moves = _want_str_list(payload.get("moves"), qid, "payload.moves")
        result = _replay_moves(moves, payload.get("start_fen"), qid)
        key = _want_str_list(question.expected, qid, "expected")
        if result.final.fen() not in key:
            raise _fail(qid, "expected", f"key does not contain the replayed final FEN {result.final.fen()!r}")
    elif subtype == "piece-status":
        fen = _want_str(payload.get("fen"), qid, "payload.fen")
        try:
            parse_fen(fen)
        except ChessError as exc:
            raise _fail(qid, "payload.fen", str(exc))
        _want_str_list(question.expected, qid, "expected")
    elif subtype == "capture-count":
        moves = _want_str_list(payload.get("moves"), qid, "payload.moves")
        result_summary = None
        try:
            result_summary = capture_summary(GameRecord(moves=tuple(moves), start_fen=payload.get("start_fen")))
        except ChessError as exc:
            raise _fail(qid, "payload.moves", f"move list does not replay: {exc}")
        truth = result_summary.total_captures
        expected = _want_int(question.expected, qid, "expected")
        if expected != truth:
            raise _fail(qid, "expected", f"capture count {expected} disagrees with replay ({truth})")
    elif subtype in ("base-knowledge", "game-memory"):
        _want_str_list(question.expected, qid, "expected")
        if subtype == "game-memory" and payload.get("moves") is not None:
            _replay_moves(_want_str_list(payload.get("moves"), qid, "payload.moves"), payload.get("start_fen"), qid)
    elif subtype == "store-update":
        _want_str_list(payload.get("updates"), qid, "payload.updates")
        _want_str_list(question.expected, qid, "expected")
    elif subtype == "rag-book":
        key = _want_str_list(question.expected, qid, "expected")
        missing = [cid for cid in key if cid not in chunk_ids]
        if missing:
            raise _fail(qid, "expected", f"chunk ids not present in dataset documents: {', '.join(missing)}")
    elif subtype == "off-domain":
        _want_str_list(question.expected, qid, "expected")
    elif subtype == "puzzle":
        pid = _want_str(payload.get("puzzle_id"), qid, "payload.puzzle_id")
        if question.expected is not None:
            raise _fail(qid, "expected", "puzzle questions carry no answer key (the reference solution is the key)")
        if puzzle_ids is not None and pid not in puzzle_ids:
            raise _fail(qid, "payload.puzzle_id", f"unknown puzzle {pid!r}")


def _parse_embedder(raw, chunk_source: str = "embedder") -> EmbedderSpec:
    if raw is None:
        return EmbedderSpec()
    if not isinstance(raw, dict):
        raise _fail(None, chunk_source, f"expected an object, got {raw!r}")
    kind = raw.get("kind", "hashing")
    if kind not in ("hashing", "fixture"):
        raise _fail(None, f"{chunk_source}.kind", f"unknown kind {kind!r}")
    dim = raw.get("dim", 256 if kind == "hashing" else 64)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim <= 0:
        raise _fail(None, f"{chunk_source}.dim", f"expected a positive integer, got {dim!r}")
    rules: list = []
    if kind == "fixture":
        for i, rule in enumerate(raw.get("rules", [])):
            if not isinstance(rule, dict) or "keyword" not in rule or "axis" not in rule:
                raise _fail(None, f"{chunk_source}.rules[{i}]", f"expected {{keyword, axis}}, got {rule!r}")
            rules.append((str(rule["keyword"]), int(rule["axis"])))
    spec = EmbedderSpec(kind=kind, dim=dim, rules=tuple(rules))
    spec.build()  # surface bad rules/dims at load time
    return spec


def load_dataset(path, *, puzzles: Optional[Sequence[Puzzle]] = None) -> Dataset:
    """Parse and validate a dataset file.

    When ``puzzles`` is given, puzzle references are checked against it.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DatasetError(f"{path}: top level must be an object")
    rows = raw.get("questions")
    if not isinstance(rows, list) or not rows:
        raise DatasetError(f"{path}: 'questions' must be a non-empty list")

    documents = []
    for i, doc in enumerate(raw.get("documents", [])):
        if not isinstance(doc, dict):
            raise _fail(None, f"documents[{i}]", f"expected an object, got {doc!r}")
        documents.append(
            Document(
                source=_want_str(doc.get("source"), None, f"documents[{i}].source"),
                text=_want_str(doc.get("text"), None, f"documents[{i}].text"),
            )
        )
    seen_sources = set()
    for doc in documents:
        if doc.source in seen_sources:
            raise DatasetError(f"duplicate document source {doc.source!r}")
        seen_sources.add(doc.source)

    embedder_spec = _parse_embedder(raw.get("embedder"))

    chunk_ids = frozenset(
        c.id
        for doc in documents
        for c in chunk_text(doc.text, doc.source, timestamp=DOCUMENT_TIMESTAMP)
    )
    puzzle_ids = None if puzzles is None else frozenset(p.id for p in puzzles)

    questions = []
    seen = set()
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise DatasetError(f"questions[{i}]: expected an object, got {row!r}")
        unknown = set(row) - {"id", "quality", "subtype", "prompt", "payload", "expected", "grading"}
        if unknown:
            raise DatasetError(f"questions[{i}]: unknown fields: {', '.join(sorted(unknown))}")
        qid = _want_str(row.get("id"), None, f"questions[{i}].id")
        if qid in seen:
            raise DatasetError(f"duplicate question id {qid!r}")
        seen.add(qid)
        payload = row.get("payload") or {}
        if not isinstance(payload, dict):
            raise _fail(qid, "payload", f"expected an object, got {payload!r}")
        question = Question(
            id=qid,
            quality=_want_str(row.get("quality"), qid, "quality"),
            subtype=_want_str(row.get("subtype"), qid, "subtype"),
            prompt=_want_str(row.get("prompt"), qid, "prompt"),
            payload=payload,
            expected=row.get("expected"),
            grading=row.get("grading"),
        )
        _validate_question(question, chunk_ids, puzzle_ids)
        questions.append(question)

    return Dataset(
        questions=tuple(questions),
        documents=tuple(documents),
        embedder_spec=embedder_spec,
    )
