"""Keyword router: dispatches a user query to the chess engine, the live
store-update path, retrieval-augmented Q&A, or a direct model answer.

Precedence is fixed: the ``__update__store__`` prefix always wins; then
chess keywords or an embedded FEN; then, when the store holds anything and
the query reads as a question, retrieval Q&A; otherwise a direct answer.
Routing is total and deterministic for a given store state.

Keyword lists and chain-of-thought rewrite rules are configuration data
loaded from a JSON file (packaged defaults under ``data/keywords.json``),
not code. The chain-of-thought rewriter wraps a matching query in a
step-by-step instruction template that always contains the original query
verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Optional, Sequence

from .board import ChessError, parse_fen
from .engine import BestMoveResult, EngineError, EngineSession
from .llm import LlmError, extract_answer, format_context, load_templates, render_prompt
from .store import StoreError, VectorStore

UPDATE_PREFIX = "__update__store__"
DEFAULT_SEARCH_K = 4


class RouterError(RuntimeError):
    pass


class RouteKind(str, Enum):
    CHESS_ENGINE = "chess-engine"
    STORE_UPDATE = "store-update"
    RAG_QA = "rag-qa"
    DIRECT_QA = "direct-qa"


@dataclass(frozen=True)
class Route:
    kind: RouteKind
    payload: str
    fen: Optional[str] = None
    note_text: Optional[str] = None

    def __post_init__(self):
        if self.fen is not None and self.kind is not RouteKind.CHESS_ENGINE:
            raise ValueError("fen is only meaningful on the chess-engine route")
        if self.note_text is not None and self.kind is not RouteKind.STORE_UPDATE:
            raise ValueError("note_text is only meaningful on the store-update route")


@dataclass(frozen=True)
class CotQuery:
    original: str
    rewritten: str
    rule_id: Optional[str]

    def __post_init__(self):
        if self.original not in self.rewritten:
            raise ValueError("rewritten query must contain the original verbatim")


@dataclass(frozen=True)
class AnswerRecord:
    """One routed answer: what was asked, where it went, what came back,
    and exactly which chunks (if any) were injected as context."""

    query: str
    route: Route
    answer: str
    chunk_ids: tuple = ()
    flags: tuple = ()
    engine_move: Optional[BestMoveResult] = None
    cot_rule: Optional[str] = None


_TRAILING_PUNCT = "?!.,;:)\"'"
_LEADING_PUNCT = "(\"'"


def detect_fen(text: str) -> Optional[str]:
    """The first whitespace-delimited FEN in ``text``: a token with seven
    rank separators starting a 6- or 4-field candidate that parses and
    validates. The longest valid field span at that token wins. Trailing
    sentence punctuation is tolerated."""
    tokens = [t.strip(_TRAILING_PUNCT).lstrip(_LEADING_PUNCT) for t in text.split()]
    for i, token in enumerate(tokens):
        if token.count("/") != 7:
            continue
        for span in (6, 4):
            candidate = " ".join(tokens[i : i + span])
            if len(tokens) - i < span:
                continue
            try:
                parse_fen(candidate)
            except ChessError:
                continue
            return candidate
    return None


class QueryAnalyzer:
    """Routing and rewrite rules, loaded from configuration."""

    def __init__(self, chess_keywords: Sequence[str], question_words: Sequence[str], cot_rules: Sequence[dict]):
        self.chess_keywords = tuple(kw.lower() for kw in chess_keywords)
        self.question_words = frozenset(w.lower() for w in question_words)
        self.cot_rules = tuple(
            (rule["id"], tuple(kw.lower() for kw in rule["keywords"]), rule["template"])
            for rule in cot_rules
        )
        for rule_id, keywords, template in self.cot_rules:
            if "{query}" not in template:
                raise ValueError(f"cot rule {rule_id!r}: template must contain {{query}}")

    @classmethod
    def from_file(cls, path) -> "QueryAnalyzer":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(raw["chess_keywords"], raw["question_words"], raw["cot_rules"])

    @classmethod
    def default(cls) -> "QueryAnalyzer":
        raw = json.loads(resources.files("cogchess").joinpath("data/keywords.json").read_text("utf-8"))
        return cls(raw["chess_keywords"], raw["question_words"], raw["cot_rules"])

    def is_question(self, text: str) -> bool:
        stripped = text.strip()
        if stripped.endswith("?"):
            return True
        first = stripped.split(maxsplit=1)[0].lower().strip(_TRAILING_PUNCT) if stripped else ""
        return first in self.question_words

    def route(self, query: str, *, store_has_content: bool = False) -> Route:
        text = query.strip()
        if text.startswith(UPDATE_PREFIX):
            note = text[len(UPDATE_PREFIX) :].strip()
            return Route(RouteKind.STORE_UPDATE, payload=note, note_text=note)
        lowered = text.lower()
        fen = detect_fen(text)
        if fen is not None or any(kw in lowered for kw in self.chess_keywords):
            return Route(RouteKind.CHESS_ENGINE, payload=text, fen=fen)
        if store_has_content and self.is_question(text):
            return Route(RouteKind.RAG_QA, payload=text)
        return Route(RouteKind.DIRECT_QA, payload=text)

    def to_cot(self, query: str) -> CotQuery:
        lowered = query.lower()
        for rule_id, keywords, template in self.cot_rules:
            if any(kw in lowered for kw in keywords):
                return CotQuery(original=query, rewritten=template.format(query=query), rule_id=rule_id)
        return CotQuery(original=query, rewritten=query, rule_id=None)


def default_templates() -> dict:
    raw = json.loads(resources.files("cogchess").joinpath("data/templates.json").read_text("utf-8"))
    return raw["templates"]


class Router:
    """Executes routed queries against the configured services: a model
    backend (required), and optionally a vector store and an engine session.
    Service failures surface as ``RouterError`` naming the route."""

    def __init__(
        self,
        backend,
        *,
        analyzer: Optional[QueryAnalyzer] = None,
        store: Optional[VectorStore] = None,
        engine: Optional[EngineSession] = None,
        templates: Optional[dict] = None,
        search_k: int = DEFAULT_SEARCH_K,
    ):
        self.backend = backend
        self.analyzer = analyzer or QueryAnalyzer.default()
        self.store = store
        self.engine = engine
        self.templates = templates or default_templates()
        self.search_k = search_k

    def _render(self, name: str, **slots) -> str:
        if name not in self.templates:
            raise RouterError(f"no template named {name!r}")
        return render_prompt(self.templates[name], slots, template_name=name)

    def answer(self, query: str) -> AnswerRecord:
        store_has_content = self.store is not None and len(self.store) > 0
        route = self.analyzer.route(query, store_has_content=store_has_content)
        try:
            if route.kind is RouteKind.STORE_UPDATE:
                return self._store_update(query, route)
            if route.kind is RouteKind.CHESS_ENGINE:
                return self._chess(query, route)
            if route.kind is RouteKind.RAG_QA:
                return self._rag(query, route)
            return self._direct(query, route)
        except (EngineError, StoreError, LlmError, ChessError) as exc:
            raise RouterError(f"{route.kind.value} route failed for {query!r}: {exc}") from exc

    def _store_update(self, query: str, route: Route) -> AnswerRecord:
        if not route.note_text:
            return AnswerRecord(query, route, "Nothing to store.", flags=("empty-note",))
        if self.store is None:
            raise RouterError("store-update route needs a vector store")
        chunk = self.store.add_live_note(route.note_text)
        return AnswerRecord(query, route, f"Stored: {route.note_text}", chunk_ids=(chunk.id,))

    def _chess(self, query: str, route: Route) -> AnswerRecord:
        if route.fen is None:
            record = self._direct(query, Route(RouteKind.DIRECT_QA, payload=route.payload))
            return AnswerRecord(query, route, record.answer, flags=("no-fen",), cot_rule=record.cot_rule)
        if self.engine is None:
            raise RouterError("chess-engine route needs an engine session")
        result = self.engine.best_move(route.fen)
        explanation = self.backend.complete(
            self._render("chess_explain", fen=route.fen, san=result.san, uci=result.uci_move)
        ).text
        answer = f"Best move: {result.san} ({result.uci_move}). {extract_answer(explanation)}"
        return AnswerRecord(query, route, answer, engine_move=result)

    def _rag(self, query: str, route: Route) -> AnswerRecord:
        hits = self.store.search(query, self.search_k)
        if not hits:
            record = self._direct(query, Route(RouteKind.DIRECT_QA, payload=route.payload))
            return AnswerRecord(query, route, record.answer, flags=("no-context",), cot_rule=record.cot_rule)
        cot = self.analyzer.to_cot(query)
        prompt = self._render(
            "rag_qa",
            context=format_context([hit.chunk.text for hit in hits]),
            question=cot.rewritten,
        )
        completion = self.backend.complete(prompt)
        return AnswerRecord(
            query,
            route,
            extract_answer(completion.text),
            chunk_ids=tuple(hit.chunk.id for hit in hits),
            cot_rule=cot.rule_id,
        )

    def _direct(self, query: str, route: Route) -> AnswerRecord:
        cot = self.analyzer.to_cot(query)
        prompt = self._render("direct_qa", question=cot.rewritten)
        completion = self.backend.complete(prompt)
        return AnswerRecord(query, route, extract_answer(completion.text), cot_rule=cot.rule_id)
