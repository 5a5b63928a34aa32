"""Language-model backends and prompt plumbing.

Two backends share one call shape, ``complete(prompt, system=...)``:

* ``MockBackend`` answers from a pattern file, longest matched pattern first,
  so offline runs are fully deterministic.
* ``RemoteChatBackend`` speaks the common chat-completions JSON shape over
  HTTP with bounded retries. Credentials are read from a named environment
  variable at call time and never appear in config files.

Prompt templates are plain ``str.format`` strings; rendering fails loudly,
listing every missing slot. Retrieved context blocks are joined with a
``-----`` divider line. Model output is parsed with two tolerant helpers:
``extract_answer`` takes whatever follows the last ``<ANSWER>:`` marker, and
``extract_move`` returns the first whitespace token that is a legal move in
the given position (SAN or coordinate form).
"""

from __future__ import annotations

import json
import os
import string
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import httpx

from .board import BoardState, ChessError
from .moves import Move, apply_san, apply_uci, legal_moves

ANSWER_MARKER = "<ANSWER>:"
CONTEXT_DELIMITER = "-----"


class LlmError(RuntimeError):
    pass


class MissingSlotError(LlmError):
    def __init__(self, template_name: str, missing: Sequence[str]):
        self.template_name = template_name
        self.missing = tuple(sorted(missing))
        super().__init__(f"template {template_name!r} is missing slots: {', '.join(self.missing)}")


@dataclass(frozen=True)
class BackendSpec:
    """How to reach a model. ``kind`` is "mock" or "remote-chat"."""

    kind: str
    model: str = "mock-1"
    endpoint: Optional[str] = None
    credentials_env: Optional[str] = None
    pattern_file: Optional[str] = None
    temperature: float = 0.0
    max_tokens: int = 1024

    @classmethod
    def from_dict(cls, raw: dict) -> "BackendSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise LlmError(f"unknown backend fields: {', '.join(sorted(unknown))}")
        return cls(**raw)


@dataclass(frozen=True)
class Completion:
    text: str
    backend: str
    model: str


def render_prompt(template: str, slots: dict, *, template_name: str = "template") -> str:
    """Fill a ``str.format`` template; unknown slots in ``slots`` are ignored,
    absent ones raise ``MissingSlotError`` with the full list."""
    needed = {name for _, name, _, _ in string.Formatter().parse(template) if name}
    missing = needed - set(slots)
    if missing:
        raise MissingSlotError(template_name, missing)
    return template.format(**{name: slots[name] for name in needed})


def load_templates(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    templates = raw.get("templates", raw)
    if not isinstance(templates, dict) or not templates:
        raise LlmError(f"{path}: expected a non-empty mapping of template names")
    for name, text in templates.items():
        if not isinstance(text, str) or not text.strip():
            raise LlmError(f"{path}: template {name!r} is empty")
    return dict(templates)


def format_context(texts: Sequence[str]) -> str:
    """Join retrieved passages with the divider line used in prompts."""
    return f"\n{CONTEXT_DELIMITER}\n".join(texts)


class MockBackend:
    """Deterministic canned model. The pattern file is JSON:

        {"patterns": [{"contains": "...", "response": "..."}, ...],
         "default": "..."}

    The prompt is matched case-insensitively against each ``contains``
    string; the longest matching pattern wins, file order breaking ties.
    """

    name = "mock"

    def __init__(self, patterns: Sequence[tuple], default: str, *, model: str = "mock-1"):
        self.model = model
        self.default = default
        indexed = [(p.lower(), r, i) for i, (p, r) in enumerate(patterns)]
        for contains, _, i in indexed:
            if not contains:
                raise LlmError(f"pattern {i} has an empty 'contains' string")
        self._patterns = sorted(indexed, key=lambda row: (-len(row[0]), row[2]))
        self.calls = 0

    @classmethod
    def from_file(cls, path, *, model: str = "mock-1") -> "MockBackend":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        try:
            patterns = [(row["contains"], row["response"]) for row in raw["patterns"]]
            default = raw["default"]
        except (KeyError, TypeError) as exc:
            raise LlmError(f"{path}: bad pattern file: {exc}") from None
        return cls(patterns, default, model=model)

    def complete(self, prompt: str, *, system: Optional[str] = None) -> Completion:
        self.calls += 1
        haystack = prompt.lower() if system is None else f"{system}\n{prompt}".lower()
        for contains, response, _ in self._patterns:
            if contains in haystack:
                return Completion(text=response, backend=self.name, model=self.model)
        return Completion(text=self.default, backend=self.name, model=self.model)


class RemoteChatBackend:
    """Chat-completions HTTP client. Transient failures (transport errors
    and 5xx) are retried up to ``retries`` times with exponential backoff;
    4xx responses fail immediately."""

    name = "remote-chat"

    def __init__(
        self,
        endpoint: str,
        model: str,
        *,
        credentials_env: Optional[str] = None,
        temperature: float = 0.0,
        max_tokens: int = 1024,
        timeout: float = 60.0,
        retries: int = 3,
        transport=None,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.credentials_env = credentials_env
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.retries = retries
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.credentials_env:
            token = os.environ.get(self.credentials_env)
            if not token:
                raise LlmError(f"credentials env var {self.credentials_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str, *, system: Optional[str] = None) -> Completion:
        messages = []
        if system:
            messages.append({"role": "system", "content": system})
        messages.append({"role": "user", "content": prompt})
        payload = {
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        last_error: Optional[str] = None
        for attempt in range(self.retries):
            if attempt:
                self._sleep(0.5 * 2 ** (attempt - 1))
            try:
                response = self._client.post(self.endpoint, json=payload, headers=self._headers())
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                continue
            if response.status_code >= 500:
                last_error = f"server error {response.status_code}"
                continue
            if response.status_code >= 400:
                raise LlmError(f"backend rejected request: {response.status_code} {response.text[:200]}")
            try:
                text = response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise LlmError(f"malformed backend response: {exc}") from None
            return Completion(text=text, backend=self.name, model=self.model)
        raise LlmError(f"backend unreachable after {self.retries} attempts: {last_error}")


def build_backend(spec: BackendSpec):
    if spec.kind == "mock":
        if not spec.pattern_file:
            raise LlmError("mock backend needs a pattern_file")
        return MockBackend.from_file(spec.pattern_file, model=spec.model)
    if spec.kind == "remote-chat":
        if not spec.endpoint:
            raise LlmError("remote-chat backend needs an endpoint")
        return RemoteChatBackend(
            spec.endpoint,
            spec.model,
            credentials_env=spec.credentials_env,
            temperature=spec.temperature,
            max_tokens=spec.max_tokens,
        )
    raise LlmError(f"unknown backend kind {spec.kind!r}")


def extract_answer(text: str) -> str:
    """Text after the last ``<ANSWER>:`` marker, stripped; the whole text
    (stripped) when no marker is present. Applying it twice is a no-op."""
    index = text.rfind(ANSWER_MARKER)
    if index < 0:
        return text.strip()
    return text[index + len(ANSWER_MARKER) :].strip()


def extract_move(text: str, state: BoardState) -> Optional[Move]:
    """First whitespace-separated token that names a legal move in ``state``,
    read as coordinate notation first, then SAN. Punctuation that can trail
    prose ("...Qxf7#.") is tolerated."""
    legal = legal_moves(state)
    if not legal:
        return None
    for raw in text.split():
        token = raw.strip(",.;:!?()[]\"'")
        if not token:
            continue
        for parser in (apply_uci, apply_san):
            try:
                _, move = parser(state, token)
                return move
            except ChessError:
                continue
    return None
