"""Retrieval store: character chunking, deterministic embedders, and a
linear-scan cosine index.

Chunks are keyed two ways. The id is a stable content hash of
(source, offset, text) and is what search results and answer records carry.
Upserts replace by (source, offset) slot with newest-timestamp-wins, so
re-ingesting a changed document swaps texts without growing the store.

Live notes land under the reserved source "__live_update__", appended as a
virtual document that grows with each note, which keeps every note in its
own slot.

All vectors are unit-normalized float32 at ingest; similarities are computed
in float64. The index is a brute-force scan: results ordered by similarity
descending, ties broken by ascending chunk id, then filtered at the
threshold (default 0.7, inclusive).
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import httpx
import numpy as np

DEFAULT_CHUNK_SIZE = 1000
DEFAULT_OVERLAP = 100
DEFAULT_THRESHOLD = 0.7
LIVE_SOURCE = "__live_update__"

_SNAPSHOT_FORMAT = "cogchess-store"
_SNAPSHOT_VERSION = 1


class StoreError(ValueError):
    pass


class DimensionMismatchError(StoreError):
    pass


class SnapshotError(StoreError):
    pass


@dataclass(frozen=True)
class Chunk:
    id: str
    text: str
    source: str
    char_offset: int
    timestamp: float


@dataclass(frozen=True)
class SearchHit:
    chunk: Chunk
    similarity: float


def chunk_id(source: str, char_offset: int, text: str) -> str:
    digest = hashlib.sha256(f"{source}\x00{char_offset}\x00{text}".encode("utf-8"))
    return digest.hexdigest()[:16]


def chunk_text(
    text: str,
    source: str,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    timestamp: float = 0.0,
    base_offset: int = 0,
) -> list:
    """Fixed-stride character chunks. Chunk k starts at k*(chunk_size-overlap);
    the last chunk is whatever remains once a chunk reaches the end of text."""
    if chunk_size <= 0:
        raise StoreError(f"chunk_size must be > 0, got {chunk_size}")
    if not 0 <= overlap < chunk_size:
        raise StoreError(f"overlap must be in [0, chunk_size), got {overlap}")
    if not text:
        return []
    stride = chunk_size - overlap
    chunks = []
    offset = 0
    while True:
        piece = text[offset : offset + chunk_size]
        absolute = base_offset + offset
        chunks.append(Chunk(chunk_id(source, absolute, piece), piece, source, absolute, timestamp))
        if offset + chunk_size >= len(text):
            return chunks
        offset += stride


def _unit_rows(vectors, expected_dim: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise StoreError(f"expected a 2-d vector batch, got shape {arr.shape}")
    if expected_dim is not None and arr.shape[1] != expected_dim:
        raise DimensionMismatchError(f"vector dim {arr.shape[1]} != store dim {expected_dim}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0.0):
        raise StoreError("zero vector cannot be normalized")
    return (arr / norms[:, None]).astype(np.float32)


class HashingEmbedder:
    """Deterministic feature hashing of character n-grams. No model files,
    no network, identical bits on every run."""

    name = "hashing"

    def __init__(self, dim: int = 256, ngram: int = 3):
        if dim < 2:
            raise StoreError("dim must be >= 2")
        self.dim = dim
        self.ngram = ngram

    def _features(self, text: str):
        lowered = text.lower()
        if len(lowered) < self.ngram:
            return [lowered] if lowered else []
        return [lowered[i : i + self.ngram] for i in range(len(lowered) - self.ngram + 1)]

    def embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        features = self._features(text)
        if not features:
            vec[0] = 1.0
            return vec
        for gram in features:
            h = int.from_bytes(hashlib.md5(gram.encode("utf-8")).digest(), "big")
            sign = 1.0 if (h >> 8) & 1 else -1.0
            vec[h % self.dim] += sign
        if not vec.any():
            vec[0] = 1.0
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed_one(t) for t in texts]) if texts else np.zeros((0, self.dim))


class FixtureEmbedder:
    """Keyword-planted embedder for deterministic retrieval fixtures.

    Texts matching a rule keyword map onto that rule's axis in the lower
    half of the space; texts matching nothing fall back to hashed n-grams
    confined to the upper half, which makes them exactly orthogonal to every
    planted axis. Keyword matching is case-insensitive substring."""

    name = "fixture"

    def __init__(self, rules, dim: int = 64):
        if dim < 4 or dim % 2:
            raise StoreError("fixture embedder dim must be even and >= 4")
        self.dim = dim
        self.rules = [(str(kw).lower(), int(axis)) for kw, axis in rules]
        for keyword, axis in self.rules:
            if not keyword:
                raise StoreError("empty fixture keyword")
            if not 0 <= axis < dim // 2:
                raise StoreError(f"fixture axis {axis} outside [0, {dim // 2})")
        self._fallback = HashingEmbedder(dim=dim // 2)

    @classmethod
    def from_file(cls, path) -> "FixtureEmbedder":
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        rules = [(rule["keyword"], rule["axis"]) for rule in spec["rules"]]
        return cls(rules, dim=spec.get("dim", 64))

    def embed_one(self, text: str) -> np.ndarray:
        lowered = text.lower()
        vec = np.zeros(self.dim, dtype=np.float64)
        axes = sorted({axis for keyword, axis in self.rules if keyword in lowered})
        if axes:
            for axis in axes:
                vec[axis] = 1.0
        else:
            vec[self.dim // 2 :] = self._fallback.embed_one(text)
        return vec

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed_one(t) for t in texts]) if texts else np.zeros((0, self.dim))


class RemoteEmbedder:
    """HTTP embedding backend: POST {"texts": [...]} -> {"vectors": [[...]]}.
    Credentials come from a named environment variable, never from config."""

    name = "remote"

    def __init__(self, endpoint: str, dim: int, *, credentials_env: Optional[str] = None, timeout: float = 30.0, transport=None):
        self.endpoint = endpoint
        self.dim = dim
        self.credentials_env = credentials_env
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def embed(self, texts: Sequence[str]):
        headers = {}
        if self.credentials_env:
            token = os.environ.get(self.credentials_env)
            if not token:
                raise StoreError(f"credentials env var {self.credentials_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        response = self._client.post(self.endpoint, json={"texts": list(texts)}, headers=headers)
        response.raise_for_status()
        vectors = response.json()["vectors"]
        if len(vectors) != len(texts):
            raise StoreError(f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} texts")
        return vectors


class VectorStore:
    """Brute-force cosine index over chunk vectors.

    Thread contract: a single lock covers mutation and the search snapshot,
    so a search never observes a partially applied upsert."""

    def __init__(self, embedder, *, threshold: float = DEFAULT_THRESHOLD):
        self.embedder = embedder
        self.threshold = threshold
        self.dim: Optional[int] = None
        self._lock = threading.RLock()
        self._slots: dict = {}  # (source, offset) -> Chunk
        self._vectors: dict = {}  # (source, offset) -> float32 unit vector
        self._live_length = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._slots)

    def chunks(self) -> list:
        with self._lock:
            return list(self._slots.values())

    def upsert(self, chunks: Sequence[Chunk]) -> int:
        """Insert or replace by (source, offset); stale timestamps are ignored.
        Returns the number of slots written."""
        if not chunks:
            return 0
        for chunk in chunks:
            if not chunk.text:
                raise StoreError(f"chunk {chunk.id} has empty text")
        vectors = _unit_rows(self.embedder.embed([c.text for c in chunks]), self.dim)
        written = 0
        with self._lock:
            if self.dim is None:
                self.dim = int(vectors.shape[1])
            elif vectors.shape[1] != self.dim:
                raise DimensionMismatchError(f"vector dim {vectors.shape[1]} != store dim {self.dim}")
            for chunk, vector in zip(chunks, vectors):
                key = (chunk.source, chunk.char_offset)
                existing = self._slots.get(key)
                if existing is not None and existing.timestamp > chunk.timestamp:
                    continue
                self._slots[key] = chunk
                self._vectors[key] = vector
                written += 1
        return written

    def ingest(self, text: str, source: str, *, timestamp: Optional[float] = None) -> list:
        """Chunk a document and upsert it; returns the chunks."""
        stamp = time.time() if timestamp is None else timestamp
        chunks = chunk_text(text, source, timestamp=stamp)
        self.upsert(chunks)
        return chunks

    def add_live_note(self, text: str, *, timestamp: Optional[float] = None) -> Chunk:
        """Append a note under the reserved live source; returns its first chunk."""
        if not text:
            raise StoreError("empty live note")
        stamp = time.time() if timestamp is None else timestamp
        with self._lock:
            base = self._live_length
            self._live_length += len(text)
        chunks = chunk_text(text, LIVE_SOURCE, timestamp=stamp, base_offset=base)
        self.upsert(chunks)
        return chunks[0]

    def search(self, query: str, k: int, *, threshold: Optional[float] = None) -> list:
        """Top-k by cosine similarity, ties broken by ascending chunk id,
        then filtered at the threshold (inclusive)."""
        if k <= 0:
            raise StoreError(f"k must be > 0, got {k}")
        limit = self.threshold if threshold is None else threshold
        query_vec = _unit_rows(self.embedder.embed([query]), self.dim)[0].astype(np.float64)
        with self._lock:
            if not self._slots:
                return []
            keys = list(self._slots.keys())
            matrix = np.stack([self._vectors[key] for key in keys]).astype(np.float64)
            chunks = [self._slots[key] for key in keys]
        sims = matrix @ query_vec
        order = sorted(range(len(keys)), key=lambda i: (-sims[i], chunks[i].id))
        hits = []
        for i in order[:k]:
            if sims[i] >= limit:
                hits.append(SearchHit(chunk=chunks[i], similarity=float(sims[i])))
        return hits

    def save(self, path) -> None:
        """Line-delimited JSON snapshot; vector bits survive exactly."""
        with self._lock:
            header = {
                "format": _SNAPSHOT_FORMAT,
                "version": _SNAPSHOT_VERSION,
                "dim": self.dim,
                "embedder": getattr(self.embedder, "name", "unknown"),
                "threshold": self.threshold,
                "live_length": self._live_length,
            }
            rows = []
            for key, chunk in self._slots.items():
                rows.append(
                    {
                        "id": chunk.id,
                        "text": chunk.text,
                        "source": chunk.source,
                        "char_offset": chunk.char_offset,
                        "timestamp": chunk.timestamp,
                        "vector_b64": base64.b64encode(self._vectors[key].tobytes()).decode("ascii"),
                    }
                )
        tmp_path = f"{path}.tmp"
        with open(tmp_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for row in rows:
                fh.write(json.dumps(row) + "\n")
        os.replace(tmp_path, path)

    @classmethod
    def load(cls, path, embedder, *, threshold: Optional[float] = None) -> "VectorStore":
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise SnapshotError(f"{path}: empty snapshot")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"{path}: bad header: {exc}") from None
        if header.get("format") != _SNAPSHOT_FORMAT:
            raise SnapshotError(f"{path}: not a store snapshot")
        if header.get("version") != _SNAPSHOT_VERSION:
            raise SnapshotError(f"{path}: unsupported snapshot version {header.get('version')!r}")
        dim = header.get("dim")
        embedder_dim = getattr(embedder, "dim", None)
        if dim is not None and embedder_dim is not None and dim != embedder_dim:
            raise DimensionMismatchError(f"snapshot dim {dim} != embedder dim {embedder_dim}")
        store = cls(embedder, threshold=threshold if threshold is not None else header.get("threshold", DEFAULT_THRESHOLD))
        store.dim = dim
        store._live_length = header.get("live_length", 0)
        for line_no, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                chunk = Chunk(row["id"], row["text"], row["source"], row["char_offset"], row["timestamp"])
                vector = np.frombuffer(base64.b64decode(row["vector_b64"]), dtype=np.float32).copy()
            except (KeyError, ValueError) as exc:
                raise SnapshotError(f"{path}:{line_no}: bad row: {exc}") from None
            if dim is not None and vector.shape[0] != dim:
                raise SnapshotError(f"{path}:{line_no}: vector dim {vector.shape[0]} != {dim}")
            key = (chunk.source, chunk.char_offset)
            store._slots[key] = chunk
            store._vectors[key] = vector
        return store
