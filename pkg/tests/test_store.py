"""Retrieval store tests: chunker geometry, embedder determinism, scan
ordering against a hand-rolled cosine oracle, and snapshot fidelity."""

import base64
import json
import math
import random

import httpx
import numpy as np
import pytest

from cogchess.store import (
    Chunk,
    DimensionMismatchError,
    FixtureEmbedder,
    HashingEmbedder,
    LIVE_SOURCE,
    RemoteEmbedder,
    SnapshotError,
    StoreError,
    VectorStore,
    chunk_id,
    chunk_text,
)


def cosine_scan(rows, query_vec):
    """Independent ranking oracle: plain-python cosine over (id, vector) rows,
    sorted by similarity descending then id ascending."""

    def cosine(a, b):
        dot = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
        return dot / (na * nb)

    scored = [(cosine(vec, query_vec), cid) for cid, vec in rows]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [cid for _, cid in scored]


class TestChunker:
    def test_2500_chars_gives_three_chunks(self):
        text = "x" * 900 + "y" * 900 + "z" * 700
        chunks = chunk_text(text, "doc")
        assert [(c.char_offset, len(c.text)) for c in chunks] == [
            (0, 1000),
            (900, 1000),
            (1800, 700),
        ]

    def test_exactly_chunk_size_gives_one_chunk(self):
        chunks = chunk_text("a" * 1000, "doc")
        assert len(chunks) == 1
        assert chunks[0].char_offset == 0
        assert len(chunks[0].text) == 1000

    def test_short_text_gives_one_chunk(self):
        chunks = chunk_text("hello", "doc")
        assert len(chunks) == 1
        assert chunks[0].text == "hello"

    def test_empty_text_gives_no_chunks(self):
        assert chunk_text("", "doc") == []

    def test_one_past_chunk_size(self):
        chunks = chunk_text("a" * 1001, "doc")
        assert [(c.char_offset, len(c.text)) for c in chunks] == [(0, 1000), (900, 101)]

    def test_reconstruction_drops_overlap(self):
        rng = random.Random(11)
        for _ in range(50):
            n = rng.randrange(1, 4000)
            text = "".join(rng.choice("abcdefgh \n") for _ in range(n))
            size = rng.randrange(2, 600)
            overlap = rng.randrange(0, size)
            chunks = chunk_text(text, "doc", chunk_size=size, overlap=overlap)
            rebuilt = chunks[0].text + "".join(c.text[overlap:] for c in chunks[1:])
            assert rebuilt == text
            assert all(len(c.text) <= size for c in chunks)
            assert all(len(c.text) == size for c in chunks[:-1])

    def test_ids_stable_and_distinct(self):
        text = "alpha " * 500
        first = chunk_text(text, "doc")
        second = chunk_text(text, "doc")
        assert [c.id for c in first] == [c.id for c in second]
        assert len({c.id for c in first}) == len(first)
        assert chunk_text(text, "other")[0].id != first[0].id

    def test_id_is_content_hash(self):
        assert chunk_id("doc", 0, "hello") == chunk_id("doc", 0, "hello")
        assert chunk_id("doc", 0, "hello") != chunk_id("doc", 0, "hellp")
        assert chunk_id("doc", 0, "hello") != chunk_id("doc", 1, "hello")

    def test_rejects_bad_geometry(self):
        with pytest.raises(StoreError):
            chunk_text("abc", "doc", chunk_size=0)
        with pytest.raises(StoreError):
            chunk_text("abc", "doc", chunk_size=10, overlap=10)
        with pytest.raises(StoreError):
            chunk_text("abc", "doc", chunk_size=10, overlap=-1)


class TestHashingEmbedder:
    def test_deterministic_and_unit_norm(self):
        emb = HashingEmbedder()
        a = emb.embed(["the knight moves in an L shape"])
        b = emb.embed(["the knight moves in an L shape"])
        assert np.array_equal(a, b)
        assert a.shape == (1, 256)

    def test_distinct_texts_differ(self):
        emb = HashingEmbedder()
        vecs = emb.embed(["castling rules", "boiling pasta"])
        assert not np.array_equal(vecs[0], vecs[1])

    def test_similar_texts_score_higher(self):
        emb = HashingEmbedder()
        store = VectorStore(emb, threshold=-1.0)
        store.upsert(chunk_text("the rook slides along ranks and files", "a"))
        store.upsert(chunk_text("completely unrelated cooking recipe with garlic", "b"))
        hits = store.search("rook slides along ranks", 2)
        assert hits[0].chunk.source == "a"
        assert hits[0].similarity > hits[1].similarity

    def test_short_and_empty_text(self):
        emb = HashingEmbedder()
        assert emb.embed_one("").any()
        assert emb.embed_one("ab").any()


class TestFixtureEmbedder:
    def test_keyword_lands_on_axis(self):
        emb = FixtureEmbedder([("meeting", 0), ("castle", 1)], dim=8)
        vec = emb.embed_one("The MEETING moved to 3pm")
        assert vec[0] == 1.0
        assert not vec[1:].any()

    def test_fallback_confined_to_upper_half(self):
        emb = FixtureEmbedder([("meeting", 0)], dim=8)
        vec = emb.embed_one("nothing relevant here")
        assert not vec[:4].any()
        assert vec[4:].any()

    def test_fallback_orthogonal_to_planted(self):
        emb = FixtureEmbedder([("meeting", 0)], dim=8)
        planted = emb.embed_one("meeting agenda")
        stray = emb.embed_one("nothing relevant here")
        assert float(planted @ stray) == 0.0

    def test_axis_bounds_checked(self):
        with pytest.raises(StoreError):
            FixtureEmbedder([("meeting", 4)], dim=8)
        with pytest.raises(StoreError):
            FixtureEmbedder([("", 0)], dim=8)

    def test_from_file(self, tmp_path):
        path = tmp_path / "fixture.json"
        path.write_text(json.dumps({"dim": 8, "rules": [{"keyword": "pawn", "axis": 2}]}))
        emb = FixtureEmbedder.from_file(path)
        assert emb.dim == 8
        assert emb.embed_one("pawn structure")[2] == 1.0


class TestRemoteEmbedder:
    def _transport(self, seen):
        def handler(request):
            seen.append(request)
            payload = json.loads(request.content)
            vectors = [[float(len(t)), 1.0] for t in payload["texts"]]
            return httpx.Response(200, json={"vectors": vectors})

        return httpx.MockTransport(handler)

    def test_posts_texts_and_returns_vectors(self):
        seen = []
        emb = RemoteEmbedder("http://embed.test/v1", dim=2, transport=self._transport(seen))
        vectors = emb.embed(["ab", "cdef"])
        assert vectors == [[2.0, 1.0], [4.0, 1.0]]
        assert json.loads(seen[0].content) == {"texts": ["ab", "cdef"]}
        assert "authorization" not in {k.lower() for k in seen[0].headers}

    def test_bearer_token_from_env(self, monkeypatch):
        seen = []
        monkeypatch.setenv("EMBED_TOKEN", "sekrit")
        emb = RemoteEmbedder(
            "http://embed.test/v1", dim=2, credentials_env="EMBED_TOKEN", transport=self._transport(seen)
        )
        emb.embed(["x"])
        assert seen[0].headers["authorization"] == "Bearer sekrit"

    def test_missing_env_raises(self, monkeypatch):
        monkeypatch.delenv("EMBED_TOKEN", raising=False)
        emb = RemoteEmbedder(
            "http://embed.test/v1", dim=2, credentials_env="EMBED_TOKEN", transport=self._transport([])
        )
        with pytest.raises(StoreError, match="EMBED_TOKEN"):
            emb.embed(["x"])

    def test_count_mismatch_raises(self):
        def handler(request):
            return httpx.Response(200, json={"vectors": [[1.0, 0.0]]})

        emb = RemoteEmbedder("http://embed.test/v1", dim=2, transport=httpx.MockTransport(handler))
        with pytest.raises(StoreError, match="1 vectors for 2"):
            emb.embed(["a", "b"])


class PlantedEmbedder:
    """Test double: returns a fixed vector per exact text."""

    name = "planted"

    def __init__(self, table, dim):
        self.table = table
        self.dim = dim

    def embed(self, texts):
        return [self.table[t] for t in texts]


class TestVectorStoreSearch:
    def test_matches_pure_python_scan(self):
        emb = HashingEmbedder(dim=64)
        store = VectorStore(emb, threshold=-1.0)
        rng = random.Random(5)
        words = ["pawn", "rook", "queen", "pasta", "garlic", "meeting", "london", "storm"]
        texts = [" ".join(rng.choice(words) for _ in range(12)) for _ in range(40)]
        for i, text in enumerate(texts):
            store.upsert([Chunk(chunk_id(f"d{i}", 0, text), text, f"d{i}", 0, 0.0)])
        for query in ["pawn storm on the kingside", "garlic pasta recipe", "meeting in london"]:
            rows = [(c.id, emb.embed_one(c.text).tolist()) for c in store.chunks()]
            expected = cosine_scan(rows, emb.embed_one(query).tolist())
            got = [h.chunk.id for h in store.search(query, len(rows))]
            assert got == expected

    def test_threshold_is_inclusive_and_filters(self):
        table = {
            "q": np.array([1.0, 0.0, 0.0]),
            "same": np.array([2.0, 0.0, 0.0]),
            "ortho": np.array([0.0, 3.0, 0.0]),
        }
        store = VectorStore(PlantedEmbedder(table, 3))
        store.upsert(
            [
                Chunk("aaa", "same", "s", 0, 0.0),
                Chunk("bbb", "ortho", "o", 0, 0.0),
            ]
        )
        hits = store.search("q", 5)
        assert [h.chunk.id for h in hits] == ["aaa"]
        assert hits[0].similarity == pytest.approx(1.0)
        assert store.search("q", 5, threshold=1.0)[0].chunk.id == "aaa"
        assert store.search("q", 5, threshold=-1.0)[-1].similarity == pytest.approx(0.0)

    def test_equal_similarity_breaks_ties_by_id(self):
        vec = np.array([0.0, 1.0])
        table = {"q": vec, "one": vec, "two": vec}
        store = VectorStore(PlantedEmbedder(table, 2))
        store.upsert(
            [
                Chunk("zzz", "one", "z", 0, 0.0),
                Chunk("mmm", "two", "m", 0, 0.0),
            ]
        )
        assert [h.chunk.id for h in store.search("q", 2)] == ["mmm", "zzz"]

    def test_k_limits_results(self):
        emb = HashingEmbedder(dim=32)
        store = VectorStore(emb, threshold=-1.0)
        store.upsert(chunk_text("a" * 50, "d1") + chunk_text("b" * 50, "d2") + chunk_text("c" * 50, "d3"))
        assert len(store.search("a", 2)) == 2
        with pytest.raises(StoreError):
            store.search("a", 0)

    def test_empty_store_returns_nothing(self):
        store = VectorStore(HashingEmbedder(dim=16))
        assert store.search("anything", 3) == []


class TestVectorStoreUpsert:
    def test_reingest_changed_text_keeps_count(self):
        emb = HashingEmbedder(dim=32)
        store = VectorStore(emb, threshold=-1.0)
        original = "first version of the note " * 40
        store.ingest(original, "doc", timestamp=1.0)
        assert len(store) == len(chunk_text(original, "doc"))
        before = len(store)
        revised = original.replace("first", "final")
        store.ingest(revised, "doc", timestamp=2.0)
        assert len(store) == before
        texts = {c.text for c in store.chunks()}
        assert any("final" in t for t in texts)
        assert not any("first" in t for t in texts)

    def test_stale_timestamp_is_ignored(self):
        emb = HashingEmbedder(dim=32)
        store = VectorStore(emb)
        new = Chunk(chunk_id("d", 0, "new text"), "new text", "d", 0, 5.0)
        old = Chunk(chunk_id("d", 0, "old text"), "old text", "d", 0, 1.0)
        assert store.upsert([new]) == 1
        assert store.upsert([old]) == 0
        assert store.chunks()[0].text == "new text"

    def test_identical_reingest_is_stable(self):
        emb = HashingEmbedder(dim=32)
        store = VectorStore(emb)
        chunks = chunk_text("alpha beta gamma " * 100, "doc", timestamp=1.0)
        store.upsert(chunks)
        ids_before = sorted(c.id for c in store.chunks())
        store.upsert(chunks)
        assert sorted(c.id for c in store.chunks()) == ids_before

    def test_dim_fixed_at_first_upsert(self):
        class TwoFaced:
            name = "twofaced"

            def __init__(self):
                self.dim = 4

            def embed(self, texts):
                return np.ones((len(texts), self.dim))

        emb = TwoFaced()
        store = VectorStore(emb)
        store.upsert([Chunk("a", "x", "s", 0, 0.0)])
        emb.dim = 6
        with pytest.raises(DimensionMismatchError):
            store.upsert([Chunk("b", "y", "s", 1, 0.0)])

    def test_rejects_empty_text_and_zero_vector(self):
        store = VectorStore(HashingEmbedder(dim=16))
        with pytest.raises(StoreError):
            store.upsert([Chunk("a", "", "s", 0, 0.0)])
        zero = PlantedEmbedder({"z": np.zeros(3)}, 3)
        with pytest.raises(StoreError):
            VectorStore(zero).upsert([Chunk("a", "z", "s", 0, 0.0)])


class TestLiveNotes:
    def test_notes_append_under_reserved_source(self):
        emb = FixtureEmbedder([("meeting", 0), ("deadline", 1)], dim=8)
        store = VectorStore(emb)
        first = store.add_live_note("the meeting moved to 3pm", timestamp=1.0)
        second = store.add_live_note("the deadline is friday", timestamp=2.0)
        assert first.source == LIVE_SOURCE
        assert second.source == LIVE_SOURCE
        assert first.char_offset == 0
        assert second.char_offset == len("the meeting moved to 3pm")
        assert len(store) == 2
        hits = store.search("when is the meeting?", 1)
        assert hits and hits[0].chunk.id == first.id
        hits = store.search("what is the deadline?", 1)
        assert hits and hits[0].chunk.id == second.id

    def test_note_retrieved_above_default_threshold(self):
        emb = FixtureEmbedder([("meeting", 0)], dim=8)
        store = VectorStore(emb)
        store.ingest("nothing about schedules here at all", "doc", timestamp=1.0)
        note = store.add_live_note("meeting moved to thursday", timestamp=2.0)
        hits = store.search("when is the meeting?", 3)
        assert [h.chunk.id for h in hits] == [note.id]
        assert hits[0].similarity >= store.threshold


class TestSnapshots:
    def _populated(self):
        emb = HashingEmbedder(dim=32)
        store = VectorStore(emb, threshold=0.25)
        store.ingest("the rook lifts to the third rank " * 60, "rooks", timestamp=3.5)
        store.add_live_note("club night moved to tuesday", timestamp=4.0)
        return emb, store

    def test_round_trip_is_exact(self, tmp_path):
        emb, store = self._populated()
        path = tmp_path / "store.jsonl"
        store.save(path)
        loaded = VectorStore.load(path, emb)
        assert loaded.threshold == store.threshold
        assert loaded.dim == store.dim
        assert len(loaded) == len(store)
        by_id = {c.id: c for c in loaded.chunks()}
        for chunk in store.chunks():
            assert by_id[chunk.id] == chunk
        for key, vec in store._vectors.items():
            assert loaded._vectors[key].tobytes() == vec.tobytes()
        query = "rook to the third rank"
        assert [
            (h.chunk.id, h.similarity) for h in store.search(query, 4)
        ] == [(h.chunk.id, h.similarity) for h in loaded.search(query, 4)]

    def test_live_notes_keep_appending_after_load(self, tmp_path):
        emb, store = self._populated()
        path = tmp_path / "store.jsonl"
        store.save(path)
        loaded = VectorStore.load(path, emb)
        note = loaded.add_live_note("second note", timestamp=9.0)
        assert note.char_offset == len("club night moved to tuesday")

    def test_vector_bits_in_file_match_memory(self, tmp_path):
        emb, store = self._populated()
        path = tmp_path / "store.jsonl"
        store.save(path)
        lines = path.read_text().splitlines()
        header = json.loads(lines[0])
        assert header["format"] == "cogchess-store"
        assert header["dim"] == 32
        for line in lines[1:]:
            row = json.loads(line)
            raw = base64.b64decode(row["vector_b64"])
            key = (row["source"], row["char_offset"])
            assert raw == store._vectors[key].tobytes()

    def test_rejects_foreign_or_mangled_files(self, tmp_path):
        emb = HashingEmbedder(dim=32)
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"format": "something-else", "version": 1}\n')
        with pytest.raises(SnapshotError):
            VectorStore.load(bad, emb)
        bad.write_text("not json\n")
        with pytest.raises(SnapshotError):
            VectorStore.load(bad, emb)
        bad.write_text('{"format": "cogchess-store", "version": 99}\n')
        with pytest.raises(SnapshotError):
            VectorStore.load(bad, emb)
        bad.write_text('{"format": "cogchess-store", "version": 1, "dim": 32}\n{"id": "x"}\n')
        with pytest.raises(SnapshotError):
            VectorStore.load(bad, emb)

    def test_dim_mismatch_with_embedder(self, tmp_path):
        _, store = self._populated()
        path = tmp_path / "store.jsonl"
        store.save(path)
        with pytest.raises(DimensionMismatchError):
            VectorStore.load(path, HashingEmbedder(dim=64))
