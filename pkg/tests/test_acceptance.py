"""The shipping gate. One test per released guarantee, each printing a
single pass/fail line under ``pytest -v``:

1. chess ground truth   — perft 1-3 against the independent oracle, exact
                          node counts, and a 1,000-position FEN round trip
2. score formulas       — every worked example to 1e-12 plus 10,000
                          randomized range checks
3. engine protocol      — golden byte transcript, and a solution-scripted
                          engine solving all bundled puzzles perfectly
4. real engine (opt-in) — set COGCHESS_UCI_ENGINE to a UCI engine binary
                          to run the bundled puzzles for real at depth 18
5. retrieval            — index search vs. an independent brute-force scan
                          over 10,000 random chunks, threshold filtering on
                          planted vectors, and exact chunker offsets
6. offline evaluation   — ``harness eval --quality all`` reproduces the
                          hand-computed five-quality vector, twice,
                          bit-identically
7. store-update loop    — ``ask "__update__store__ <fact>"`` makes the fact
                          the top retrieval hit for a later question

Everything here runs offline except test 4, which is skipped unless a real
engine is supplied.
"""

import json
import os
import random
import string
import sys
import time

import numpy as np
import pytest
from click.testing import CliRunner

import cogchess as cc
import oracle
from cogchess.engine import EngineConfig, load_puzzles, start_session
from cogchess.fake_engine import fixture_for_puzzles, write_fixture
from cogchess.harness.cli import harness
from cogchess.scoring import (
    AnticipationInput,
    MoveAnnotation,
    anticipation_score,
    capture_score,
    exact_match_score,
    match_prefix,
    perception_score,
    reasoning_score,
)
from cogchess.store import (
    LIVE_SOURCE,
    Chunk,
    FixtureEmbedder,
    HashingEmbedder,
    VectorStore,
    chunk_id,
    chunk_text,
)
from conftest import playout_positions
from paths import BUNDLED_DATA

TOL = 1e-12
MATE_IN_1_FEN = "6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1"
REAL_ENGINE_ENV = "COGCHESS_UCI_ENGINE"


def bundled_puzzles():
    return load_puzzles(BUNDLED_DATA / "puzzles.json")


def scripted_config(puzzles, tmp_path) -> EngineConfig:
    fixture_path = tmp_path / "scripted.json"
    write_fixture(fixture_for_puzzles(puzzles), fixture_path)
    return EngineConfig(
        executable_path=sys.executable,
        args=("-m", "cogchess.fake_engine", str(fixture_path)),
        depth=1,
        move_timeout=30.0,
    )


def solve_all(session, puzzles):
    """Run every puzzle and score the run the same way the harness does:
    prefix-match the played solver moves against the reference solver line."""
    inputs = []
    attempts = {}
    for puzzle in puzzles:
        attempt = session.solve_puzzle(puzzle)
        matched = match_prefix(attempt.moves_played, puzzle.solution[::2])
        inputs.append(
            AnticipationInput(puzzle.id, matched, attempt.n_sys, puzzle.solution_len)
        )
        attempts[puzzle.id] = attempt
    return inputs, attempts


# ---------------------------------------------------------------------------
# 1. Chess ground truth: perft vs. the independent oracle + FEN round trips.
# ---------------------------------------------------------------------------


def test_chess_ground_truth_perft_and_fen_round_trip():
    started = time.monotonic()

    oracle_state = oracle.fen_to_state(oracle.START_FEN)
    oracle_counts = [oracle.perft(oracle_state, depth) for depth in (1, 2, 3)]
    assert oracle_counts == [20, 400, 8902]

    start = cc.start_position()
    assert [cc.perft(start, depth) for depth in (1, 2, 3)] == oracle_counts

    positions = playout_positions(seed=20260819, games=40, max_plies=40)
    assert len(positions) >= 1000
    for state in positions[:1000]:
        fen = state.fen()
        assert cc.parse_fen(fen).fen() == fen

    assert time.monotonic() - started < 30.0


# ---------------------------------------------------------------------------
# 2. Score formulas: worked examples at 1e-12 + 10,000 randomized checks.
# ---------------------------------------------------------------------------


def test_score_formula_examples_and_randomized_ranges():
    started = time.monotonic()

    # Capture closeness.
    assert capture_score(4, 4) == pytest.approx(1.0, abs=TOL)
    assert capture_score(4, 3) == pytest.approx(0.75, abs=TOL)
    assert capture_score(2, 7) == pytest.approx(0.0, abs=TOL)

    # Perception: category sums over the question count.
    assert perception_score(40, 8, 20, 68) == pytest.approx(1.0, abs=TOL)
    assert perception_score(20, 4, 10, 68) == pytest.approx(0.5, abs=TOL)
    assert perception_score(0, 0, 0, 68) == pytest.approx(0.0, abs=TOL)

    # Memory / attention: graded-correct over total.
    assert exact_match_score(3, 4) == pytest.approx(0.75, abs=TOL)
    assert exact_match_score(0, 54) == pytest.approx(0.0, abs=TOL)
    assert exact_match_score(54, 54) == pytest.approx(1.0, abs=TOL)

    # Reasoning: one puzzle, two moves, one annotator marking 4 then 5.
    marks = [MoveAnnotation("p", 1, "ann", 4), MoveAnnotation("p", 2, "ann", 5)]
    assert reasoning_score(marks, {"p": 2}) == pytest.approx(0.9, abs=TOL)
    perfect = [MoveAnnotation("p", 1, "ann", 5)]
    assert reasoning_score(perfect, {"p": 1}) == pytest.approx(1.0, abs=TOL)
    split = [MoveAnnotation("hi", 1, "ann", 5), MoveAnnotation("lo", 1, "ann", 0)]
    assert reasoning_score(split, {"hi": 1, "lo": 1}) == pytest.approx(0.5, abs=TOL)

    # Anticipation: mean of clamped matched/played ratios.
    assert anticipation_score([AnticipationInput("p", 2, 3)]) == pytest.approx(2 / 3, abs=TOL)
    assert anticipation_score([AnticipationInput("p", 5, 2)]) == pytest.approx(1.0, abs=TOL)
    pair = [AnticipationInput("a", 1, 2), AnticipationInput("b", 2, 2)]
    assert anticipation_score(pair) == pytest.approx(0.75, abs=TOL)

    # Prefix matching feeding anticipation.
    assert match_prefix(["e2e4", "g1f3"], ["e2e4", "g1f3"]) == 2
    assert match_prefix(["d2d4", "g1f3"], ["e2e4", "g1f3"]) == 0
    assert match_prefix(["e2e4", "g1f3"], ["e2e4", "d2d4"]) == 1

    # 10,000 randomized inputs; every score must stay inside [0, 1].
    rng = random.Random(987654321)
    checks = 0
    for _ in range(2000):
        value = capture_score(rng.randint(0, 20), rng.randint(0, 40))
        assert 0.0 <= value <= 1.0
        checks += 1

        counts = [rng.randint(0, 20) for _ in range(3)]
        total = sum(counts) or 1
        sums = [rng.uniform(0, c) for c in counts]
        value = perception_score(sums[0], sums[1], sums[2], total)
        assert 0.0 <= value <= 1.0
        checks += 1

        total = rng.randint(1, 60)
        value = exact_match_score(rng.uniform(0, total), total)
        assert 0.0 <= value <= 1.0
        checks += 1

        system_moves = {f"p{i}": rng.randint(1, 3) for i in range(rng.randint(1, 3))}
        annotations = [
            MoveAnnotation(pid, move, f"ann{a}", rng.randint(0, 5))
            for pid, n_sys in system_moves.items()
            for move in range(1, n_sys + 1)
            for a in range(rng.randint(1, 3))
        ]
        value = reasoning_score(annotations, system_moves)
        assert 0.0 <= value <= 1.0
        checks += 1

        inputs = [
            AnticipationInput(f"p{i}", rng.randint(0, 5), rng.randint(1, 4))
            for i in range(rng.randint(1, 5))
        ]
        value = anticipation_score(inputs)
        assert 0.0 <= value <= 1.0
        checks += 1
    assert checks == 10_000

    assert time.monotonic() - started < 10.0


# ---------------------------------------------------------------------------
# 3. Engine protocol: golden bytes + scripted perfect play on every puzzle.
# ---------------------------------------------------------------------------


def test_engine_protocol_bytes_and_scripted_solutions(tmp_path):
    golden_path = tmp_path / "golden.json"
    golden_path.write_text(json.dumps({"by_position": {f"fen {MATE_IN_1_FEN}": "a1a8"}}))
    session = start_session(
        EngineConfig(
            executable_path=sys.executable,
            args=("-m", "cogchess.fake_engine", str(golden_path)),
            depth=3,
            move_timeout=10.0,
            options={"Threads": 1, "Hash": 16},
        )
    )
    session.best_move(MATE_IN_1_FEN)
    session.stop()
    assert session.sent_transcript() == (
        b"uci\n"
        b"setoption name Threads value 1\n"
        b"setoption name Hash value 16\n"
        b"ucinewgame\n"
        b"isready\n"
        b"position fen 6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1\n"
        b"go depth 3\n"
        b"quit\n"
    )

    puzzles = bundled_puzzles()
    assert len(puzzles) == 10
    session = start_session(scripted_config(puzzles, tmp_path))
    try:
        inputs, attempts = solve_all(session, puzzles)
    finally:
        session.stop()
    for puzzle in puzzles:
        attempt = attempts[puzzle.id]
        assert attempt.solved, puzzle.id
        assert attempt.n_sys == puzzle.solution_len, puzzle.id
    assert anticipation_score(inputs) == pytest.approx(1.0, abs=TOL)


# ---------------------------------------------------------------------------
# 4. Real engine, opt-in: every bundled mate puzzle at default search depth.
# ---------------------------------------------------------------------------


@pytest.mark.skipif(
    not os.environ.get(REAL_ENGINE_ENV),
    reason=f"set {REAL_ENGINE_ENV} to a UCI engine executable to run",
)
def test_real_engine_solves_bundled_puzzles():
    started = time.monotonic()
    puzzles = bundled_puzzles()
    config = EngineConfig(executable_path=os.environ[REAL_ENGINE_ENV], move_timeout=55.0)
    assert config.depth == 18
    session = start_session(config)
    try:
        inputs, attempts = solve_all(session, puzzles)
    finally:
        session.stop()
    for puzzle in puzzles:
        assert attempts[puzzle.id].solved, puzzle.id
    assert anticipation_score(inputs) == pytest.approx(1.0, abs=TOL)
    assert time.monotonic() - started < 60.0


# ---------------------------------------------------------------------------
# 5. Retrieval: brute-force agreement, threshold filtering, chunk offsets.
# ---------------------------------------------------------------------------


def test_index_search_matches_brute_force_and_chunking():
    # (a) 10,000 random chunks: the index must return exactly the sequence a
    # full scan produces (descending similarity, ties by ascending id).
    rng = random.Random(20260819)
    alphabet = string.ascii_lowercase + "    "
    texts = []
    for i in range(10_000):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(12, 48))).strip()
        texts.append(raw or f"pad {i}")
    embedder = HashingEmbedder(dim=64)
    chunks = [
        Chunk(chunk_id(f"doc-{i:05d}", 0, text), text, f"doc-{i:05d}", 0, 0.0)
        for i, text in enumerate(texts)
    ]
    store = VectorStore(embedder)
    store.upsert(chunks)
    hits = store.search("the quick brown fox", k=10_000, threshold=-2.0)
    assert len(hits) == 10_000

    query = embedder.embed_one("the quick brown fox")
    query = (query / np.linalg.norm(query)).astype(np.float32).astype(np.float64)
    scored = []
    for chunk, text in zip(chunks, texts):
        vector = embedder.embed_one(text)
        vector = (vector / np.linalg.norm(vector)).astype(np.float32).astype(np.float64)
        scored.append((float(np.dot(vector, query)), chunk.id))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    assert [hit.chunk.id for hit in hits] == [cid for _, cid in scored]
    for hit, (similarity, _) in zip(hits, scored):
        assert hit.similarity == pytest.approx(similarity, abs=TOL)

    # (b) Threshold 0.7 on planted vectors: a parallel chunk passes with
    # similarity 1, an orthogonal one is filtered out.
    planted = VectorStore(FixtureEmbedder([("alpha", 0), ("omega", 1)], dim=8))
    planted.upsert(
        [
            Chunk(chunk_id("memo", 0, "alpha briefing"), "alpha briefing", "memo", 0, 0.0),
            Chunk(chunk_id("memo", 100, "omega briefing"), "omega briefing", "memo", 100, 0.0),
        ]
    )
    hits = planted.search("alpha", k=10)
    assert [hit.chunk.text for hit in hits] == ["alpha briefing"]
    assert hits[0].similarity == pytest.approx(1.0, abs=1e-6)
    assert planted.search("written in plain prose", k=10) == []

    # (c) Chunker stride arithmetic: 2,500 chars -> offsets 0/900/1800.
    pieces = chunk_text("x" * 2500, "doc")
    assert [(piece.char_offset, len(piece.text)) for piece in pieces] == [
        (0, 1000),
        (900, 1000),
        (1800, 700),
    ]


# ---------------------------------------------------------------------------
# 6. Offline evaluation: the five-quality vector, reproduced bit-identically.
# ---------------------------------------------------------------------------

EXPECTED_VECTOR = {
    "perception": 0.775,
    "memory": 6 / 7,
    "attention": 5 / 6,
    "reasoning": "pending",
    "anticipation": 1.0,
}


def test_offline_eval_emits_expected_vector_twice(tmp_path):
    runner = CliRunner()

    def evaluate(out_dir):
        result = runner.invoke(
            harness,
            ["eval", "--quality", "all", "--out", str(out_dir)],
            catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
        return json.loads((out_dir / "run.json").read_text(encoding="utf-8"))

    first = evaluate(tmp_path / "one")
    assert first["per_quality"] == EXPECTED_VECTOR

    second = evaluate(tmp_path / "two")
    assert second["per_quality"] == EXPECTED_VECTOR
    for name in ("records.jsonl", "tasks.json", "engine_fixture.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes(), name


# ---------------------------------------------------------------------------
# 7. Store-update loop: push a fact in, get it back as the top hit.
# ---------------------------------------------------------------------------


def test_store_update_then_question_retrieves_fact(tmp_path):
    spec_path = tmp_path / "embedder.json"
    spec_path.write_text(
        json.dumps(
            {
                "kind": "fixture",
                "dim": 32,
                "rules": [
                    {"keyword": "membership dues", "axis": 0},
                    {"keyword": "simul", "axis": 1},
                ],
            }
        )
    )
    document = tmp_path / "handbook.txt"
    document.write_text("Annual membership dues are 40 dollars.", encoding="utf-8")
    snapshot = tmp_path / "store.jsonl"
    runner = CliRunner()

    result = runner.invoke(
        harness,
        ["ingest", str(document), "--store", str(snapshot), "--embedder-spec", str(spec_path)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output

    fact = "The quarterly simul moved to March 9th."
    result = runner.invoke(
        harness,
        ["ask", f"__update__store__ {fact}", "--store", str(snapshot), "--embedder-spec", str(spec_path)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    assert "route: store-update" in result.output

    result = runner.invoke(
        harness,
        ["ask", "When is the quarterly simul?", "--store", str(snapshot), "--embedder-spec", str(spec_path)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    assert "route: rag-qa" in result.output
    assert "chunks:" in result.output

    # Independent check on the persisted snapshot: the pushed fact is the
    # top hit for the question, above the store's similarity threshold.
    embedder = FixtureEmbedder([("membership dues", 0), ("simul", 1)], dim=32)
    store = VectorStore.load(snapshot, embedder)
    hits = store.search("When is the quarterly simul?", k=1)
    assert hits, "expected the live note to be retrievable"
    assert hits[0].chunk.source == LIVE_SOURCE
    assert hits[0].chunk.text == fact
    assert hits[0].similarity > store.threshold == 0.7
    assert hits[0].chunk.id in result.output
