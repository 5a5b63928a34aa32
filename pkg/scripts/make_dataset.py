#!/usr/bin/env python3
"""Build the bundled sample dataset and mock-model pattern file.

Everything the dataset promises is computed or mechanically checked here
before it is written:

- final FENs and capture counts come from replaying the move lists;
- expected chunk ids come from chunking the bundled documents exactly the
  way the store will;
- every mock pattern is asserted to match exactly one question prompt and
  no document, template, or update note (so the scripted model can never
  answer the wrong question);
- retrieval planting is asserted by running the real store: each book
  question must retrieve precisely its expected chunk, each off-domain or
  deliberately-missing question must retrieve nothing;
- routing is asserted for every routed prompt;
- finally the whole offline evaluation is run in-process and its aggregate
  vector is asserted against the hand-computed design values.

Run from the repository root:

    python3 scripts/make_dataset.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from cogchess.board import START_FEN  # noqa: E402
from cogchess.engine import load_puzzles  # noqa: E402
from cogchess.llm import MockBackend  # noqa: E402
from cogchess.moves import GameRecord, capture_summary, replay  # noqa: E402
from cogchess.router import QueryAnalyzer, default_templates  # noqa: E402
from cogchess.store import chunk_text  # noqa: E402
from cogchess.harness.dataset import DOCUMENT_TIMESTAMP, load_dataset  # noqa: E402

DATA = ROOT / "src" / "cogchess" / "data"
DOCS = DATA / "docs"

# --------------------------------------------------------------- documents

HANDBOOK = (
    "The Ashford Chess Club meets on Tuesday evenings in the annex of the old "
    "library, from seven until ten. Annual membership dues are 40 dollars, "
    "collected each January; they cover room hire, equipment, and entry to the "
    "winter round-robin. The club president is Vera Kessel, who also directs "
    "the Thursday session for newcomers. Guests may attend twice before "
    "joining. Clocks and sets are provided, but members are asked to bring a "
    "scorebook and to record their rated games in full."
)

ENDGAME_NOTES = (
    "The Lucena position is the cornerstone of rook endings: the stronger "
    "side's king hides in front of its own passed pawn while the rook builds "
    "a bridge on the fourth rank to shelter that king from checks. Cut the "
    "defending king off by a file, advance the pawn to the seventh rank, and "
    "only then lift the rook. Against stubborn defence the bridge is the only "
    "winning method, so students should rehearse it from both sides until the "
    "manoeuvre is automatic."
)

STORY = (
    "The Adjournment is a short story set at a provincial chess congress. "
    "Marla, the defending champion, seals her forty-first move against Quint, "
    "a railway clerk making his first appearance on board three. During the "
    "adjournment the two walk the rain-soaked promenade, each silently "
    "reconstructing the sealed position from memory. Quint realises the "
    "ending is lost for him but says nothing; Marla, equally certain, "
    "resolves to offer a draw out of respect for his defence. When play "
    "resumes the arbiter opens the envelope, and both players sign the "
    "scoresheets before a single move is replayed."
)

DOCUMENTS = [
    ("club-handbook", HANDBOOK),
    ("endgame-notes", ENDGAME_NOTES),
    ("story-adjournment", STORY),
]

EMBEDDER = {
    "kind": "fixture",
    "dim": 64,
    "rules": [
        {"keyword": "membership dues", "axis": 0},
        {"keyword": "lucena", "axis": 1},
        {"keyword": "adjournment", "axis": 2},
        {"keyword": "simul", "axis": 3},
        {"keyword": "board one", "axis": 4},
    ],
}

# ---------------------------------------------------------------- questions


def final_fen(moves, start=None):
    return replay(GameRecord(moves=tuple(moves), start_fen=start)).final.fen()


def captures(moves, start=None):
    return capture_summary(GameRecord(moves=tuple(moves), start_fen=start)).total_captures


F1 = ["e4"]
F2 = ["e4", "c5", "Nf3"]
F3 = ["d4", "d5", "c4"]
F4 = ["e4", "e5", "Nf3", "Nc6", "Bb5", "a6"]
F5 = ["g3", "g6", "Bg2", "Bg7", "Nf3", "Nf6", "O-O", "O-O"]
C1 = ["e4", "d5", "exd5", "Qxd5", "Nc3", "Qa5", "d4", "c6", "Nf3", "Bg4", "Bf4", "e6", "h3", "Bxf3", "Qxf3"]
C2 = ["d4", "Nf6", "c4", "e6", "Nf3", "d5", "cxd5", "exd5"]
G1 = ["e4", "d5", "exd5", "Qxd5", "Nc3"]
G2 = ["e4", "e5", "Nf3", "Nc6", "Bb5", "a6"]


def numbered(moves):
    """Render a SAN move list as numbered text: 1. e4 c5 2. Nf3 ..."""
    parts = []
    for i in range(0, len(moves), 2):
        chunk = f"{i // 2 + 1}. {moves[i]}"
        if i + 1 < len(moves):
            chunk += f" {moves[i + 1]}"
        parts.append(chunk)
    return " ".join(parts)


def build_questions(puzzles):
    fen1, fen2, fen3, fen4, fen5 = (final_fen(m) for m in (F1, F2, F3, F4, F5))
    nc1, nc2 = captures(C1), captures(C2)
    assert nc1 == 4 and nc2 == 2, (nc1, nc2)

    chunk_ids = {
        source: chunk_text(text, source, timestamp=DOCUMENT_TIMESTAMP)[0].id
        for source, text in DOCUMENTS
    }

    questions = []

    def q(qid, quality, subtype, prompt, payload=None, expected=None, grading=None):
        questions.append(
            {
                "id": qid,
                "quality": quality,
                "subtype": subtype,
                "prompt": prompt,
                "payload": payload or {},
                "expected": expected,
                "grading": grading,
            }
        )

    # perception: 5 FEN, 3 piece, 2 capture
    for idx, (moves, fen) in enumerate(
        [(F1, fen1), (F2, fen2), (F3, fen3), (F4, fen4), (F5, fen5)], start=1
    ):
        q(
            f"per-fen-{idx:02d}",
            "perception",
            "fen-position",
            f"The moves {numbered(moves)} have been played from the initial position. "
            "State the resulting position as a FEN string.",
            payload={"moves": moves},
            expected=[fen],
            grading="exact",
        )
    q(
        "per-piece-01", "perception", "piece-status",
        "Which piece stands on f3 in this position?",
        payload={"fen": fen2},
        expected=["knight", "white knight"], grading="normalized",
    )
    q(
        "per-piece-02", "perception", "piece-status",
        "Which piece stands on b5 in this position?",
        payload={"fen": fen4},
        expected=["bishop", "white bishop"], grading="normalized",
    )
    q(
        "per-piece-03", "perception", "piece-status",
        "Which piece stands on d8 in this position?",
        payload={"fen": START_FEN},
        expected=["queen", "black queen"], grading="normalized",
    )
    q(
        "per-cap-01", "perception", "capture-count",
        f"How many captures occurred in the game {numbered(C1)}? Reply with a number.",
        payload={"moves": C1}, expected=nc1, grading="capture-eq1",
    )
    q(
        "per-cap-02", "perception", "capture-count",
        f"Count the captures in the game {numbered(C2)} and report the count.",
        payload={"moves": C2}, expected=nc2, grading="capture-eq1",
    )

    # memory: 3 base, 2 game, 2 store-update
    q(
        "mem-base-01", "memory", "base-knowledge",
        "What are the annual membership dues at the Ashford Chess Club?",
        expected=["40 dollars", "$40", "forty dollars"], grading="normalized",
    )
    q(
        "mem-base-02", "memory", "base-knowledge",
        "Who is the president of the Ashford Chess Club?",
        expected=["Vera Kessel"], grading="normalized",
    )
    q(
        "mem-base-03", "memory", "base-knowledge",
        "On which evening does the Ashford Chess Club meet?",
        expected=["Tuesday", "Tuesday evening", "Tuesday evenings"], grading="normalized",
    )
    q(
        "mem-game-01", "memory", "game-memory",
        f"In the game {numbered(G1)}, which piece did White capture first?",
        payload={"moves": G1},
        expected=["pawn", "a pawn", "the d5 pawn", "d-pawn"], grading="normalized",
    )
    q(
        "mem-game-02", "memory", "game-memory",
        f"After {numbered(G2)}, which opening is on the board?",
        payload={"moves": G2},
        expected=["Ruy Lopez", "Spanish Game", "the Spanish"], grading="normalized",
    )
    q(
        "mem-upd-01", "memory", "store-update",
        "When is the quarterly simul?",
        payload={"updates": ["The quarterly simul moved to March 9th."]},
        expected=["March 9th", "March 9"], grading="normalized",
    )
    q(
        "mem-upd-02", "memory", "store-update",
        "Who holds board one this season?",
        payload={"updates": ["Board one this season belongs to Ida Brandt."]},
        expected=["Ida Brandt"], grading="normalized",
    )

    # attention: 4 book, 2 off-domain
    q(
        "att-book-01", "attention", "rag-book",
        "What do the membership dues cover at the club?",
        expected=[chunk_ids["club-handbook"]], grading="chunk-id-match",
    )
    q(
        "att-book-02", "attention", "rag-book",
        "How does the bridge in the Lucena position shelter the attacking king?",
        expected=[chunk_ids["endgame-notes"]], grading="chunk-id-match",
    )
    q(
        "att-book-03", "attention", "rag-book",
        "Who are Marla and Quint in the adjournment story?",
        expected=[chunk_ids["story-adjournment"]], grading="chunk-id-match",
    )
    q(
        "att-book-04", "attention", "rag-book",
        "Which rook manoeuvre wins once your pawn reaches the seventh rank?",
        expected=[chunk_ids["endgame-notes"]], grading="chunk-id-match",
    )
    q(
        "att-off-01", "attention", "off-domain",
        "What is the capital of France?",
        expected=["__no_context__", "Paris"], grading="normalized",
    )
    q(
        "att-off-02", "attention", "off-domain",
        "Which physicist introduced special relativity in 1905?",
        expected=["__no_context__", "Albert Einstein", "Einstein"], grading="normalized",
    )

    # reasoning: first five puzzles; anticipation: all ten
    reasoning_ids = [p.id for p in puzzles if p.solution_len <= 2][:5]
    assert len(reasoning_ids) == 5, reasoning_ids
    for idx, pid in enumerate(reasoning_ids, start=1):
        q(
            f"rea-{idx:02d}", "reasoning", "puzzle",
            f"Play out puzzle {pid} and explain each system move for human review.",
            payload={"puzzle_id": pid},
        )
    for idx, puzzle in enumerate(puzzles, start=1):
        q(
            f"ant-{idx:02d}", "anticipation", "puzzle",
            f"Play out puzzle {puzzle.id} and compare the line against the reference solution.",
            payload={"puzzle_id": puzzle.id},
        )
    return questions, (fen1, fen2, fen3, fen4, fen5)


# ------------------------------------------------------------ mock patterns


def build_patterns(fens):
    fen1, fen2, fen3, fen4, fen5 = fens
    wrong_castling = fen5.split(" ")
    assert wrong_castling[2] == "-", fen5
    wrong_castling[2] = "KQkq"
    fen5_wrong = " ".join(wrong_castling)

    patterns = [
        # perception — FEN reconstruction (four right, one wrong)
        {"contains": f"moves {numbered(F1)} have been played", "response": f"<ANSWER>: {fen1}"},
        {"contains": f"moves {numbered(F2)} have been played", "response": f"<ANSWER>: {fen2}"},
        {"contains": f"moves {numbered(F3)} have been played", "response": f"<ANSWER>: {fen3}"},
        {"contains": f"moves {numbered(F4)} have been played", "response": f"<ANSWER>: {fen4}"},
        {"contains": f"moves {numbered(F5)} have been played", "response": f"<ANSWER>: {fen5_wrong}"},
        # perception — piece status (two right, one wrong)
        {"contains": "stands on f3", "response": "<ANSWER>: a knight"},
        {"contains": "stands on b5", "response": "<ANSWER>: bishop"},
        {"contains": "stands on d8", "response": "<ANSWER>: the king"},
        # perception — capture counts (one off by one, one right)
        {"contains": "How many captures occurred", "response": "<ANSWER>: 3"},
        {"contains": "Count the captures", "response": "I replayed the line carefully. <ANSWER>: There were 2 captures."},
        # memory
        {"contains": "dues at the Ashford", "response": "The handbook lists the fee. <ANSWER>: 40 dollars"},
        {"contains": "president of the Ashford", "response": "<ANSWER>: Vera Kessel"},
        {"contains": "which evening does", "response": "<ANSWER>: Tuesday"},
        {"contains": "which piece did White capture first", "response": "<ANSWER>: a pawn"},
        {"contains": "which opening is on the board", "response": "<ANSWER>: the Italian Game"},
        {"contains": "When is the quarterly", "response": "<ANSWER>: March 9th"},
        {"contains": "holds board one", "response": "<ANSWER>: Ida Brandt"},
        # attention — off-domain general knowledge
        {"contains": "special relativity", "response": "From general knowledge: <ANSWER>: Albert Einstein"},
        # template-level patterns (reasoning explanations, ask demo)
        {
            "contains": "the move played was",
            "response": (
                "The move drives the defending king toward the edge of the board and keeps "
                "every escape square covered, so the mating net closes by force."
            ),
        },
        {
            "contains": "the engine recommends",
            "response": (
                "It improves the worst-placed piece and converts the advantage. "
                "<ANSWER>: a forcing simplification."
            ),
        },
    ]
    return {"patterns": patterns, "default": "I cannot find this in my notes."}


TEMPLATE_LEVEL = ("the move played was", "the engine recommends")

# ------------------------------------------------------------- verification


def check_patterns(questions, patterns):
    prompts = {row["id"]: row["prompt"].lower() for row in questions}
    surfaces = {f"doc:{source}": text.lower() for source, text in DOCUMENTS}
    for row in questions:
        for note in row["payload"].get("updates", []):
            surfaces[f"update:{row['id']}"] = note.lower()
    for name, text in default_templates().items():
        surfaces[f"template:{name}"] = text.lower()

    for pattern in patterns["patterns"]:
        needle = pattern["contains"].lower()
        hits = [qid for qid, prompt in prompts.items() if needle in prompt]
        clashes = [name for name, text in surfaces.items() if needle in text]
        if needle in TEMPLATE_LEVEL:
            assert not hits, f"template pattern {needle!r} collides with prompts {hits}"
            clashes = [c for c in clashes if not c.startswith("template:")]
            assert not clashes, f"template pattern {needle!r} collides with {clashes}"
        else:
            assert len(hits) == 1, f"pattern {needle!r} matches prompts {hits}"
            assert not clashes, f"pattern {needle!r} also occurs in {clashes}"


def check_retrieval(dataset):
    store = dataset.build_store()
    for question in dataset.questions:
        if question.subtype == "rag-book":
            hits = store.search(question.prompt, 4)
            if question.id == "att-book-04":
                assert hits == [], f"{question.id}: expected no hits, got {hits}"
            else:
                assert hits, f"{question.id}: expected a hit"
                assert hits[0].chunk.id == question.expected[0], question.id
        elif question.subtype == "off-domain":
            assert store.search(question.prompt, 4) == [], question.id


def check_routing(dataset):
    analyzer = QueryAnalyzer.default()
    for question in dataset.questions:
        if question.quality in ("memory", "attention"):
            route = analyzer.route(question.prompt, store_has_content=True)
            assert route.kind.value == "rag-qa", (question.id, route.kind)
        for note in question.payload.get("updates", []):
            route = analyzer.route(f"__update__store__ {note}", store_has_content=True)
            assert route.kind.value == "store-update", question.id


def check_offline_vector(dataset, puzzles):
    """Run the real offline evaluation and assert the designed aggregates."""
    import subprocess
    import tempfile

    from cogchess.engine import EngineConfig, start_session, stop_session
    from cogchess.fake_engine import fixture_for_puzzles, write_fixture
    from cogchess.harness.runner import Services, run_quality

    backend = MockBackend.from_file(DATA / "mock_llm.json")
    with tempfile.TemporaryDirectory() as tmp:
        fixture_path = Path(tmp) / "fx.json"
        write_fixture(fixture_for_puzzles(puzzles), fixture_path)
        session = start_session(
            EngineConfig(
                executable_path=sys.executable,
                args=("-m", "cogchess.fake_engine", str(fixture_path)),
                depth=1,
                move_timeout=30.0,
            )
        )
        try:
            services = Services(
                store=dataset.build_store(),
                engine=session,
                puzzles={p.id: p for p in puzzles},
            )
            got = {}
            tasks = []
            for quality in ("perception", "memory", "attention", "reasoning", "anticipation"):
                qrun = run_quality(quality, dataset.by_quality(quality), backend, services)
                got[quality] = qrun.aggregate
                tasks.extend(qrun.tasks)
        finally:
            stop_session(session)

    expected = {
        "perception": 0.775,     # fen 4/5, pieces 2/3, captures 1.75/2 over 10
        "memory": 6 / 7,         # the opening-name question is answered wrong
        "attention": 5 / 6,      # one book question misses retrieval by design
        "reasoning": None,       # pending human annotation
        "anticipation": 1.0,     # scripted reference engine
    }
    for quality, want in expected.items():
        have = got[quality]
        if want is None:
            assert have is None, (quality, have)
        else:
            assert abs(have - want) < 1e-12, (quality, have, want)
    assert len(tasks) == 6, [t.task_id for t in tasks]
    print("offline vector:", {k: (v if v is not None else "pending") for k, v in got.items()})
    print("tasks:", [t.task_id for t in tasks])


def main():
    puzzles = load_puzzles(DATA / "puzzles.json")
    questions, fens = build_questions(puzzles)
    patterns = build_patterns(fens)
    check_patterns(questions, patterns)

    DOCS.mkdir(exist_ok=True)
    for source, text in DOCUMENTS:
        (DOCS / f"{source}.txt").write_text(text + "\n", encoding="utf-8")

    dataset_doc = {
        "_provenance": (
            "Bundled desk-scale sample. All documents are original texts "
            "written for this fixture; question ground truths are computed "
            "by replaying the stated move lists."
        ),
        "embedder": EMBEDDER,
        "documents": [{"source": s, "text": t} for s, t in DOCUMENTS],
        "questions": questions,
    }
    # the loader rejects unknown top-level question fields but tolerates
    # top-level dataset metadata; keep provenance at the top level only
    (DATA / "dataset.json").write_text(
        json.dumps(dataset_doc, indent=2, sort_keys=False) + "\n", encoding="utf-8"
    )
    (DATA / "mock_llm.json").write_text(
        json.dumps(patterns, indent=2, sort_keys=False) + "\n", encoding="utf-8"
    )

    dataset = load_dataset(DATA / "dataset.json", puzzles=puzzles)
    counts = {}
    for question in dataset.questions:
        counts[question.quality] = counts.get(question.quality, 0) + 1
    print("questions per quality:", counts)
    check_retrieval(dataset)
    check_routing(dataset)
    check_offline_vector(dataset, puzzles)
    print("dataset written:", DATA / "dataset.json")
    print("patterns written:", DATA / "mock_llm.json")


if __name__ == "__main__":
    main()
