"""Scripted UCI engine for offline tests: ``python3 -m cogchess.fake_engine
fixture.json`` speaks the engine side of the protocol on stdio, answering
``go`` from a response table instead of searching.

Fixture file shape (all keys optional):

    {
      "handshake": {"uciok": true, "readyok": true},
      "id_lines": ["id name scripted", "id author tests"],
      "by_position": {
          "fen <FEN>": "e2e4",
          "fen <FEN> moves e2e4 e7e5": {"bestmove": "g1f3",
                                         "info": ["info depth 1 score cp 31"]}
      },
      "sequence": ["e2e4", "(none)"],
      "default": "(none)",
      "info_lines": ["info depth 18 score cp 20"],
      "crash_on_go": 2
    }

``by_position`` keys are the `position` command with its leading word
removed. Lookup order on each ``go``: by_position, then the next unread
``sequence`` entry, then ``default``. Setting ``crash_on_go`` N makes the
process die without replying on the Nth search, for crash-path tests.
All output lines are LF-terminated bytes, flushed immediately.
"""

from __future__ import annotations

import json
import os
import sys

from .engine import Puzzle, position_line


def fixture_for_puzzles(puzzles, *, info_lines=None) -> dict:
    """Response table that plays every puzzle's reference line perfectly:
    each solver-to-move position along the line maps to the solution move."""
    by_position = {}
    for puzzle in puzzles:
        history = []
        for i, token in enumerate(puzzle.solution):
            if i % 2 == 0:
                key = position_line(puzzle.fen, history)[len("position ") :]
                if by_position.get(key, token) != token:
                    raise ValueError(
                        f"puzzle {puzzle.id}: position collides with a different scripted move"
                    )
                by_position[key] = token
            history.append(token)
    fixture = {"by_position": by_position, "default": "(none)"}
    if info_lines:
        fixture["info_lines"] = list(info_lines)
    return fixture


def write_fixture(fixture: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fixture, fh, indent=2, sort_keys=True)


def _emit(line: str) -> None:
    sys.stdout.buffer.write(line.encode("utf-8") + b"\n")
    sys.stdout.buffer.flush()


def run(fixture: dict) -> int:
    handshake = fixture.get("handshake", {})
    say_uciok = handshake.get("uciok", True)
    say_readyok = handshake.get("readyok", True)
    id_lines = fixture.get("id_lines", ["id name scripted-engine", "id author offline tests"])
    by_position = dict(fixture.get("by_position", {}))
    sequence = list(fixture.get("sequence", []))
    default = fixture.get("default", "(none)")
    info_lines = fixture.get("info_lines", [])
    crash_on_go = fixture.get("crash_on_go")

    last_position = None
    go_count = 0
    for raw in sys.stdin.buffer:
        line = raw.decode("utf-8", errors="replace").strip()
        if line == "uci":
            if say_uciok:
                for id_line in id_lines:
                    _emit(id_line)
                _emit("uciok")
        elif line == "isready":
            if say_readyok:
                _emit("readyok")
        elif line.startswith("position "):
            last_position = line[len("position ") :]
        elif line.startswith("go"):
            go_count += 1
            if crash_on_go is not None and go_count >= crash_on_go:
                os._exit(1)
            entry = by_position.get(last_position)
            if entry is None:
                entry = sequence.pop(0) if sequence else default
            if isinstance(entry, dict):
                for info in entry.get("info", []):
                    _emit(info)
                token = entry["bestmove"]
            else:
                for info in info_lines:
                    _emit(info)
                token = entry
            _emit(f"bestmove {token}")
        elif line == "quit":
            return 0
        # setoption, ucinewgame, stop, unknown chatter: silently accepted
    return 0


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else list(argv)
    if len(args) > 1:
        print("usage: python3 -m cogchess.fake_engine [fixture.json]", file=sys.stderr)
        return 2
    fixture = {}
    if args:
        with open(args[0], "r", encoding="utf-8") as fh:
            fixture = json.load(fh)
    return run(fixture)


if __name__ == "__main__":
    sys.exit(main())
