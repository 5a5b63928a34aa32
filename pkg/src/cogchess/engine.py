"""UCI engine client: session handshake, best-move queries, puzzle solving.

The conversation is plain UCI text over the child process's stdin/stdout
with LF line endings. Every byte written is recorded, so a scripted engine
run can be checked against a golden transcript. Every move an engine
returns is re-checked against this package's own move generator before it
is accepted; SAN renderings are always produced locally.

Puzzle solving plays the solver side only: the engine proposes each solver
move, opponent replies come from the puzzle's reference solution. A solver
move off the reference line ends the attempt — as solved when the move is
itself checkmate (an alternate mate), otherwise as unsolved. The move count
``n_sys`` includes the deviating move.
"""

from __future__ import annotations

import json
import os
import queue
import re
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .board import BoardState, ChessError, parse_fen
from .moves import apply_uci, is_checkmate, legal_moves

DEFAULT_DEPTH = 18
DEFAULT_HANDSHAKE_TIMEOUT = 5.0
DEFAULT_MOVE_TIMEOUT = 120.0
_STOP_GRACE = 2.0


class EngineError(RuntimeError):
    pass


class SpawnError(EngineError):
    pass


class HandshakeTimeoutError(EngineError):
    pass


class EngineTimeoutError(EngineError):
    pass


class EngineCrashError(EngineError):
    pass


class ProtocolError(EngineError):
    pass


class TerminalPositionError(EngineError):
    """The queried position has no legal moves, so there is no best move."""


@dataclass(frozen=True)
class EngineConfig:
    """How to spawn and drive one engine. Exactly one of depth/movetime is
    used; leaving both unset selects the default fixed depth."""

    executable_path: str
    args: tuple = ()
    depth: Optional[int] = None
    movetime: Optional[int] = None
    options: dict = field(default_factory=dict)
    handshake_timeout: float = DEFAULT_HANDSHAKE_TIMEOUT
    move_timeout: float = DEFAULT_MOVE_TIMEOUT

    def __post_init__(self):
        if self.depth is not None and self.movetime is not None:
            raise ValueError("set depth or movetime, not both")
        if self.depth is None and self.movetime is None:
            object.__setattr__(self, "depth", DEFAULT_DEPTH)
        if self.depth is not None and self.depth <= 0:
            raise ValueError(f"depth must be positive, got {self.depth}")
        if self.movetime is not None and self.movetime <= 0:
            raise ValueError(f"movetime must be positive, got {self.movetime}")
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def go_command(self) -> str:
        if self.movetime is not None:
            return f"go movetime {self.movetime}"
        return f"go depth {self.depth}"


@dataclass(frozen=True)
class EngineScore:
    """Engine evaluation: kind "cp" (centipawns) or "mate" (moves to mate,
    negative when the side to move is being mated)."""

    kind: str
    value: int


@dataclass(frozen=True)
class BestMoveResult:
    uci_move: str
    san: str
    score: Optional[EngineScore] = None


@dataclass(frozen=True)
class Puzzle:
    """A tactics puzzle: the side to move in ``fen`` is the solver; the
    solution interleaves solver moves and opponent replies (coordinate
    notation), always ending on a solver move."""

    id: str
    fen: str
    solution: tuple
    solution_len: int
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "solution", tuple(self.solution))

    def validate(self) -> BoardState:
        """Replay the solution; returns the terminal position."""
        if not self.solution or len(self.solution) % 2 == 0:
            raise ValueError(f"puzzle {self.id}: solution must end on a solver move")
        expected_len = (len(self.solution) + 1) // 2
        if self.solution_len != expected_len:
            raise ValueError(
                f"puzzle {self.id}: solution_len {self.solution_len} != {expected_len} solver moves"
            )
        if not 1 <= self.solution_len <= 3:
            raise ValueError(f"puzzle {self.id}: solution_len must be 1..3")
        state = parse_fen(self.fen)
        for token in self.solution:
            try:
                state, _ = apply_uci(state, token)
            except ChessError as exc:
                raise ValueError(f"puzzle {self.id}: bad solution move {token!r}: {exc}") from None
        return state


@dataclass(frozen=True)
class PuzzleAttempt:
    moves_played: tuple
    n_sys: int
    solved: bool
    per_move_explanations: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "moves_played", tuple(self.moves_played))
        if self.n_sys != len(self.moves_played):
            raise ValueError("n_sys must equal the number of moves played")


def position_line(fen: str, moves: Sequence[str] = ()) -> str:
    """The exact `position` command for a FEN plus played moves. The fake
    engine keys its script on this line, so there is one formatter."""
    line = f"position fen {fen}"
    if moves:
        line += " moves " + " ".join(moves)
    return line


_SCORE_RE = re.compile(r"\bscore (cp|mate) (-?\d+)\b")


class EngineSession:
    """One exclusive conversation with a spawned engine. Methods serialize
    on an internal lock; use separate sessions for parallel queries."""

    def __init__(self, config: EngineConfig, process: subprocess.Popen):
        self.config = config
        self._process = process
        self._lock = threading.RLock()
        self._lines: "queue.Queue" = queue.Queue()
        self._sent: list = []
        self._received: list = []
        self._closed = False
        self._stderr_tail: list = []
        self._reader = threading.Thread(target=self._pump_stdout, daemon=True)
        self._reader.start()
        self._errpump = threading.Thread(target=self._pump_stderr, daemon=True)
        self._errpump.start()

    # -- plumbing ---------------------------------------------------------

    def _pump_stdout(self):
        for raw in self._process.stdout:
            text = raw.decode("utf-8", errors="replace").rstrip("\r\n")
            self._received.append(text)
            self._lines.put(text)
        self._lines.put(None)

    def _pump_stderr(self):
        for raw in self._process.stderr:
            self._stderr_tail.append(raw.decode("utf-8", errors="replace").rstrip("\r\n"))
            del self._stderr_tail[:-20]

    def _send(self, command: str):
        data = command.encode("utf-8") + b"\n"
        try:
            self._process.stdin.write(data)
            self._process.stdin.flush()
        except (BrokenPipeError, OSError):
            raise EngineCrashError(self._crash_message(f"writing {command!r}")) from None
        self._sent.append(data)

    def _crash_message(self, doing: str) -> str:
        tail = "; ".join(self._stderr_tail[-3:])
        code = self._process.poll()
        return f"engine died while {doing} (exit={code}){': ' + tail if tail else ''}"

    def _await(self, predicate, deadline: float, doing: str, timeout_error):
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise timeout_error(f"timed out while {doing}")
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                raise timeout_error(f"timed out while {doing}") from None
            if line is None:
                raise EngineCrashError(self._crash_message(doing))
            result = predicate(line)
            if result is not None:
                return result

    # -- transcript -------------------------------------------------------

    def sent_transcript(self) -> bytes:
        """Every byte written to the engine, in order."""
        return b"".join(self._sent)

    def received_lines(self) -> tuple:
        return tuple(self._received)

    # -- protocol ---------------------------------------------------------

    def handshake(self):
        with self._lock:
            deadline = time.monotonic() + self.config.handshake_timeout
            self._send("uci")
            self._await(
                lambda l: True if l == "uciok" else None,
                deadline,
                "waiting for uciok",
                HandshakeTimeoutError,
            )
            for name, value in self.config.options.items():
                self._send(f"setoption name {name} value {value}")
            self._send("ucinewgame")
            self._send("isready")
            self._await(
                lambda l: True if l == "readyok" else None,
                deadline,
                "waiting for readyok",
                HandshakeTimeoutError,
            )

    def best_move(self, fen: str, moves: Sequence[str] = ()) -> BestMoveResult:
        """Ask for the best move in ``fen`` after ``moves`` have been played.
        The reply is legality-checked locally and SAN-rendered locally."""
        with self._lock:
            if self._closed:
                raise EngineError("session is closed")
            state = parse_fen(fen)
            for token in moves:
                state, _ = apply_uci(state, token)
            self._send(position_line(fen, moves))
            self._send(self.config.go_command)
            deadline = time.monotonic() + self.config.move_timeout
            last_score: list = [None]

            def sift(line: str):
                if line.startswith("info"):
                    match = _SCORE_RE.search(line)
                    if match:
                        last_score[0] = EngineScore(match.group(1), int(match.group(2)))
                    return None
                if line.startswith("bestmove"):
                    parts = line.split()
                    return parts[1] if len(parts) > 1 else "(none)"
                return None

            token = self._await(sift, deadline, "waiting for bestmove", EngineTimeoutError)
            if token == "(none)":
                if legal_moves(state):
                    raise ProtocolError(f"engine returned no move but {fen!r} is not terminal")
                raise TerminalPositionError(f"no legal moves in {state.fen()!r}")
            try:
                _, move = apply_uci(state, token)
            except ChessError as exc:
                raise ProtocolError(f"engine move {token!r} is illegal in {state.fen()!r}: {exc}") from None
            return BestMoveResult(uci_move=move.uci, san=move.san, score=last_score[0])

    def solve_puzzle(self, puzzle: Puzzle) -> PuzzleAttempt:
        """Play the solver side against the puzzle's reference line."""
        with self._lock:
            puzzle.validate()
            state = parse_fen(puzzle.fen)
            history: list = []
            played: list = []
            step = 0
            while True:
                result = self.best_move(puzzle.fen, history)
                played.append(result.uci_move)
                state, _ = apply_uci(state, result.uci_move)
                history.append(result.uci_move)
                expected = puzzle.solution[step]
                if result.uci_move != expected:
                    solved = is_checkmate(state)
                    return PuzzleAttempt(tuple(played), len(played), solved)
                if is_checkmate(state):
                    return PuzzleAttempt(tuple(played), len(played), True)
                step += 1
                if step >= len(puzzle.solution):
                    return PuzzleAttempt(tuple(played), len(played), True)
                reply = puzzle.solution[step]
                state, _ = apply_uci(state, reply)
                history.append(reply)
                step += 1

    def stop(self):
        """Send quit and reap the process; force-kill after a grace period.
        Safe to call twice and on an already-dead engine."""
        with self._lock:
            if self._closed:
                return
            self._closed = True
            if self._process.poll() is None:
                try:
                    self._send("quit")
                except EngineCrashError:
                    pass
            try:
                self._process.wait(timeout=_STOP_GRACE)
            except subprocess.TimeoutExpired:
                self._process.kill()
                self._process.wait()
            self._reader.join(timeout=1.0)
            self._errpump.join(timeout=1.0)


def start_session(config: EngineConfig) -> EngineSession:
    """Spawn the engine and complete the UCI handshake."""
    path = config.executable_path
    resolved = path if os.path.sep in path and os.path.isfile(path) else shutil.which(path)
    if not resolved:
        raise SpawnError(f"engine executable not found: {path!r}")
    try:
        process = subprocess.Popen(
            [resolved, *config.args],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
    except OSError as exc:
        raise SpawnError(f"could not spawn {resolved!r}: {exc}") from None
    session = EngineSession(config, process)
    try:
        session.handshake()
    except EngineError:
        session.stop()
        raise
    return session


def stop_session(session: EngineSession):
    session.stop()


def load_puzzles(path) -> list:
    """Read a puzzle file: {"puzzles": [{id, fen, solution, solution_len,
    source}, ...]}. Every puzzle is replay-validated on load."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    puzzles = []
    seen = set()
    for row in raw["puzzles"]:
        puzzle = Puzzle(
            id=row["id"],
            fen=row["fen"],
            solution=tuple(row["solution"]),
            solution_len=row["solution_len"],
            source=row.get("source", ""),
        )
        if puzzle.id in seen:
            raise ValueError(f"duplicate puzzle id {puzzle.id!r}")
        seen.add(puzzle.id)
        puzzle.validate()
        puzzles.append(puzzle)
    return puzzles
