"""The five quality scores.

Every score is a pure function into [0, 1]. Inputs are validated loudly:
a bad count or an out-of-range annotator mark raises ScoreInputError rather
than leaking into an aggregate.

AnticipationInput carries solution_len for reporting, but the anticipation
formula itself uses only matched/system_moves; the solution length plays no
role in the score.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence


class ScoreInputError(ValueError):
    pass


def _check_count(value, name) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScoreInputError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise ScoreInputError(f"{name} must be >= 0, got {value}")
    return value


def capture_score(expected: int, reported: int) -> float:
    """Closeness of a reported capture count to the true count.

    A position with no captures is graded all-or-nothing: only a report of
    zero earns credit. Otherwise the relative error is clamped at zero."""
    _check_count(expected, "expected")
    _check_count(reported, "reported")
    if expected == 0:
        return 1.0 if reported == 0 else 0.0
    return max(0.0, 1.0 - abs(expected - reported) / expected)


def perception_score(fen_sum: float, capture_sum: float, piece_sum: float, total_questions: int) -> float:
    """Per-category score sums over the total perception question count."""
    if _check_count(total_questions, "total_questions") == 0:
        raise ScoreInputError("total_questions must be > 0")
    for name, value in (("fen_sum", fen_sum), ("capture_sum", capture_sum), ("piece_sum", piece_sum)):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScoreInputError(f"{name} must be numeric, got {value!r}")
        if value < 0:
            raise ScoreInputError(f"{name} must be >= 0, got {value}")
    total = fen_sum + capture_sum + piece_sum
    if total > total_questions:
        raise ScoreInputError(f"score sum {total} exceeds question count {total_questions}")
    return total / total_questions


def exact_match_score(correct: float, total: int) -> float:
    """Graded-correct answers over question count (memory and attention)."""
    if _check_count(total, "total") == 0:
        raise ScoreInputError("total must be > 0")
    if not isinstance(correct, (int, float)) or isinstance(correct, bool):
        raise ScoreInputError(f"correct must be numeric, got {correct!r}")
    if correct < 0 or correct > total:
        raise ScoreInputError(f"correct must be in [0, {total}], got {correct}")
    return correct / total


@dataclass(frozen=True)
class MoveAnnotation:
    puzzle_id: str
    move_index: int
    annotator: str
    score: int


def reasoning_score(annotations: Sequence[MoveAnnotation], system_moves: Mapping[str, int]) -> float:
    """Rubric marks averaged per move across annotators, summed per puzzle,
    normalized by the per-puzzle move count and the 0-5 scale.

    system_moves maps puzzle id to the number of moves the engine produced
    for it (n_sys). Only puzzles that appear in `annotations` count toward M.
    """
    if not annotations:
        raise ScoreInputError("reasoning_score needs at least one annotation")
    marks: dict = {}
    for ann in annotations:
        if ann.puzzle_id not in system_moves:
            raise ScoreInputError(f"annotation references unknown puzzle {ann.puzzle_id!r}")
        n_sys = system_moves[ann.puzzle_id]
        if _check_count(n_sys, "system move count") == 0:
            raise ScoreInputError(f"puzzle {ann.puzzle_id!r} has no system moves")
        if isinstance(ann.score, bool) or not isinstance(ann.score, int) or not 0 <= ann.score <= 5:
            raise ScoreInputError(f"score must be an integer in 0..5, got {ann.score!r}")
        if not isinstance(ann.move_index, int) or not 1 <= ann.move_index <= n_sys:
            raise ScoreInputError(
                f"move_index {ann.move_index!r} out of range for puzzle {ann.puzzle_id!r} (n_sys={n_sys})"
            )
        marks.setdefault((ann.puzzle_id, ann.move_index), []).append(ann.score)

    per_puzzle: dict = {}
    for (puzzle_id, _), scores in marks.items():
        mean = sum(scores) / len(scores)
        per_puzzle[puzzle_id] = per_puzzle.get(puzzle_id, 0.0) + mean
    total = sum(per_puzzle[pid] / system_moves[pid] for pid in per_puzzle)
    return total / (5 * len(per_puzzle))


@dataclass(frozen=True)
class AnticipationInput:
    puzzle_id: str
    matched: int
    system_moves: int
    solution_len: Optional[int] = None


def anticipation_score(inputs: Sequence[AnticipationInput]) -> float:
    """Mean over puzzles of min(matched / system_moves, 1)."""
    if not inputs:
        raise ScoreInputError("anticipation_score needs at least one puzzle")
    total = 0.0
    for inp in inputs:
        _check_count(inp.matched, "matched")
        if _check_count(inp.system_moves, "system_moves") == 0:
            raise ScoreInputError(f"puzzle {inp.puzzle_id!r} has system_moves == 0")
        total += min(inp.matched / inp.system_moves, 1.0)
    return total / len(inputs)


_UCI_TOKEN = re.compile(r"^([a-h][1-8])([a-h][1-8])([qrbn])?$")


def _move_triple(item):
    if hasattr(item, "uci"):
        item = item.uci
    if not isinstance(item, str):
        raise ScoreInputError(f"expected a UCI move string or Move, got {item!r}")
    match = _UCI_TOKEN.match(item.strip().lower())
    if match is None:
        raise ScoreInputError(f"bad UCI move {item!r}")
    return match.group(1), match.group(2), match.group(3)


def match_prefix(predicted: Sequence, solution: Sequence) -> int:
    """Length of the longest common prefix of (from, to, promotion) triples.

    Accepts UCI strings or Move objects on either side; comparison ignores
    everything but the squares and the promotion piece."""
    count = 0
    for mine, theirs in zip(predicted, solution):
        if _move_triple(mine) != _move_triple(theirs):
            break
        count += 1
    return count
