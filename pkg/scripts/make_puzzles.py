#!/usr/bin/env python3
"""Generate the bundled tactics puzzles by exhaustive mate search.

Samples sparse positions (seeded, deterministic), keeps those where the
side to move has a forced mate in exactly the target number of moves with
a UNIQUE optimal move at every solver decision point along the line, and
emits them to src/cogchess/data/puzzles.json. Opponent replies in the
recorded solution are the most resistant defenses (maximum remaining mate
distance), tie-broken by move ordering, so the line is deterministic.

Uniqueness at every solver node means a deterministic engine searching
deeply enough has exactly one fastest mate available each turn — required
for reproducible opt-in runs against a real engine.

Run from the repo root:  python3 scripts/make_puzzles.py
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cogchess.board import BoardState, CastlingRights, Color, board_to_fen, parse_fen
from cogchess.moves import apply_move, is_checkmate, legal_moves

TARGETS = [(1, 4), (2, 3), (3, 3)]  # (mate distance, how many puzzles)
SEED = 2024


def memo_key(state):
    return (state.codes, state.stm)


class MateSearch:
    """Exact forced-mate distances for the side to move, capped."""

    def __init__(self, cap):
        self.cap = cap
        self._solver = {}
        self._defender = {}

    def solver_mates_in(self, state, n):
        """True if the side to move forces mate in <= n of its own moves."""
        if n <= 0:
            return False
        key = (memo_key(state), n)
        hit = self._solver.get(key)
        if hit is not None:
            return hit
        result = False
        for move in legal_moves(state):
            child = apply_move(state, move)
            if is_checkmate(child):
                result = True
                break
            if n > 1 and self.defender_lost(child, n - 1):
                result = True
                break
        self._solver[key] = result
        return result

    def defender_lost(self, state, n):
        """True if every reply still allows mate in <= n solver moves."""
        key = (memo_key(state), n)
        hit = self._defender.get(key)
        if hit is not None:
            return hit
        moves = legal_moves(state)
        if not moves:
            self._defender[key] = False  # stalemate escape (mate was caught earlier)
            return False
        result = all(self.solver_mates_in(apply_move(state, m), n) for m in moves)
        self._defender[key] = result
        return result

    def exact_distance(self, state):
        """Smallest n <= cap with a forced mate, else None. Solver to move."""
        for n in range(1, self.cap + 1):
            if self.solver_mates_in(state, n):
                return n
        return None

    def optimal_moves(self, state, distance):
        """All solver moves that keep the forced mate at ``distance``."""
        found = []
        for move in legal_moves(state):
            child = apply_move(state, move)
            if distance == 1:
                if is_checkmate(child):
                    found.append(move)
            elif not is_checkmate(child) and self.defender_lost(child, distance - 1):
                found.append(move)
            elif is_checkmate(child):
                found.append(move)  # faster than believed; caller rejects via exact_distance
        return found

    def defense_distance(self, state):
        """Defender to move: the remaining solver distance under best defense."""
        best = 0
        for move in legal_moves(state):
            child = apply_move(state, move)
            d = self.exact_distance(child)
            if d is None:
                return None  # a reply escapes the mate entirely
            best = max(best, d)
        return best


def principal_line(search, state, distance):
    """The unique-optimal solution line, or None if any solver node has
    zero or several optimal moves."""
    line = []
    remaining = distance
    while True:
        optimal = search.optimal_moves(state, remaining)
        if len(optimal) != 1:
            return None
        move = optimal[0]
        line.append(move.uci)
        state = apply_move(state, move)
        if is_checkmate(state):
            return line if remaining == 1 else None
        remaining -= 1
        replies = []
        for reply in legal_moves(state):
            child = apply_move(state, reply)
            d = search.exact_distance(child)
            if d is None or d > remaining:
                return None  # defense refutes the "forced" mate: bug guard
            replies.append((d, reply))
        most_resistant = max(d for d, _ in replies)
        if most_resistant != remaining:
            return None  # line is shorter than claimed against best play
        reply = next(r for d, r in replies if d == most_resistant)
        line.append(reply.uci)
        state = apply_move(state, reply)


def sample_position(rng):
    """A sparse random position: white K + Q/R (+ optional minor/pawn),
    black K (+ up to two pawns), white to move, structurally legal."""
    codes = bytearray(64)
    used = set()

    def place(code, squares):
        square = rng.choice([s for s in squares if s not in used])
        codes[square] = code
        used.add(square)
        return square

    all_squares = list(range(64))
    wking = place(6, all_squares)
    bk_choices = [
        s
        for s in all_squares
        if s not in used and max(abs(s % 8 - wking % 8), abs(s // 8 - wking // 8)) > 1
    ]
    place(12, bk_choices)
    place(rng.choice([5, 4]), all_squares)  # queen or rook
    if rng.random() < 0.5:
        place(rng.choice([4, 3, 2]), all_squares)  # rook/bishop/knight
    for _ in range(rng.randrange(0, 3)):
        pawn_squares = [s for s in range(8, 56) if s not in used]
        place(7, pawn_squares)  # black pawn
    state = BoardState(
        codes=bytes(codes),
        side_to_move=Color.WHITE,
        castling=CastlingRights(False, False, False, False),
        en_passant=None,
        halfmove_clock=0,
        fullmove_number=1,
    )
    try:
        return parse_fen(board_to_fen(state))
    except Exception:
        return None


def opponent_in_check(state):
    # White to move: black must not already stand in check.
    flipped = BoardState(
        codes=state.codes,
        side_to_move=Color.BLACK,
        castling=state.castling,
        en_passant=None,
        halfmove_clock=0,
        fullmove_number=1,
        validated=True,
    )
    from cogchess.moves import is_check

    return is_check(flipped)


def main():
    rng = random.Random(SEED)
    wanted = {distance: count for distance, count in TARGETS}
    found = {distance: [] for distance in wanted}
    seen_fens = set()
    attempts = 0
    while any(len(found[d]) < wanted[d] for d in wanted):
        attempts += 1
        if attempts > 200000:
            raise SystemExit("sampling budget exhausted; loosen the filters")
        state = sample_position(rng)
        if state is None or opponent_in_check(state):
            continue
        fen = state.fen()
        if fen in seen_fens:
            continue
        search = MateSearch(cap=3)
        distance = search.exact_distance(state)
        if distance is None or len(found.get(distance, [wanted.get(distance, 0)] * 99)) >= wanted.get(distance, 0):
            continue
        line = principal_line(search, state, distance)
        if line is None:
            continue
        seen_fens.add(fen)
        found[distance].append({"fen": fen, "solution": line, "solution_len": distance})
        print(f"mate-in-{distance} #{len(found[distance])}: {fen}  {' '.join(line)}")

    puzzles = []
    index = 1
    for distance, _ in TARGETS:
        for row in found[distance]:
            puzzles.append(
                {
                    "id": f"mate-{distance}-{index:02d}",
                    "fen": row["fen"],
                    "solution": row["solution"],
                    "solution_len": row["solution_len"],
                    "source": f"generated: exhaustive search, unique optimal line, seed {SEED}",
                }
            )
            index += 1

    out = Path(__file__).resolve().parent.parent / "src" / "cogchess" / "data" / "puzzles.json"
    out.write_text(json.dumps({"puzzles": puzzles}, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(puzzles)} puzzles to {out} after {attempts} samples")


if __name__ == "__main__":
    main()
