import random

import pytest

import cogchess as cc


def playout_positions(seed, games=5, max_plies=40, start_fen=None):
    """Positions visited during random legal playouts, start position included."""
    rng = random.Random(seed)
    positions = []
    for _ in range(games):
        state = cc.parse_fen(start_fen) if start_fen else cc.start_position()
        positions.append(state)
        for _ in range(max_plies):
            moves = cc.legal_moves(state)
            if not moves:
                break
            state = cc.apply_move(state, rng.choice(moves))
            positions.append(state)
    return positions


@pytest.fixture
def start():
    return cc.start_position()
