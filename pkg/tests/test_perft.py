"""Move-generation checks against the independent oracle in oracle.py.

The frozen node counts below were computed with the oracle first (they also
agree with the widely published reference values for these positions)."""

import pytest

import cogchess as cc
import oracle


PERFT_CASES = [
    (cc.START_FEN, [20, 400, 8902]),
    ("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1", [48, 2039]),
    ("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1", [14, 191, 2812]),
    ("n1n5/PPPk4/8/8/8/8/4Kppp/5N1N b - - 0 1", [24, 496]),
    ("r3k2r/8/8/8/8/8/6q1/R3K2R w KQkq - 0 1", [21, 862]),
]


@pytest.mark.parametrize("fen,expected", PERFT_CASES)
def test_perft_frozen_values(fen, expected):
    state = cc.parse_fen(fen)
    assert [cc.perft(state, d) for d in range(1, len(expected) + 1)] == expected


@pytest.mark.parametrize("fen,expected", PERFT_CASES)
def test_perft_agrees_with_oracle_depth_two(fen, expected):
    state = oracle.fen_to_state(fen)
    assert [oracle.perft(state, d) for d in (1, 2)] == expected[:2]


def uci_set(state):
    return {m.uci for m in cc.legal_moves(state)}


def oracle_uci_set(fen):
    return {oracle.move_key(m) for m in oracle.legal_moves(oracle.fen_to_state(fen))}


def test_move_sets_match_oracle_during_playouts():
    for state in playout_sample():
        fen = cc.board_to_fen(state)
        assert uci_set(state) == oracle_uci_set(fen), fen


def playout_sample():
    from conftest import playout_positions

    sample = playout_positions(seed=11, games=4, max_plies=30)
    # promotion-heavy tail to cover underpromotion and captures on the last rank
    sample += playout_positions(
        seed=12, games=2, max_plies=12, start_fen="n1n5/PPPk4/8/8/8/8/4Kppp/5N1N b - - 0 1"
    )
    return sample


def test_fen_round_trip_during_playouts():
    from conftest import playout_positions

    for state in playout_positions(seed=21, games=6, max_plies=40):
        fen = cc.board_to_fen(state)
        assert cc.parse_fen(fen) == state


def test_check_status_matches_oracle():
    from conftest import playout_positions

    for state in playout_positions(seed=31, games=3, max_plies=30):
        assert cc.is_check(state) == oracle.in_check(oracle.fen_to_state(cc.board_to_fen(state)))


def test_perft_two_matches_oracle_on_random_positions():
    from conftest import playout_positions

    sample = playout_positions(seed=41, games=2, max_plies=25)[::5]
    for state in sample:
        fen = cc.board_to_fen(state)
        assert cc.perft(state, 2) == oracle.perft(oracle.fen_to_state(fen), 2), fen
