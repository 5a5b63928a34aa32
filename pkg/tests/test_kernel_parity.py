"""The compiled and pure kernels must agree call-for-call, not just on
aggregate perft counts."""

import random

import pytest

import cogchess as cc
from cogchess import kernel
from cogchess import _kernel_py as pure

kernels = kernel.available_kernels()
compiled = kernels.get("cython")

pytestmark = pytest.mark.skipif(compiled is None, reason="compiled kernel not built")


def state_args(state):
    return state.codes, state.stm, state.castling.mask, state.ep_index


def sample_states():
    from conftest import playout_positions

    states = playout_positions(seed=7, games=4, max_plies=35)
    states += playout_positions(
        seed=8, games=2, max_plies=10, start_fen="n1n5/PPPk4/8/8/8/8/4Kppp/5N1N b - - 0 1"
    )
    states.append(cc.parse_fen("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1"))
    return states


def test_generate_moves_identical():
    for state in sample_states():
        args = state_args(state)
        assert list(compiled.generate_moves(*args)) == list(pure.generate_moves(*args)), state.fen()


def test_perft_identical():
    fens = [
        cc.START_FEN,
        "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1",
        "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1",
        "n1n5/PPPk4/8/8/8/8/4Kppp/5N1N b - - 0 1",
    ]
    for fen in fens:
        state = cc.parse_fen(fen)
        args = state_args(state)
        for depth in (1, 2, 3):
            assert compiled.perft(*args, depth) == pure.perft(*args, depth), (fen, depth)


def test_make_move_identical():
    rng = random.Random(99)
    for state in sample_states()[::3]:
        args = state_args(state)
        moves = pure.generate_moves(*args)
        if not moves:
            continue
        frm, to, promo, flags = rng.choice(moves)
        board_a = bytearray(state.codes)
        board_b = bytearray(state.codes)
        out_a = pure.make_move(board_a, state.stm, state.castling.mask, state.ep_index, state.halfmove_clock, frm, to, promo, flags)
        out_b = compiled.make_move(board_b, state.stm, state.castling.mask, state.ep_index, state.halfmove_clock, frm, to, promo, flags)
        assert out_a == out_b
        assert board_a == board_b


def test_attack_and_check_queries_identical():
    for state in sample_states()[::2]:
        for color in (0, 1):
            assert compiled.in_check(state.codes, color) == pure.in_check(state.codes, color)
            assert compiled.king_square(state.codes, color) == pure.king_square(state.codes, color)
        for sq in range(0, 64, 7):
            assert compiled.attacked(state.codes, sq, 0) == pure.attacked(state.codes, sq, 0)
            assert compiled.attacked(state.codes, sq, 1) == pure.attacked(state.codes, sq, 1)
