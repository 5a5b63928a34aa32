"""Compare the compiled and pure move kernels.

Run:  python benchmarks/bench_kernel.py [--depth 4]
"""

import argparse
import random
import time

from cogchess import START_FEN, parse_fen
from cogchess.kernel import available_kernels

TRICKY_FEN = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1"


def time_perft(impl, state, depth):
    start = time.perf_counter()
    nodes = impl.perft(state.codes, state.stm, state.castling.mask, state.ep_index, depth)
    return nodes, time.perf_counter() - start


def time_playouts(impl, games, plies, seed):
    rng = random.Random(seed)
    start = time.perf_counter()
    moves_made = 0
    for _ in range(games):
        board = bytearray(parse_fen(START_FEN).codes)
        stm, castling, ep, halfmove = 0, 15, -1, 0
        for _ in range(plies):
            moves = impl.generate_moves(board, stm, castling, ep)
            if not moves:
                break
            frm, to, promo, flags = rng.choice(moves)
            castling, ep, halfmove = impl.make_move(board, stm, castling, ep, halfmove, frm, to, promo, flags)
            stm = 1 - stm
            moves_made += 1
    return moves_made, time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--depth", type=int, default=4, help="perft depth (default 4)")
    parser.add_argument("--games", type=int, default=200, help="random playout games")
    parser.add_argument("--plies", type=int, default=60, help="max plies per playout")
    args = parser.parse_args()

    kernels = available_kernels()
    if len(kernels) == 1:
        print("note: compiled kernel not built; timing the pure kernel only")

    rows = []
    for name, impl in sorted(kernels.items()):
        start = parse_fen(START_FEN)
        tricky = parse_fen(TRICKY_FEN)
        nodes_a, t_a = time_perft(impl, start, args.depth)
        nodes_b, t_b = time_perft(impl, tricky, max(1, args.depth - 1))
        made, t_c = time_playouts(impl, args.games, args.plies, seed=2024)
        rows.append((name, nodes_a, t_a, nodes_b, t_b, made, t_c))

    print(f"{'kernel':<14} {'perft nodes':>12} {'perft s':>9} {'tricky nodes':>13} {'tricky s':>9} {'playout moves':>14} {'playout s':>10}")
    for name, na, ta, nb, tb, made, tc in rows:
        print(f"{name:<14} {na:>12} {ta:>9.3f} {nb:>13} {tb:>9.3f} {made:>14} {tc:>10.3f}")

    if len(rows) == 2:
        by_name = {r[0]: r for r in rows}
        pure_row = by_name["pure-python"]
        fast_row = [r for r in rows if r[0] != "pure-python"][0]
        print(f"\nperft speedup:   {pure_row[2] / fast_row[2]:.1f}x")
        print(f"playout speedup: {pure_row[6] / fast_row[6]:.1f}x")


if __name__ == "__main__":
    main()
