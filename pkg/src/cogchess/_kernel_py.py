"""Pure-Python move-generation kernel.

Board layout: a flat 64-entry sequence, index = rank * 8 + file with a1 = 0,
h1 = 7, a8 = 56. Piece codes: 0 empty, 1-6 white PNBRQK, 7-12 black pnbrqk.
Side to move: 0 white, 1 black. Castling rights are a bitmask (1 WK, 2 WQ,
4 BK, 8 BQ) and the en-passant target is a square index or -1.

The compiled kernel in _kernel_cy.pyx exposes the same functions; kernel.py
picks one at import time. Keep the two in behavioural lockstep: the parity
tests compare them move-for-move.
"""

WP, WN, WB, WR, WQ, WK = 1, 2, 3, 4, 5, 6
BP, BN, BB, BR, BQ, BK = 7, 8, 9, 10, 11, 12

FLAG_CAPTURE = 1
FLAG_EP = 2
FLAG_CASTLE_K = 4
FLAG_CASTLE_Q = 8
FLAG_DOUBLE = 16

IMPLEMENTATION = "pure-python"

_ROOK_DIRS = ((0, 1), (0, -1), (1, 0), (-1, 0))
_BISHOP_DIRS = ((1, 1), (-1, 1), (1, -1), (-1, -1))


def _build_tables():
    knight, king, rook_rays, bishop_rays = [], [], [], []
    pawn_att_w, pawn_att_b = [], []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        jumps = []
        for df, dr in ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)):
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                jumps.append(nr * 8 + nf)
        knight.append(tuple(jumps))
        steps = []
        for df in (-1, 0, 1):
            for dr in (-1, 0, 1):
                if df == 0 and dr == 0:
                    continue
                nf, nr = f + df, r + dr
                if 0 <= nf < 8 and 0 <= nr < 8:
                    steps.append(nr * 8 + nf)
        king.append(tuple(steps))

        def ray(df, dr):
            out = []
            nf, nr = f + df, r + dr
            while 0 <= nf < 8 and 0 <= nr < 8:
                out.append(nr * 8 + nf)
                nf += df
                nr += dr
            return tuple(out)

        rook_rays.append(tuple(ray(df, dr) for df, dr in _ROOK_DIRS))
        bishop_rays.append(tuple(ray(df, dr) for df, dr in _BISHOP_DIRS))

        # squares a pawn of the given colour would attack this square from
        w_src, b_src = [], []
        for df in (-1, 1):
            nf = f + df
            if 0 <= nf < 8:
                if r - 1 >= 0:
                    w_src.append((r - 1) * 8 + nf)
                if r + 1 < 8:
                    b_src.append((r + 1) * 8 + nf)
        pawn_att_w.append(tuple(w_src))
        pawn_att_b.append(tuple(b_src))
    return knight, king, rook_rays, bishop_rays, pawn_att_w, pawn_att_b


_KNIGHT, _KING, _ROOK_RAYS, _BISHOP_RAYS, _PAWN_SRC_W, _PAWN_SRC_B = _build_tables()

# make_move ANDs rights with the mask of the from- and to-square
_CASTLE_MASK = [15] * 64
_CASTLE_MASK[0] = 15 - 2
_CASTLE_MASK[4] = 15 - 3
_CASTLE_MASK[7] = 15 - 1
_CASTLE_MASK[56] = 15 - 8
_CASTLE_MASK[60] = 15 - 12
_CASTLE_MASK[63] = 15 - 4


def attacked(board, sq, by):
    """Is `sq` attacked by any piece of colour `by` (0 white, 1 black)?"""
    if by == 0:
        for src in _PAWN_SRC_W[sq]:
            if board[src] == WP:
                return True
        n, k, q, r, b = WN, WK, WQ, WR, WB
    else:
        for src in _PAWN_SRC_B[sq]:
            if board[src] == BP:
                return True
        n, k, q, r, b = BN, BK, BQ, BR, BB
    for src in _KNIGHT[sq]:
        if board[src] == n:
            return True
    for src in _KING[sq]:
        if board[src] == k:
            return True
    for ray in _ROOK_RAYS[sq]:
        for src in ray:
            p = board[src]
            if p:
                if p == r or p == q:
                    return True
                break
    for ray in _BISHOP_RAYS[sq]:
        for src in ray:
            p = board[src]
            if p:
                if p == b or p == q:
                    return True
                break
    return False


def king_square(board, color):
    wanted = WK if color == 0 else BK
    for sq in range(64):
        if board[sq] == wanted:
            return sq
    return -1


def in_check(board, color):
    ksq = king_square(board, color)
    return ksq >= 0 and attacked(board, ksq, 1 - color)


def _pseudo_moves(board, stm, castling, ep):
    moves = []
    add = moves.append
    if stm == 0:
        own_lo, own_hi = WP, WK
        enemy_lo, enemy_hi = BP, BK
    else:
        own_lo, own_hi = BP, BK
        enemy_lo, enemy_hi = WP, WK
    for frm in range(64):
        p = board[frm]
        if p < own_lo or p > own_hi:
            continue
        kind = p - 6 if p > 6 else p
        f, r = frm & 7, frm >> 3
        if kind == WP:
            if stm == 0:
                fwd, start_rank, promo_rank = 8, 1, 6
            else:
                fwd, start_rank, promo_rank = -8, 6, 1
            one = frm + fwd
            if board[one] == 0:
                if r == promo_rank:
                    for promo in (WN, WB, WR, WQ):
                        add((frm, one, promo, 0))
                else:
                    add((frm, one, 0, 0))
                    if r == start_rank and board[frm + 2 * fwd] == 0:
                        add((frm, frm + 2 * fwd, 0, FLAG_DOUBLE))
            for df in (-1, 1):
                if not 0 <= f + df < 8:
                    continue
                to = frm + fwd + df
                tp = board[to]
                if enemy_lo <= tp <= enemy_hi:
                    if r == promo_rank:
                        for promo in (WN, WB, WR, WQ):
                            add((frm, to, promo, FLAG_CAPTURE))
                    else:
                        add((frm, to, 0, FLAG_CAPTURE))
                elif to == ep:
                    add((frm, to, 0, FLAG_CAPTURE | FLAG_EP))
        elif kind == WN:
            for to in _KNIGHT[frm]:
                tp = board[to]
                if tp == 0:
                    add((frm, to, 0, 0))
                elif enemy_lo <= tp <= enemy_hi:
                    add((frm, to, 0, FLAG_CAPTURE))
        elif kind == WK:
            for to in _KING[frm]:
                tp = board[to]
                if tp == 0:
                    add((frm, to, 0, 0))
                elif enemy_lo <= tp <= enemy_hi:
                    add((frm, to, 0, FLAG_CAPTURE))
        else:
            if kind == WR:
                rays = _ROOK_RAYS[frm]
            elif kind == WB:
                rays = _BISHOP_RAYS[frm]
            else:
                rays = _ROOK_RAYS[frm] + _BISHOP_RAYS[frm]
            for ray in rays:
                for to in ray:
                    tp = board[to]
                    if tp == 0:
                        add((frm, to, 0, 0))
                        continue
                    if enemy_lo <= tp <= enemy_hi:
                        add((frm, to, 0, FLAG_CAPTURE))
                    break

    # castling: empty corridor, rook at home, king neither in nor moving through check
    if stm == 0 and board[4] == WK:
        if castling & 1 and board[5] == 0 and board[6] == 0 and board[7] == WR:
            if not attacked(board, 4, 1) and not attacked(board, 5, 1) and not attacked(board, 6, 1):
                add((4, 6, 0, FLAG_CASTLE_K))
        if castling & 2 and board[3] == 0 and board[2] == 0 and board[1] == 0 and board[0] == WR:
            if not attacked(board, 4, 1) and not attacked(board, 3, 1) and not attacked(board, 2, 1):
                add((4, 2, 0, FLAG_CASTLE_Q))
    elif stm == 1 and board[60] == BK:
        if castling & 4 and board[61] == 0 and board[62] == 0 and board[63] == BR:
            if not attacked(board, 60, 0) and not attacked(board, 61, 0) and not attacked(board, 62, 0):
                add((60, 62, 0, FLAG_CASTLE_K))
        if castling & 8 and board[59] == 0 and board[58] == 0 and board[57] == 0 and board[56] == BR:
            if not attacked(board, 60, 0) and not attacked(board, 59, 0) and not attacked(board, 58, 0):
                add((60, 58, 0, FLAG_CASTLE_Q))
    return moves


def make_move(board, stm, castling, ep, halfmove, frm, to, promo, flags):
    """Mutate `board` in place; returns (castling, ep, halfmove) after the move."""
    p = board[frm]
    kind = p - 6 if p > 6 else p
    board[frm] = 0
    if flags & FLAG_EP:
        board[to - 8 if stm == 0 else to + 8] = 0
    if promo:
        board[to] = promo if stm == 0 else promo + 6
    else:
        board[to] = p
    if flags & FLAG_CASTLE_K:
        board[frm + 1] = board[frm + 3]
        board[frm + 3] = 0
    elif flags & FLAG_CASTLE_Q:
        board[frm - 1] = board[frm - 4]
        board[frm - 4] = 0
    castling &= _CASTLE_MASK[frm] & _CASTLE_MASK[to]
    new_ep = (frm + to) // 2 if flags & FLAG_DOUBLE else -1
    if kind == WP or flags & FLAG_CAPTURE:
        halfmove = 0
    else:
        halfmove += 1
    return castling, new_ep, halfmove


def generate_moves(board, stm, castling, ep):
    """Legal moves as sorted (frm, to, promo, flags) tuples."""
    own_king = king_square(board, stm)
    legal = []
    for mv in _pseudo_moves(board, stm, castling, ep):
        frm, to, promo, flags = mv
        scratch = bytearray(board)
        make_move(scratch, stm, castling, ep, 0, frm, to, promo, flags)
        ksq = to if frm == own_king else own_king
        if ksq < 0 or not attacked(scratch, ksq, 1 - stm):
            legal.append(mv)
    legal.sort()
    return legal


def perft(board, stm, castling, ep, depth):
    if depth <= 0:
        return 1
    moves = generate_moves(board, stm, castling, ep)
    if depth == 1:
        return len(moves)
    total = 0
    for frm, to, promo, flags in moves:
        scratch = bytearray(board)
        c2, e2, _ = make_move(scratch, stm, castling, ep, 0, frm, to, promo, flags)
        total += perft(scratch, 1 - stm, c2, e2, depth - 1)
    return total
