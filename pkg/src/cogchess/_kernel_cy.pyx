# cython: language_level=3
"""Compiled move-generation kernel.

Same functions, arguments and move ordering as _kernel_py, but built on a
10x12 mailbox board internally. kernel.py prefers this module when the
extension compiled; the parity tests hold the two implementations together.
"""

from libc.string cimport memcpy, memset

IMPLEMENTATION = "cython"

cdef enum:
    WP = 1
    WN = 2
    WB = 3
    WR = 4
    WQ = 5
    WK = 6
    BP = 7
    BN = 8
    BB = 9
    BR = 10
    BQ = 11
    BK = 12

cdef enum:
    F_CAPTURE = 1
    F_EP = 2
    F_CASTLE_K = 4
    F_CASTLE_Q = 8
    F_DOUBLE = 16

cdef int[120] M2S
cdef int[64] S2M
cdef int[64] CASTLE_MASK
cdef int[8] KNIGHT_D
cdef int[8] KING_D
cdef int[4] ROOK_D
cdef int[4] BISHOP_D

cdef int _i, _f, _r
for _i in range(120):
    M2S[_i] = -1
for _r in range(8):
    for _f in range(8):
        S2M[_r * 8 + _f] = 21 + _r * 10 + _f
        M2S[21 + _r * 10 + _f] = _r * 8 + _f
for _i in range(64):
    CASTLE_MASK[_i] = 15
CASTLE_MASK[0] = 13
CASTLE_MASK[4] = 12
CASTLE_MASK[7] = 14
CASTLE_MASK[56] = 7
CASTLE_MASK[60] = 3
CASTLE_MASK[63] = 11

KNIGHT_D[:] = [-21, -19, -12, -8, 8, 12, 19, 21]
KING_D[:] = [-11, -10, -9, -1, 1, 9, 10, 11]
ROOK_D[:] = [-10, -1, 1, 10]
BISHOP_D[:] = [-11, -9, 9, 11]


cdef void _to120(const unsigned char[:] board, unsigned char* b) nogil:
    cdef int i
    memset(b, 255, 120)
    for i in range(64):
        b[S2M[i]] = board[i]


cdef bint _attacked(unsigned char* b, int sq, int by) nogil:
    cdef int i, t, p
    if by == 0:
        if b[sq - 9] == WP or b[sq - 11] == WP:
            return True
        for i in range(8):
            if b[sq + KNIGHT_D[i]] == WN:
                return True
            if b[sq + KING_D[i]] == WK:
                return True
        for i in range(4):
            t = sq + ROOK_D[i]
            while b[t] == 0:
                t += ROOK_D[i]
            p = b[t]
            if p == WR or p == WQ:
                return True
            t = sq + BISHOP_D[i]
            while b[t] == 0:
                t += BISHOP_D[i]
            p = b[t]
            if p == WB or p == WQ:
                return True
    else:
        if b[sq + 9] == BP or b[sq + 11] == BP:
            return True
        for i in range(8):
            if b[sq + KNIGHT_D[i]] == BN:
                return True
            if b[sq + KING_D[i]] == BK:
                return True
        for i in range(4):
            t = sq + ROOK_D[i]
            while b[t] == 0:
                t += ROOK_D[i]
            p = b[t]
            if p == BR or p == BQ:
                return True
            t = sq + BISHOP_D[i]
            while b[t] == 0:
                t += BISHOP_D[i]
            p = b[t]
            if p == BB or p == BQ:
                return True
    return False


cdef int _king120(unsigned char* b, int color) nogil:
    cdef int i
    cdef int wanted = WK if color == 0 else BK
    for i in range(64):
        if b[S2M[i]] == wanted:
            return S2M[i]
    return -1


cdef void _make120(unsigned char* b, int stm, int frm, int to, int promo, int flags) nogil:
    cdef unsigned char piece = b[frm]
    b[frm] = 0
    if flags & F_EP:
        b[to - 10 if stm == 0 else to + 10] = 0
    if promo:
        b[to] = <unsigned char> (promo if stm == 0 else promo + 6)
    else:
        b[to] = piece
    if flags & F_CASTLE_K:
        b[frm + 1] = b[frm + 3]
        b[frm + 3] = 0
    elif flags & F_CASTLE_Q:
        b[frm - 1] = b[frm - 4]
        b[frm - 4] = 0


cdef int _gen(unsigned char* b, int stm, int castling, int ep120, int* out) nogil:
    """Pseudo-legal moves as (frm64, to64, promo, flags) quadruples in `out`.
    Returns the move count. Legality filtering happens in the callers."""
    cdef int n = 0, sq, frm, to, i, d, p, kind, enemy_lo, enemy_hi
    cdef int fwd, start_rank, promo_rank, rank
    cdef int own_lo, own_hi
    if stm == 0:
        own_lo, own_hi, enemy_lo, enemy_hi = WP, WK, BP, BK
        fwd, start_rank, promo_rank = 10, 1, 6
    else:
        own_lo, own_hi, enemy_lo, enemy_hi = BP, BK, WP, WK
        fwd, start_rank, promo_rank = -10, 6, 1

    for sq in range(64):
        frm = S2M[sq]
        p = b[frm]
        if p < own_lo or p > own_hi:
            continue
        kind = p - 6 if p > 6 else p
        rank = sq >> 3
        if kind == WP:
            to = frm + fwd
            if b[to] == 0:
                if rank == promo_rank:
                    for i in range(4):
                        out[n * 4] = sq
                        out[n * 4 + 1] = M2S[to]
                        out[n * 4 + 2] = WN + i
                        out[n * 4 + 3] = 0
                        n += 1
                else:
                    out[n * 4] = sq
                    out[n * 4 + 1] = M2S[to]
                    out[n * 4 + 2] = 0
                    out[n * 4 + 3] = 0
                    n += 1
                    if rank == start_rank and b[frm + 2 * fwd] == 0:
                        out[n * 4] = sq
                        out[n * 4 + 1] = M2S[frm + 2 * fwd]
                        out[n * 4 + 2] = 0
                        out[n * 4 + 3] = F_DOUBLE
                        n += 1
            for d in range(-1, 2, 2):
                to = frm + fwd + d
                p = b[to]
                if enemy_lo <= p <= enemy_hi:
                    if rank == promo_rank:
                        for i in range(4):
                            out[n * 4] = sq
                            out[n * 4 + 1] = M2S[to]
                            out[n * 4 + 2] = WN + i
                            out[n * 4 + 3] = F_CAPTURE
                            n += 1
                    else:
                        out[n * 4] = sq
                        out[n * 4 + 1] = M2S[to]
                        out[n * 4 + 2] = 0
                        out[n * 4 + 3] = F_CAPTURE
                        n += 1
                elif to == ep120:
                    out[n * 4] = sq
                    out[n * 4 + 1] = M2S[to]
                    out[n * 4 + 2] = 0
                    out[n * 4 + 3] = F_CAPTURE | F_EP
                    n += 1
        elif kind == WN or kind == WK:
            for i in range(8):
                to = frm + (KNIGHT_D[i] if kind == WN else KING_D[i])
                p = b[to]
                if p == 0 or enemy_lo <= p <= enemy_hi:
                    out[n * 4] = sq
                    out[n * 4 + 1] = M2S[to]
                    out[n * 4 + 2] = 0
                    out[n * 4 + 3] = F_CAPTURE if p else 0
                    n += 1
        else:
            for i in range(4):
                if kind == WR:
                    d = ROOK_D[i]
                elif kind == WB:
                    d = BISHOP_D[i]
                else:
                    d = ROOK_D[i]
                to = frm + d
                while True:
                    p = b[to]
                    if p == 0:
                        out[n * 4] = sq
                        out[n * 4 + 1] = M2S[to]
                        out[n * 4 + 2] = 0
                        out[n * 4 + 3] = 0
                        n += 1
                        to += d
                        continue
                    if enemy_lo <= p <= enemy_hi:
                        out[n * 4] = sq
                        out[n * 4 + 1] = M2S[to]
                        out[n * 4 + 2] = 0
                        out[n * 4 + 3] = F_CAPTURE
                        n += 1
                    break
            if kind == WQ:
                for i in range(4):
                    d = BISHOP_D[i]
                    to = frm + d
                    while True:
                        p = b[to]
                        if p == 0:
                            out[n * 4] = sq
                            out[n * 4 + 1] = M2S[to]
                            out[n * 4 + 2] = 0
                            out[n * 4 + 3] = 0
                            n += 1
                            to += d
                            continue
                        if enemy_lo <= p <= enemy_hi:
                            out[n * 4] = sq
                            out[n * 4 + 1] = M2S[to]
                            out[n * 4 + 2] = 0
                            out[n * 4 + 3] = F_CAPTURE
                            n += 1
                        break

    cdef int e1 = S2M[4], e8 = S2M[60]
    if stm == 0 and b[e1] == WK:
        if castling & 1 and b[e1 + 1] == 0 and b[e1 + 2] == 0 and b[e1 + 3] == WR:
            if not _attacked(b, e1, 1) and not _attacked(b, e1 + 1, 1) and not _attacked(b, e1 + 2, 1):
                out[n * 4] = 4
                out[n * 4 + 1] = 6
                out[n * 4 + 2] = 0
                out[n * 4 + 3] = F_CASTLE_K
                n += 1
        if castling & 2 and b[e1 - 1] == 0 and b[e1 - 2] == 0 and b[e1 - 3] == 0 and b[e1 - 4] == WR:
            if not _attacked(b, e1, 1) and not _attacked(b, e1 - 1, 1) and not _attacked(b, e1 - 2, 1):
                out[n * 4] = 4
                out[n * 4 + 1] = 2
                out[n * 4 + 2] = 0
                out[n * 4 + 3] = F_CASTLE_Q
                n += 1
    elif stm == 1 and b[e8] == BK:
        if castling & 4 and b[e8 + 1] == 0 and b[e8 + 2] == 0 and b[e8 + 3] == BR:
            if not _attacked(b, e8, 0) and not _attacked(b, e8 + 1, 0) and not _attacked(b, e8 + 2, 0):
                out[n * 4] = 60
                out[n * 4 + 1] = 62
                out[n * 4 + 2] = 0
                out[n * 4 + 3] = F_CASTLE_K
                n += 1
        if castling & 8 and b[e8 - 1] == 0 and b[e8 - 2] == 0 and b[e8 - 3] == 0 and b[e8 - 4] == BR:
            if not _attacked(b, e8, 0) and not _attacked(b, e8 - 1, 0) and not _attacked(b, e8 - 2, 0):
                out[n * 4] = 60
                out[n * 4 + 1] = 58
                out[n * 4 + 2] = 0
                out[n * 4 + 3] = F_CASTLE_Q
                n += 1
    return n


def attacked(board, int sq, int by):
    """Is square `sq` (0..63) attacked by colour `by`?"""
    cdef unsigned char b[120]
    cdef const unsigned char[:] view = board
    _to120(view, b)
    return bool(_attacked(b, S2M[sq], by))


def king_square(board, int color):
    cdef unsigned char b[120]
    cdef const unsigned char[:] view = board
    _to120(view, b)
    cdef int k = _king120(b, color)
    return -1 if k < 0 else M2S[k]


def in_check(board, int color):
    cdef unsigned char b[120]
    cdef const unsigned char[:] view = board
    _to120(view, b)
    cdef int k = _king120(b, color)
    if k < 0:
        return False
    return bool(_attacked(b, k, 1 - color))


def generate_moves(board, int stm, int castling, int ep):
    """Legal moves as sorted (frm, to, promo, flags) tuples."""
    cdef unsigned char b[120]
    cdef unsigned char b2[120]
    cdef int mvs[1024]
    cdef const unsigned char[:] view = board
    cdef int n, i, frm, to, promo, flags, king, ksq
    cdef int ep120 = S2M[ep] if ep >= 0 else -1
    _to120(view, b)
    n = _gen(b, stm, castling, ep120, mvs)
    king = _king120(b, stm)
    result = []
    for i in range(n):
        frm = mvs[i * 4]
        to = mvs[i * 4 + 1]
        promo = mvs[i * 4 + 2]
        flags = mvs[i * 4 + 3]
        memcpy(b2, b, 120)
        _make120(b2, stm, S2M[frm], S2M[to], promo, flags)
        ksq = S2M[to] if S2M[frm] == king else king
        if ksq < 0 or not _attacked(b2, ksq, 1 - stm):
            result.append((frm, to, promo, flags))
    result.sort()
    return result


def make_move(board, int stm, int castling, int ep, int halfmove, int frm, int to, int promo, int flags):
    """Mutate the 64-square board in place; returns (castling, ep, halfmove)."""
    cdef unsigned char[:] view = board
    cdef int piece = view[frm]
    cdef int kind = piece - 6 if piece > 6 else piece
    view[frm] = 0
    if flags & F_EP:
        view[to - 8 if stm == 0 else to + 8] = 0
    if promo:
        view[to] = <unsigned char> (promo if stm == 0 else promo + 6)
    else:
        view[to] = <unsigned char> piece
    if flags & F_CASTLE_K:
        view[frm + 1] = view[frm + 3]
        view[frm + 3] = 0
    elif flags & F_CASTLE_Q:
        view[frm - 1] = view[frm - 4]
        view[frm - 4] = 0
    castling &= CASTLE_MASK[frm] & CASTLE_MASK[to]
    cdef int new_ep = (frm + to) // 2 if flags & F_DOUBLE else -1
    if kind == WP or flags & F_CAPTURE:
        halfmove = 0
    else:
        halfmove += 1
    return castling, new_ep, halfmove


cdef long _perft(unsigned char* b, int stm, int castling, int ep120, int depth) nogil:
    cdef unsigned char b2[120]
    cdef int mvs[1024]
    cdef int n, i, frm120, to120, promo, flags, king, ksq, c2, ep2
    cdef long total = 0
    n = _gen(b, stm, castling, ep120, mvs)
    king = _king120(b, stm)
    for i in range(n):
        frm120 = S2M[mvs[i * 4]]
        to120 = S2M[mvs[i * 4 + 1]]
        promo = mvs[i * 4 + 2]
        flags = mvs[i * 4 + 3]
        memcpy(b2, b, 120)
        _make120(b2, stm, frm120, to120, promo, flags)
        ksq = to120 if frm120 == king else king
        if ksq < 0 or _attacked(b2, ksq, 1 - stm):
            continue
        if depth == 1:
            total += 1
            continue
        c2 = castling & CASTLE_MASK[mvs[i * 4]] & CASTLE_MASK[mvs[i * 4 + 1]]
        ep2 = -1
        if flags & F_DOUBLE:
            ep2 = S2M[(mvs[i * 4] + mvs[i * 4 + 1]) // 2]
        total += _perft(b2, 1 - stm, c2, ep2, depth - 1)
    return total


def perft(board, int stm, int castling, int ep, int depth):
    if depth <= 0:
        return 1
    cdef unsigned char b[120]
    cdef const unsigned char[:] view = board
    cdef int ep120 = S2M[ep] if ep >= 0 else -1
    _to120(view, b)
    cdef long total
    with nogil:
        total = _perft(b, stm, castling, ep120, depth)
    return total
