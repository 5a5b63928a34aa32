"""Legal moves, SAN round-tripping, game replay and capture accounting.

SAN is emitted canonically: minimal disambiguation, "x" on captures, "=Q"
promotions, O-O/O-O-O castling, and a computed "+"/"#" suffix. The parser is
more tolerant than the emitter: it accepts 0-0 spellings, trailing +/#/!/?,
an optional "e.p." tag and lowercase promotion letters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from . import kernel
from ._kernel_py import (
    FLAG_CAPTURE,
    FLAG_CASTLE_K,
    FLAG_CASTLE_Q,
    FLAG_EP,
)
from .board import (
    FILES,
    RANKS,
    AmbiguousSanError,
    BoardState,
    CastlingRights,
    ChessError,
    Color,
    IllegalMoveError,
    PieceKind,
    SanError,
    ValidationError,
    _CODE_KIND,
    _KIND_CODE,
    parse_fen,
    piece_inventory,
    square_name,
    start_position,
)


@dataclass(frozen=True)
class Move:
    from_square: int
    to_square: int
    piece: PieceKind
    promotion: Optional[PieceKind]
    is_capture: bool
    is_en_passant: bool
    castle: Optional[str]
    san: str

    @property
    def uci(self) -> str:
        tail = self.promotion.value.lower() if self.promotion else ""
        return square_name(self.from_square) + square_name(self.to_square) + tail


class ReplayError(ChessError):
    def __init__(self, message: str, ply: int, token: str):
        super().__init__(message)
        self.ply = ply
        self.token = token


def _require_validated(state: BoardState) -> None:
    if not state.validated:
        raise ValidationError("operation requires a validated BoardState")


def _raw_moves(state: BoardState):
    return kernel.generate_moves(state.codes, state.stm, state.castling.mask, state.ep_index)


def _kind_at(state: BoardState, sq: int) -> PieceKind:
    code = state.codes[sq]
    return _CODE_KIND[code if code <= 6 else code - 6]


def _apply_raw(state: BoardState, frm: int, to: int, promo: int, flags: int) -> BoardState:
    scratch = bytearray(state.codes)
    mask, ep, halfmove = kernel.make_move(
        scratch, state.stm, state.castling.mask, state.ep_index, state.halfmove_clock, frm, to, promo, flags
    )
    fullmove = state.fullmove_number + (1 if state.side_to_move is Color.BLACK else 0)
    return BoardState(
        bytes(scratch),
        state.side_to_move.opponent,
        CastlingRights.from_mask(mask),
        None if ep < 0 else ep,
        halfmove,
        fullmove,
        validated=state.validated,
    )


def _san_for(state: BoardState, raw, siblings) -> str:
    frm, to, promo, flags = raw
    if flags & FLAG_CASTLE_K:
        base = "O-O"
    elif flags & FLAG_CASTLE_Q:
        base = "O-O-O"
    else:
        kind = _kind_at(state, frm)
        target = square_name(to)
        if kind is PieceKind.PAWN:
            base = FILES[frm & 7] + "x" + target if flags & FLAG_CAPTURE else target
            if promo:
                base += "=" + _CODE_KIND[promo].value
        else:
            rivals = [
                s
                for s in siblings
                if s is not raw and s[1] == to and s[0] != frm and _kind_at(state, s[0]) is kind
            ]
            disambig = ""
            if rivals:
                file_shared = any(r[0] & 7 == frm & 7 for r in rivals)
                rank_shared = any(r[0] >> 3 == frm >> 3 for r in rivals)
                if not file_shared:
                    disambig = FILES[frm & 7]
                elif not rank_shared:
                    disambig = RANKS[frm >> 3]
                else:
                    disambig = square_name(frm)
            base = kind.value + disambig + ("x" if flags & FLAG_CAPTURE else "") + target
    child = _apply_raw(state, frm, to, promo, flags)
    if kernel.in_check(child.codes, child.stm):
        replies = kernel.generate_moves(child.codes, child.stm, child.castling.mask, child.ep_index)
        base += "+" if replies else "#"
    return base


def _build_move(state: BoardState, raw, siblings) -> Move:
    frm, to, promo, flags = raw
    castle = "K" if flags & FLAG_CASTLE_K else "Q" if flags & FLAG_CASTLE_Q else None
    return Move(
        from_square=frm,
        to_square=to,
        piece=_kind_at(state, frm),
        promotion=_CODE_KIND[promo] if promo else None,
        is_capture=bool(flags & FLAG_CAPTURE),
        is_en_passant=bool(flags & FLAG_EP),
        castle=castle,
        san=_san_for(state, raw, siblings),
    )


def legal_moves(state: BoardState) -> tuple:
    """All legal moves with canonical SAN, sorted by (from, to, promotion)."""
    _require_validated(state)
    raws = _raw_moves(state)
    return tuple(_build_move(state, raw, raws) for raw in raws)


def _find_raw(state: BoardState, move: Move):
    promo = _KIND_CODE[move.promotion] if move.promotion else 0
    for raw in _raw_moves(state):
        if raw[0] == move.from_square and raw[1] == move.to_square and raw[2] == promo:
            return raw
    raise IllegalMoveError(f"move {move.uci} is not legal in this position")


def apply_move(state: BoardState, move: Move) -> BoardState:
    """Apply a Move produced for this state (membership is re-checked)."""
    _require_validated(state)
    frm, to, promo, flags = _find_raw(state, move)
    return _apply_raw(state, frm, to, promo, flags)


_SAN_RE = re.compile(
    r"^(?P<piece>[KQRBN])?(?P<ffile>[a-h])?(?P<frank>[1-8])?(?P<cap>x)?"
    r"(?P<target>[a-h][1-8])(?:=?(?P<promo>[QRBNqrbn]))?$"
)
_UCI_RE = re.compile(r"^(?P<frm>[a-h][1-8])(?P<to>[a-h][1-8])(?P<promo>[qrbnQRBN])?$")


def _clean_san_token(token: str) -> str:
    text = token.strip()
    text = re.sub(r"\s*e\.p\.?$", "", text, flags=re.IGNORECASE)
    while text and text[-1] in "+#!?":
        text = text[:-1]
    return text


def apply_san(state: BoardState, token: str):
    """Apply one SAN token; returns (new state, Move)."""
    _require_validated(state)
    cleaned = _clean_san_token(token)
    if not cleaned:
        raise SanError(f"empty move token {token!r}")
    moves = legal_moves(state)

    if cleaned in ("O-O", "0-0") or cleaned in ("O-O-O", "0-0-0"):
        wanted = "K" if cleaned in ("O-O", "0-0") else "Q"
        for mv in moves:
            if mv.castle == wanted:
                return apply_move(state, mv), mv
        raise IllegalMoveError(f"castling move {token!r} is not legal here")

    parsed = _SAN_RE.match(cleaned)
    if parsed is None:
        raise SanError(f"unparseable move token {token!r}")
    kind = PieceKind(parsed["piece"]) if parsed["piece"] else PieceKind.PAWN
    promo = PieceKind(parsed["promo"].upper()) if parsed["promo"] else None
    from_file = parsed["ffile"]
    from_rank = parsed["frank"]
    target = parsed["target"]
    plain_pawn_push = kind is PieceKind.PAWN and parsed["cap"] is None and from_file is None

    candidates = []
    for mv in moves:
        if mv.castle is not None or mv.piece is not kind:
            continue
        if square_name(mv.to_square) != target:
            continue
        if from_file is not None and FILES[mv.from_square & 7] != from_file:
            continue
        if from_rank is not None and RANKS[mv.from_square >> 3] != from_rank:
            continue
        if mv.promotion is not promo:
            continue
        if plain_pawn_push and mv.is_capture:
            continue
        candidates.append(mv)

    if not candidates:
        raise IllegalMoveError(f"no legal move matches {token!r}")
    if len(candidates) > 1:
        options = ", ".join(c.uci for c in candidates)
        raise AmbiguousSanError(f"{token!r} is ambiguous: matches {options}")
    chosen = candidates[0]
    return apply_move(state, chosen), chosen


def apply_uci(state: BoardState, text: str):
    """Apply a long-algebraic move ("e2e4", "e7e8q"); returns (new state, Move)."""
    _require_validated(state)
    parsed = _UCI_RE.match(text.strip())
    if parsed is None:
        raise SanError(f"unparseable UCI move {text!r}")
    promo = PieceKind(parsed["promo"].upper()) if parsed["promo"] else None
    for mv in legal_moves(state):
        if (
            square_name(mv.from_square) == parsed["frm"]
            and square_name(mv.to_square) == parsed["to"]
            and mv.promotion is promo
        ):
            return apply_move(state, mv), mv
    raise IllegalMoveError(f"UCI move {text!r} is not legal in this position")


@dataclass(frozen=True)
class GameRecord:
    moves: tuple
    start_fen: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(self.moves))


class ReplayResult(NamedTuple):
    final: BoardState
    moves: tuple


def replay(record: GameRecord) -> ReplayResult:
    """Fold apply_san over the record. Errors name the failing ply and token."""
    state = parse_fen(record.start_fen) if record.start_fen else start_position()
    played = []
    for index, token in enumerate(record.moves):
        try:
            state, move = apply_san(state, token)
        except ChessError as exc:
            raise ReplayError(f"ply {index + 1} ({token!r}): {exc}", ply=index + 1, token=token) from exc
        played.append(move)
    return ReplayResult(state, tuple(played))


@dataclass(frozen=True)
class CaptureEvent:
    ply: int
    san: str
    by: Color
    captured: PieceKind


@dataclass(frozen=True)
class CaptureSummary:
    total_captures: int
    captures_by: dict
    remaining: dict
    remaining_by_kind: dict
    events: tuple
    final: BoardState


def capture_summary(record: GameRecord) -> CaptureSummary:
    """Replay the record and account for every capture. Kings count as pieces."""
    state = parse_fen(record.start_fen) if record.start_fen else start_position()
    events = []
    captures_by = {Color.WHITE: 0, Color.BLACK: 0}
    for index, token in enumerate(record.moves):
        try:
            next_state, move = apply_san(state, token)
        except ChessError as exc:
            raise ReplayError(f"ply {index + 1} ({token!r}): {exc}", ply=index + 1, token=token) from exc
        if move.is_capture:
            if move.is_en_passant:
                taken = PieceKind.PAWN
            else:
                taken = state.piece_at(move.to_square).kind
            captures_by[state.side_to_move] += 1
            events.append(CaptureEvent(ply=index + 1, san=move.san, by=state.side_to_move, captured=taken))
        state = next_state
    inventory = piece_inventory(state)
    remaining = {color: sum(kinds.values()) for color, kinds in inventory.items()}
    return CaptureSummary(
        total_captures=len(events),
        captures_by=captures_by,
        remaining=remaining,
        remaining_by_kind=inventory,
        events=tuple(events),
        final=state,
    )


def is_check(state: BoardState) -> bool:
    _require_validated(state)
    return kernel.in_check(state.codes, state.stm)


def is_checkmate(state: BoardState) -> bool:
    _require_validated(state)
    return kernel.in_check(state.codes, state.stm) and not _raw_moves(state)


def is_stalemate(state: BoardState) -> bool:
    _require_validated(state)
    return not kernel.in_check(state.codes, state.stm) and not _raw_moves(state)


class DrawFlags(NamedTuple):
    fifty_move: bool
    threefold_repetition: bool


def draw_flags(record: GameRecord) -> DrawFlags:
    """Detect claimable draws along a replay. Detection only: nothing in this
    package ever adjudicates a draw."""
    state = parse_fen(record.start_fen) if record.start_fen else start_position()
    seen = {state.position_key(): 1}
    fifty = state.halfmove_clock >= 100
    threefold = False
    for index, token in enumerate(record.moves):
        try:
            state, _ = apply_san(state, token)
        except ChessError as exc:
            raise ReplayError(f"ply {index + 1} ({token!r}): {exc}", ply=index + 1, token=token) from exc
        key = state.position_key()
        seen[key] = seen.get(key, 0) + 1
        if seen[key] >= 3:
            threefold = True
        if state.halfmove_clock >= 100:
            fifty = True
    return DrawFlags(fifty_move=fifty, threefold_repetition=threefold)


def perft(state: BoardState, depth: int) -> int:
    """Node count of the legal-move tree; the standard movegen correctness probe."""
    _require_validated(state)
    return kernel.perft(state.codes, state.stm, state.castling.mask, state.ep_index, depth)
