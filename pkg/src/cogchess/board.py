"""Board state and FEN handling.

A position is an immutable BoardState. Parsing is split into two steps:
structural FEN checks (field counts, rank sums, piece letters) and semantic
validation (king counts, pawn sanity, en-passant consistency). parse_fen
runs both by default; pass validate=False to inspect structurally sound but
semantically odd positions. Move queries refuse unvalidated states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from . import _kernel_py as _codes_

FILES = "abcdefgh"
RANKS = "12345678"

START_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


class ChessError(ValueError):
    """Base class for board, FEN and move errors."""


class FenError(ChessError):
    pass


class ValidationError(ChessError):
    pass


class SanError(ChessError):
    """A move token that cannot be parsed."""


class AmbiguousSanError(SanError):
    """A token that matches more than one legal move."""


class IllegalMoveError(SanError):
    """A well-formed token that matches no legal move."""


class Color(enum.Enum):
    WHITE = "w"
    BLACK = "b"

    @property
    def opponent(self) -> "Color":
        return Color.BLACK if self is Color.WHITE else Color.WHITE


class PieceKind(enum.Enum):
    PAWN = "P"
    KNIGHT = "N"
    BISHOP = "B"
    ROOK = "R"
    QUEEN = "Q"
    KING = "K"


@dataclass(frozen=True)
class Piece:
    color: Color
    kind: PieceKind

    @property
    def letter(self) -> str:
        ch = self.kind.value
        return ch if self.color is Color.WHITE else ch.lower()


_KIND_CODE = {
    PieceKind.PAWN: _codes_.WP,
    PieceKind.KNIGHT: _codes_.WN,
    PieceKind.BISHOP: _codes_.WB,
    PieceKind.ROOK: _codes_.WR,
    PieceKind.QUEEN: _codes_.WQ,
    PieceKind.KING: _codes_.WK,
}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}
_LETTER_CODE = {}
for _kind, _code in _KIND_CODE.items():
    _LETTER_CODE[_kind.value] = _code
    _LETTER_CODE[_kind.value.lower()] = _code + 6


def square_index(name: str) -> int:
    """"e4" -> 28. Index = rank*8 + file, a1 = 0."""
    if len(name) != 2 or name[0] not in FILES or name[1] not in RANKS:
        raise ChessError(f"bad square name {name!r}")
    return RANKS.index(name[1]) * 8 + FILES.index(name[0])


def square_name(index: int) -> str:
    if not 0 <= index <= 63:
        raise ChessError(f"square index out of range: {index}")
    return FILES[index & 7] + RANKS[index >> 3]


def piece_from_code(code: int) -> Optional[Piece]:
    if code == 0:
        return None
    color = Color.WHITE if code <= 6 else Color.BLACK
    return Piece(color, _CODE_KIND[code if code <= 6 else code - 6])


@dataclass(frozen=True)
class CastlingRights:
    white_kingside: bool = False
    white_queenside: bool = False
    black_kingside: bool = False
    black_queenside: bool = False

    @classmethod
    def from_mask(cls, mask: int) -> "CastlingRights":
        return cls(bool(mask & 1), bool(mask & 2), bool(mask & 4), bool(mask & 8))

    @property
    def mask(self) -> int:
        return (
            (1 if self.white_kingside else 0)
            | (2 if self.white_queenside else 0)
            | (4 if self.black_kingside else 0)
            | (8 if self.black_queenside else 0)
        )

    def to_fen_field(self) -> str:
        out = ""
        if self.white_kingside:
            out += "K"
        if self.white_queenside:
            out += "Q"
        if self.black_kingside:
            out += "k"
        if self.black_queenside:
            out += "q"
        return out or "-"


@dataclass(frozen=True)
class BoardState:
    """Immutable position. `codes` is the packed 64-square encoding used by
    the move kernel; use grid/piece_at for the typed view."""

    codes: bytes
    side_to_move: Color
    castling: CastlingRights
    en_passant: Optional[int]
    halfmove_clock: int
    fullmove_number: int
    validated: bool = False

    @property
    def grid(self):
        """8x8 view, rank 8 first (same row order as a FEN string)."""
        rows = []
        for rank in range(7, -1, -1):
            rows.append(tuple(piece_from_code(self.codes[rank * 8 + f]) for f in range(8)))
        return tuple(rows)

    def piece_at(self, square) -> Optional[Piece]:
        if isinstance(square, str):
            square = square_index(square)
        return piece_from_code(self.codes[square])

    @property
    def stm(self) -> int:
        """Side to move as the kernel flag: 0 white, 1 black."""
        return 0 if self.side_to_move is Color.WHITE else 1

    @property
    def ep_index(self) -> int:
        return -1 if self.en_passant is None else self.en_passant

    def position_key(self) -> tuple:
        """Repetition identity: placement, side, rights, en-passant target."""
        return (self.codes, self.stm, self.castling.mask, self.ep_index)

    def fen(self) -> str:
        return board_to_fen(self)


def parse_fen(text: str, *, validate: bool = True) -> BoardState:
    """Parse a 6-field FEN (4-field tolerated: clocks default to "0 1")."""
    if not isinstance(text, str) or not text.strip():
        raise FenError("empty FEN")
    fields = text.split()
    if len(fields) == 4:
        fields = fields + ["0", "1"]
    if len(fields) != 6:
        raise FenError(f"expected 4 or 6 FEN fields, got {len(fields)}")
    placement, side_field, castling_field, ep_field, half_field, full_field = fields

    rows = placement.split("/")
    if len(rows) != 8:
        raise FenError(f"expected 8 ranks in placement, got {len(rows)}")
    squares = bytearray(64)
    for row_index, row in enumerate(rows):
        rank = 7 - row_index
        file_index = 0
        previous_digit = False
        for ch in row:
            if ch.isdigit():
                if previous_digit:
                    raise FenError(f"rank {rank + 1}: consecutive digits in {row!r}")
                if ch == "0" or ch == "9":
                    raise FenError(f"rank {rank + 1}: bad skip count {ch!r}")
                file_index += int(ch)
                previous_digit = True
            elif ch in _LETTER_CODE:
                if file_index > 7:
                    raise FenError(f"rank {rank + 1}: more than 8 squares in {row!r}")
                squares[rank * 8 + file_index] = _LETTER_CODE[ch]
                file_index += 1
                previous_digit = False
            else:
                raise FenError(f"rank {rank + 1}: unknown piece letter {ch!r}")
        if file_index != 8:
            raise FenError(f"rank {rank + 1}: squares sum to {file_index}, expected 8 in {row!r}")

    if side_field not in ("w", "b"):
        raise FenError(f"bad side-to-move field {side_field!r}")
    side = Color.WHITE if side_field == "w" else Color.BLACK

    if castling_field != "-":
        seen = set()
        for ch in castling_field:
            if ch not in "KQkq" or ch in seen:
                raise FenError(f"bad castling field {castling_field!r}")
            seen.add(ch)
        rights = CastlingRights("K" in seen, "Q" in seen, "k" in seen, "q" in seen)
    else:
        rights = CastlingRights()

    if ep_field == "-":
        ep = None
    else:
        try:
            ep = square_index(ep_field)
        except ChessError:
            raise FenError(f"bad en-passant field {ep_field!r}") from None
        if ep_field[1] not in ("3", "6"):
            raise FenError(f"en-passant target must be on rank 3 or 6, got {ep_field!r}")

    try:
        halfmove = int(half_field)
        fullmove = int(full_field)
    except ValueError:
        raise FenError(f"bad clock fields {half_field!r} {full_field!r}") from None
    if halfmove < 0:
        raise FenError(f"halfmove clock must be >= 0, got {halfmove}")
    if fullmove < 1:
        raise FenError(f"fullmove number must be >= 1, got {fullmove}")

    state = BoardState(bytes(squares), side, rights, ep, halfmove, fullmove)
    if validate:
        state = validate_state(state)
    return state


def validate_state(state: BoardState) -> BoardState:
    """Semantic checks on top of a structurally sound position."""
    counts = {code: 0 for code in range(1, 13)}
    for code in state.codes:
        if code:
            counts[code] += 1
    for color, king, pawn in ((Color.WHITE, _codes_.WK, _codes_.WP), (Color.BLACK, _codes_.BK, _codes_.BP)):
        if counts[king] == 0:
            raise ValidationError(f"missing {color.name.lower()} king")
        if counts[king] > 1:
            raise ValidationError(f"more than one {color.name.lower()} king")
        if counts[pawn] > 8:
            raise ValidationError(f"too many {color.name.lower()} pawns ({counts[pawn]})")
    for sq in list(range(0, 8)) + list(range(56, 64)):
        if state.codes[sq] in (_codes_.WP, _codes_.BP):
            raise ValidationError(f"pawn on back rank at {square_name(sq)}")
    if state.en_passant is not None:
        rank = state.en_passant >> 3
        if rank == 2 and state.side_to_move is not Color.BLACK:
            raise ValidationError("en-passant target on rank 3 with white to move")
        if rank == 5 and state.side_to_move is not Color.WHITE:
            raise ValidationError("en-passant target on rank 6 with black to move")
    if state.validated:
        return state
    return BoardState(
        state.codes,
        state.side_to_move,
        state.castling,
        state.en_passant,
        state.halfmove_clock,
        state.fullmove_number,
        validated=True,
    )


def board_to_fen(state: BoardState) -> str:
    rows = []
    for rank in range(7, -1, -1):
        row = ""
        empty = 0
        for f in range(8):
            code = state.codes[rank * 8 + f]
            if code == 0:
                empty += 1
                continue
            if empty:
                row += str(empty)
                empty = 0
            piece = piece_from_code(code)
            row += piece.letter
        if empty:
            row += str(empty)
        rows.append(row)
    ep_field = "-" if state.en_passant is None else square_name(state.en_passant)
    return " ".join(
        [
            "/".join(rows),
            state.side_to_move.value,
            state.castling.to_fen_field(),
            ep_field,
            str(state.halfmove_clock),
            str(state.fullmove_number),
        ]
    )


def piece_inventory(state: BoardState) -> dict:
    """Counts per colour and kind. Kings are counted like any other piece."""
    inventory = {
        Color.WHITE: {kind: 0 for kind in PieceKind},
        Color.BLACK: {kind: 0 for kind in PieceKind},
    }
    for code in state.codes:
        piece = piece_from_code(code)
        if piece is not None:
            inventory[piece.color][piece.kind] += 1
    return inventory


def start_position() -> BoardState:
    return parse_fen(START_FEN)
