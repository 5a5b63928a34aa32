"""Chess-grounded cognition harness.

Layers, bottom up: a chess core (board/FEN/SAN/move generation with a
compiled kernel and a pure fallback), a UCI engine driver, a retrieval
store with deterministic embedders, an LLM backend seam, a query router,
the five quality scores, and the evaluation harness with its annotation
HTTP API and CLI.
"""

from .board import (
    START_FEN,
    AmbiguousSanError,
    BoardState,
    CastlingRights,
    ChessError,
    Color,
    FenError,
    IllegalMoveError,
    Piece,
    PieceKind,
    SanError,
    ValidationError,
    board_to_fen,
    parse_fen,
    piece_inventory,
    square_index,
    square_name,
    start_position,
    validate_state,
)
from .kernel import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .moves import (
    CaptureEvent,
    CaptureSummary,
    DrawFlags,
    GameRecord,
    Move,
    ReplayError,
    ReplayResult,
    apply_move,
    apply_san,
    apply_uci,
    capture_summary,
    draw_flags,
    is_check,
    is_checkmate,
    is_stalemate,
    legal_moves,
    perft,
    replay,
)

__version__ = "0.1.0"
