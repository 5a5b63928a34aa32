/**
 * Pure position rendering model: FEN text in, an 8x8 cell grid out.
 *
 * Rendering is a pure function of the position field — the same FEN always
 * produces the same grid — and anything malformed raises `FenError` so the
 * caller can fall back to showing the raw text.
 */

export class FenError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FenError";
  }
}

export interface BoardCell {
  /** Algebraic square name, "a1".."h8". */
  square: string;
  /** FEN piece letter ("K", "p", ...) or null for an empty square. */
  piece: string | null;
}

export interface BoardModel {
  /** Rows top-to-bottom as drawn: ranks[0] is rank 8, ranks[7] is rank 1. */
  ranks: BoardCell[][];
  sideToMove: "w" | "b";
}

const FILES = "abcdefgh";
const PIECE_LETTERS = new Set("prnbqkPRNBQK".split(""));

export const PIECE_GLYPHS: Record<string, string> = {
  K: "♔",
  Q: "♕",
  R: "♖",
  B: "♗",
  N: "♘",
  P: "♙",
  k: "♚",
  q: "♛",
  r: "♜",
  b: "♝",
  n: "♞",
  p: "♟",
};

export function boardFromFen(fen: string): BoardModel {
  const fields = fen.trim().split(/\s+/);
  if (fields.length < 2) {
    throw new FenError(`expected at least placement and side fields, got ${fields.length}`);
  }
  const [placement, side] = fields;
  if (side !== "w" && side !== "b") {
    throw new FenError(`side to move must be "w" or "b", got "${side}"`);
  }
  const rows = placement.split("/");
  if (rows.length !== 8) {
    throw new FenError(`expected 8 ranks, got ${rows.length}`);
  }
  const ranks: BoardCell[][] = [];
  rows.forEach((row, rowIndex) => {
    const rankNumber = 8 - rowIndex;
    const cells: BoardCell[] = [];
    for (const ch of row) {
      if (ch >= "1" && ch <= "8") {
        const run = Number(ch);
        for (let i = 0; i < run; i += 1) {
          if (cells.length >= 8) {
            throw new FenError(`rank ${rankNumber} is longer than 8 files`);
          }
          cells.push({ square: `${FILES[cells.length]}${rankNumber}`, piece: null });
        }
      } else if (PIECE_LETTERS.has(ch)) {
        if (cells.length >= 8) {
          throw new FenError(`rank ${rankNumber} is longer than 8 files`);
        }
        cells.push({ square: `${FILES[cells.length]}${rankNumber}`, piece: ch });
      } else {
        throw new FenError(`bad piece letter "${ch}" in rank ${rankNumber}`);
      }
    }
    if (cells.length !== 8) {
      throw new FenError(`rank ${rankNumber} describes ${cells.length} files, expected 8`);
    }
    ranks.push(cells);
  });
  return { ranks, sideToMove: side };
}

const SQUARE_TOKEN = /[a-h][1-8]/g;

/**
 * Squares to mark for a move given in algebraic notation.
 *
 * The destination square is the last square token in the text (so "Qh4e1"
 * marks e1 and "e8=Q+" marks e8); castling marks the king and rook
 * destination squares for the side to move. Notation the rule cannot read
 * yields no marks — the move text itself is still shown beside the board.
 */
export function highlightSquares(san: string, sideToMove: "w" | "b"): string[] {
  const text = san.trim();
  const castleRank = sideToMove === "w" ? "1" : "8";
  if (/^O-O-O/.test(text) || /^0-0-0/.test(text)) {
    return [`c${castleRank}`, `d${castleRank}`];
  }
  if (/^O-O/.test(text) || /^0-0/.test(text)) {
    return [`g${castleRank}`, `f${castleRank}`];
  }
  const squares = text.match(SQUARE_TOKEN);
  if (!squares || squares.length === 0) {
    return [];
  }
  return [squares[squares.length - 1]];
}
