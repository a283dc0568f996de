//! Rules-complete chess model: positions, FEN, legal move generation, SAN,
//! move classification, and perft.
//!
//! `Position` is an immutable value type; applying a move returns a new
//! position. En-passant state is kept canonical (the target square is set
//! only when an en-passant capture is actually legal), so structural
//! equality and FEN round-trips are well defined.

mod fen;
mod movegen;
mod san;
pub mod types;

pub use fen::{FenError, START_FEN};
pub use san::{parse_san, parse_san_strict, SanError};
pub use types::{
    CastleSide, CastlingRights, Color, Move, MoveKey, Piece, Square, SquareParseError,
};

use movegen::{Proto, ProtoKind};
use thiserror::Error;

const A1: Square = Square::from_index_unchecked(0);
const H1: Square = Square::from_index_unchecked(7);
const A8: Square = Square::from_index_unchecked(56);
const H8: Square = Square::from_index_unchecked(63);

/// A chess position with full game state.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Position {
    board: [Option<(Color, Piece)>; 64],
    side: Color,
    castling: CastlingRights,
    ep: Option<Square>,
    halfmove: u32,
    fullmove: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error("move {0} is not legal in this position")]
    NotLegal(String),
}

/// Ground-truth classification of a legal move, recomputed from scratch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MoveClass {
    /// Captured piece and the square it stood on (en passant differs from
    /// the destination square).
    pub capture: Option<(Piece, Square)>,
    pub gives_check: bool,
    pub is_checkmate: bool,
}

impl Position {
    /// The standard starting position.
    pub fn start() -> Position {
        Position::from_fen(START_FEN).expect("start FEN is valid")
    }

    /// Parse a 6-field FEN string. See `FenError` for the diagnostics.
    pub fn from_fen(text: &str) -> Result<Position, FenError> {
        fen::parse_fen(text)
    }

    /// Parse a FEN with 4, 5, or 6 fields; missing clock fields default to
    /// "0 1". Some database exports omit the clocks.
    pub fn from_fen_lenient(text: &str) -> Result<Position, FenError> {
        fen::parse_fen_lenient(text)
    }

    /// Canonical FEN serialization. The en-passant field is written only
    /// when an en-passant capture is legal, which is also how parsed
    /// positions are normalized, so `from_fen(p.fen()) == p`.
    pub fn fen(&self) -> String {
        fen::serialize_fen(self)
    }

    pub fn piece_at(&self, sq: Square) -> Option<(Color, Piece)> {
        self.board[sq.index()]
    }

    pub fn side_to_move(&self) -> Color {
        self.side
    }

    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    pub fn en_passant(&self) -> Option<Square> {
        self.ep
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove
    }

    pub fn king_square(&self, color: Color) -> Square {
        movegen::king_square(self, color)
    }

    /// Is the side to move in check?
    pub fn in_check(&self) -> bool {
        movegen::is_attacked(self, self.king_square(self.side), self.side.flip())
    }

    pub fn is_checkmate(&self) -> bool {
        self.in_check() && !movegen::has_legal_move(self)
    }

    pub fn is_stalemate(&self) -> bool {
        !self.in_check() && !movegen::has_legal_move(self)
    }

    /// All legal moves with fully derived flags (capture, castle, check,
    /// checkmate). Order is deterministic: by origin square, then the fixed
    /// generation order per piece.
    pub fn legal_moves(&self) -> Vec<Move> {
        let mut moves = Vec::with_capacity(48);
        movegen::for_each_legal(self, |proto, child| {
            moves.push(self.resolve_proto(proto, child));
        });
        moves
    }

    /// Apply a legal move, returning the successor position. The move must
    /// come from this position's `legal_moves` / SAN resolution.
    pub fn apply(&self, m: &Move) -> Position {
        let kind = if m.is_en_passant() {
            ProtoKind::EnPassant
        } else if let Some(side) = m.castle() {
            ProtoKind::Castle(side)
        } else if m.piece() == Piece::Pawn
            && (m.to().rank() as i8 - m.from().rank() as i8).abs() == 2
        {
            ProtoKind::DoublePush
        } else {
            ProtoKind::Normal
        };
        self.make(&Proto {
            from: m.from(),
            to: m.to(),
            promotion: m.promotion(),
            kind,
        })
    }

    /// Recompute ground truth for the legal move identified by `key`.
    pub fn classify(&self, key: MoveKey) -> Result<MoveClass, MoveError> {
        let (from, to, promotion) = key;
        let m = self
            .legal_moves()
            .into_iter()
            .find(|m| m.key() == key)
            .ok_or_else(|| {
                let mut text = format!("{from}{to}");
                if let Some(p) = promotion {
                    text.push(p.letter().to_ascii_lowercase());
                }
                MoveError::NotLegal(text)
            })?;
        Ok(MoveClass {
            capture: m.capture(),
            gives_check: m.gives_check(),
            is_checkmate: m.is_checkmate(),
        })
    }

    /// Resolve a move given in long algebraic form ("e2e4", "e7e8q").
    pub fn move_from_uci(&self, text: &str) -> Result<Move, MoveError> {
        let t = text.trim();
        if t.len() < 4 || t.len() > 5 {
            return Err(MoveError::NotLegal(t.to_string()));
        }
        let from = Square::parse(&t[0..2]).map_err(|_| MoveError::NotLegal(t.to_string()))?;
        let to = Square::parse(&t[2..4]).map_err(|_| MoveError::NotLegal(t.to_string()))?;
        let promotion = match t.len() {
            5 => Some(
                Piece::from_letter(t.as_bytes()[4] as char)
                    .ok_or_else(|| MoveError::NotLegal(t.to_string()))?,
            ),
            _ => None,
        };
        self.legal_moves()
            .into_iter()
            .find(|m| m.key() == (from, to, promotion))
            .ok_or_else(|| MoveError::NotLegal(t.to_string()))
    }

    /// SAN for a legal move of this position, with minimal disambiguation
    /// and check/mate suffix.
    pub fn san(&self, m: &Move) -> String {
        san::san_of(self, m)
    }

    /// Visit every legal successor without resolving move flags; much
    /// cheaper than `legal_moves` when only the child positions matter.
    pub(crate) fn for_each_child(&self, mut f: impl FnMut(&Position)) {
        movegen::for_each_legal(self, |_, child| f(child));
    }

    /// Leaf node count of the legal move tree at the given depth.
    pub fn perft(&self, depth: u32) -> u64 {
        if depth == 0 {
            return 1;
        }
        let mut nodes = 0;
        movegen::for_each_legal(self, |_, child| {
            nodes += if depth == 1 { 1 } else { child.perft(depth - 1) };
        });
        nodes
    }

    fn resolve_proto(&self, proto: &Proto, child: &Position) -> Move {
        let (_, piece) = self.piece_at(proto.from).expect("proto from occupied");
        let capture = match proto.kind {
            ProtoKind::EnPassant => {
                let victim = proto
                    .to
                    .offset(0, -self.side.forward())
                    .expect("en-passant victim square on board");
                Some((Piece::Pawn, victim))
            }
            _ => self.piece_at(proto.to).map(|(_, p)| (p, proto.to)),
        };
        let castle = match proto.kind {
            ProtoKind::Castle(side) => Some(side),
            _ => None,
        };
        let gives_check = child.in_check();
        let is_checkmate = gives_check && !movegen::has_legal_move(child);
        Move {
            from: proto.from,
            to: proto.to,
            piece,
            promotion: proto.promotion,
            capture,
            castle,
            en_passant: proto.kind == ProtoKind::EnPassant,
            gives_check,
            is_checkmate,
        }
    }

    /// Apply a proto move without deriving flags. Keeps en-passant state
    /// canonical and updates castling rights and clocks.
    pub(crate) fn make(&self, proto: &Proto) -> Position {
        let mut next = self.clone();
        let us = self.side;
        let (_, piece) = self.piece_at(proto.from).expect("make: from occupied");
        let captured = match proto.kind {
            ProtoKind::EnPassant => {
                let victim = proto
                    .to
                    .offset(0, -us.forward())
                    .expect("en-passant victim square on board");
                next.board[victim.index()] = None;
                true
            }
            _ => self.piece_at(proto.to).is_some(),
        };
        next.board[proto.from.index()] = None;
        next.board[proto.to.index()] = Some((us, proto.promotion.unwrap_or(piece)));
        if let ProtoKind::Castle(side) = proto.kind {
            let home_rank = proto.from.rank();
            let (rook_from, rook_to) = match side {
                CastleSide::King => (Square::new(7, home_rank), Square::new(5, home_rank)),
                CastleSide::Queen => (Square::new(0, home_rank), Square::new(3, home_rank)),
            };
            next.board[rook_from.index()] = None;
            next.board[rook_to.index()] = Some((us, Piece::Rook));
        }

        if piece == Piece::King {
            next.castling.clear(CastlingRights::flag(us, CastleSide::King));
            next.castling.clear(CastlingRights::flag(us, CastleSide::Queen));
        }
        for sq in [proto.from, proto.to] {
            match sq {
                s if s == A1 => next.castling.clear(CastlingRights::WHITE_QUEENSIDE),
                s if s == H1 => next.castling.clear(CastlingRights::WHITE_KINGSIDE),
                s if s == A8 => next.castling.clear(CastlingRights::BLACK_QUEENSIDE),
                s if s == H8 => next.castling.clear(CastlingRights::BLACK_KINGSIDE),
                _ => {}
            }
        }

        next.halfmove = if piece == Piece::Pawn || captured {
            0
        } else {
            self.halfmove + 1
        };
        if us == Color::Black {
            next.fullmove = self.fullmove + 1;
        }
        next.side = us.flip();
        next.ep = None;
        if proto.kind == ProtoKind::DoublePush {
            let target = proto
                .from
                .offset(0, us.forward())
                .expect("double-push skipped square on board");
            if ep_capture_legal(&next, target) {
                next.ep = Some(target);
            }
        }
        next
    }

    pub(crate) fn new_unchecked(
        board: [Option<(Color, Piece)>; 64],
        side: Color,
        castling: CastlingRights,
        ep: Option<Square>,
        halfmove: u32,
        fullmove: u32,
    ) -> Position {
        Position {
            board,
            side,
            castling,
            ep,
            halfmove,
            fullmove,
        }
    }

    pub(crate) fn set_ep(&mut self, ep: Option<Square>) {
        self.ep = ep;
    }
}

/// True when the side to move in `pos` has a legal en-passant capture onto
/// `target`. Used to keep the en-passant field canonical.
pub(crate) fn ep_capture_legal(pos: &Position, target: Square) -> bool {
    let us = pos.side_to_move();
    for df in [-1i8, 1] {
        let Some(from) = target.offset(df, -us.forward()) else {
            continue;
        };
        if pos.piece_at(from) != Some((us, Piece::Pawn)) {
            continue;
        }
        let mut staged = pos.clone();
        staged.set_ep(Some(target));
        let child = staged.make(&Proto {
            from,
            to: target,
            promotion: None,
            kind: ProtoKind::EnPassant,
        });
        if !movegen::is_attacked(&child, movegen::king_square(&child, us), us.flip()) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests;
