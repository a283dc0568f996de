//! Core value types for the chess model: colors, pieces, squares, castling
//! rights, and fully-resolved moves.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Side to move or piece owner.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }

    /// +1 for White, -1 for Black; the forward direction of pawns.
    pub fn forward(self) -> i8 {
        match self {
            Color::White => 1,
            Color::Black => -1,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::White => "white",
            Color::Black => "black",
        })
    }
}

/// Piece kind, independent of color.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Piece {
    Pawn,
    Knight,
    Bishop,
    Rook,
    Queen,
    King,
}

impl Piece {
    pub const ALL: [Piece; 6] = [
        Piece::Pawn,
        Piece::Knight,
        Piece::Bishop,
        Piece::Rook,
        Piece::Queen,
        Piece::King,
    ];

    /// Uppercase SAN letter; pawns have none and return 'P' only for FEN use.
    pub fn letter(self) -> char {
        match self {
            Piece::Pawn => 'P',
            Piece::Knight => 'N',
            Piece::Bishop => 'B',
            Piece::Rook => 'R',
            Piece::Queen => 'Q',
            Piece::King => 'K',
        }
    }

    pub fn from_letter(c: char) -> Option<Piece> {
        match c.to_ascii_uppercase() {
            'P' => Some(Piece::Pawn),
            'N' => Some(Piece::Knight),
            'B' => Some(Piece::Bishop),
            'R' => Some(Piece::Rook),
            'Q' => Some(Piece::Queen),
            'K' => Some(Piece::King),
            _ => None,
        }
    }

    /// English piece name with an initial capital, as used in trace claims.
    pub fn name(self) -> &'static str {
        match self {
            Piece::Pawn => "Pawn",
            Piece::Knight => "Knight",
            Piece::Bishop => "Bishop",
            Piece::Rook => "Rook",
            Piece::Queen => "Queen",
            Piece::King => "King",
        }
    }

    pub fn from_name(s: &str) -> Option<Piece> {
        match s.to_ascii_lowercase().as_str() {
            "pawn" => Some(Piece::Pawn),
            "knight" => Some(Piece::Knight),
            "bishop" => Some(Piece::Bishop),
            "rook" => Some(Piece::Rook),
            "queen" => Some(Piece::Queen),
            "king" => Some(Piece::King),
            _ => None,
        }
    }
}

/// Board square, index 0..64 with a1 = 0, b1 = 1, ..., h8 = 63.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square(u8);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid square {0:?}")]
pub struct SquareParseError(pub String);

impl Square {
    /// file and rank are 0-based (file 0 = 'a', rank 0 = '1').
    pub fn new(file: u8, rank: u8) -> Square {
        debug_assert!(file < 8 && rank < 8);
        Square(rank * 8 + file)
    }

    pub fn from_index(idx: u8) -> Square {
        debug_assert!(idx < 64);
        Square(idx)
    }

    pub(crate) const fn from_index_unchecked(idx: u8) -> Square {
        Square(idx)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn file(self) -> u8 {
        self.0 % 8
    }

    pub fn rank(self) -> u8 {
        self.0 / 8
    }

    /// Offset by (file delta, rank delta); None when it falls off the board.
    pub fn offset(self, df: i8, dr: i8) -> Option<Square> {
        let f = self.file() as i8 + df;
        let r = self.rank() as i8 + dr;
        if (0..8).contains(&f) && (0..8).contains(&r) {
            Some(Square::new(f as u8, r as u8))
        } else {
            None
        }
    }

    pub fn all() -> impl Iterator<Item = Square> {
        (0..64).map(Square)
    }

    pub fn parse(s: &str) -> Result<Square, SquareParseError> {
        let bytes = s.as_bytes();
        if bytes.len() == 2
            && (b'a'..=b'h').contains(&bytes[0])
            && (b'1'..=b'8').contains(&bytes[1])
        {
            Ok(Square::new(bytes[0] - b'a', bytes[1] - b'1'))
        } else {
            Err(SquareParseError(s.to_string()))
        }
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", (b'a' + self.file()) as char, self.rank() + 1)
    }
}

impl fmt::Debug for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Square {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Square {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Square, D::Error> {
        let s = String::deserialize(deserializer)?;
        Square::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Castling availability, one bit per side and wing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct CastlingRights(u8);

impl CastlingRights {
    pub const WHITE_KINGSIDE: u8 = 1;
    pub const WHITE_QUEENSIDE: u8 = 2;
    pub const BLACK_KINGSIDE: u8 = 4;
    pub const BLACK_QUEENSIDE: u8 = 8;

    pub fn none() -> CastlingRights {
        CastlingRights(0)
    }

    pub fn all() -> CastlingRights {
        CastlingRights(0b1111)
    }

    pub fn has(self, flag: u8) -> bool {
        self.0 & flag != 0
    }

    pub fn set(&mut self, flag: u8) {
        self.0 |= flag;
    }

    pub fn clear(&mut self, flag: u8) {
        self.0 &= !flag;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn flag(color: Color, side: CastleSide) -> u8 {
        match (color, side) {
            (Color::White, CastleSide::King) => Self::WHITE_KINGSIDE,
            (Color::White, CastleSide::Queen) => Self::WHITE_QUEENSIDE,
            (Color::Black, CastleSide::King) => Self::BLACK_KINGSIDE,
            (Color::Black, CastleSide::Queen) => Self::BLACK_QUEENSIDE,
        }
    }
}

impl fmt::Display for CastlingRights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        if self.has(Self::WHITE_KINGSIDE) {
            f.write_str("K")?;
        }
        if self.has(Self::WHITE_QUEENSIDE) {
            f.write_str("Q")?;
        }
        if self.has(Self::BLACK_KINGSIDE) {
            f.write_str("k")?;
        }
        if self.has(Self::BLACK_QUEENSIDE) {
            f.write_str("q")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CastleSide {
    King,
    Queen,
}

/// A fully-resolved legal move. Instances are only produced by move
/// generation and SAN resolution, so the derived flags always agree with
/// recomputation from (position, from, to, promotion).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Move {
    pub(crate) from: Square,
    pub(crate) to: Square,
    pub(crate) piece: Piece,
    pub(crate) promotion: Option<Piece>,
    /// Captured piece and the square it stood on (differs from `to` only
    /// for en passant).
    pub(crate) capture: Option<(Piece, Square)>,
    pub(crate) castle: Option<CastleSide>,
    pub(crate) en_passant: bool,
    pub(crate) gives_check: bool,
    pub(crate) is_checkmate: bool,
}

/// Identity of a move irrespective of derived flags: origin, destination,
/// and promotion piece. Two SAN spellings resolving to the same key are the
/// same move.
pub type MoveKey = (Square, Square, Option<Piece>);

impl Move {
    pub fn from(&self) -> Square {
        self.from
    }

    pub fn to(&self) -> Square {
        self.to
    }

    pub fn piece(&self) -> Piece {
        self.piece
    }

    pub fn promotion(&self) -> Option<Piece> {
        self.promotion
    }

    pub fn capture(&self) -> Option<(Piece, Square)> {
        self.capture
    }

    pub fn castle(&self) -> Option<CastleSide> {
        self.castle
    }

    pub fn is_en_passant(&self) -> bool {
        self.en_passant
    }

    pub fn is_capture(&self) -> bool {
        self.capture.is_some()
    }

    pub fn gives_check(&self) -> bool {
        self.gives_check
    }

    pub fn is_checkmate(&self) -> bool {
        self.is_checkmate
    }

    pub fn key(&self) -> MoveKey {
        (self.from, self.to, self.promotion)
    }

    /// Long algebraic form, e.g. "e2e4", "e7e8q".
    pub fn uci(&self) -> String {
        let mut s = format!("{}{}", self.from, self.to);
        if let Some(p) = self.promotion {
            s.push(p.letter().to_ascii_lowercase());
        }
        s
    }
}
