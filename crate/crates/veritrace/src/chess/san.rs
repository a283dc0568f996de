//! Standard algebraic notation: formatting with minimal disambiguation and
//! lenient/strict parsing against the legal move set.

use super::types::{CastleSide, Move, Piece};
use super::Position;
use once_cell::sync::Lazy;
use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SanError {
    #[error("cannot parse move text {0:?}")]
    Unparseable(String),
    #[error("move {0:?} is not legal in this position")]
    IllegalMove(String),
    #[error("move {san:?} is ambiguous: {matches:?}")]
    Ambiguous { san: String, matches: Vec<String> },
    #[error("move {0:?} reaches the last rank but names no promotion piece")]
    MissingPromotion(String),
    #[error("annotation mismatch in {san:?}: {reason}")]
    Annotation { san: String, reason: String },
}

/// SAN for a legal move, e.g. "Nf3", "exd5", "O-O-O", "e8=Q+", "Qxf7#".
pub fn san_of(pos: &Position, m: &Move) -> String {
    let mut out = String::new();
    match m.castle() {
        Some(CastleSide::King) => out.push_str("O-O"),
        Some(CastleSide::Queen) => out.push_str("O-O-O"),
        None => {
            if m.piece() == Piece::Pawn {
                if m.is_capture() {
                    out.push((b'a' + m.from().file()) as char);
                    out.push('x');
                }
                out.push_str(&m.to().to_string());
                if let Some(p) = m.promotion() {
                    out.push('=');
                    out.push(p.letter());
                }
            } else {
                out.push(m.piece().letter());
                out.push_str(&disambiguation(pos, m));
                if m.is_capture() {
                    out.push('x');
                }
                out.push_str(&m.to().to_string());
            }
        }
    }
    if m.is_checkmate() {
        out.push('#');
    } else if m.gives_check() {
        out.push('+');
    }
    out
}

fn disambiguation(pos: &Position, m: &Move) -> String {
    let rivals: Vec<Move> = pos
        .legal_moves()
        .into_iter()
        .filter(|o| o.piece() == m.piece() && o.to() == m.to() && o.from() != m.from())
        .collect();
    if rivals.is_empty() {
        return String::new();
    }
    let file_unique = rivals.iter().all(|o| o.from().file() != m.from().file());
    if file_unique {
        return ((b'a' + m.from().file()) as char).to_string();
    }
    let rank_unique = rivals.iter().all(|o| o.from().rank() != m.from().rank());
    if rank_unique {
        return (m.from().rank() + 1).to_string();
    }
    m.from().to_string()
}

static PIECE_MOVE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^([KQRBN])([a-h])?([1-8])?(x)?([a-h][1-8])$").unwrap());
static PAWN_MOVE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^([a-h])?([1-8])?(x)?([a-h][1-8])(?:=?([QRBNqrbn]))?$").unwrap());

/// Lenient SAN resolution: check/mate/capture annotations and decorations
/// ("!?") are ignored, long-algebraic disambiguation ("Ng1f3", "e2e4") is
/// accepted, and castling may be written with letters or zeros.
pub fn parse_san(pos: &Position, text: &str) -> Result<Move, SanError> {
    parse_impl(pos, text, false)
}

/// Strict SAN resolution: additionally requires the capture marker and the
/// check/mate suffix to agree with the move's recomputed effects.
pub fn parse_san_strict(pos: &Position, text: &str) -> Result<Move, SanError> {
    parse_impl(pos, text, true)
}

fn parse_impl(pos: &Position, text: &str, strict: bool) -> Result<Move, SanError> {
    let original = text.trim();
    if original.is_empty() {
        return Err(SanError::Unparseable(text.to_string()));
    }
    let mut core = original.trim_end_matches(['!', '?']);
    let mut suffix_mate = false;
    let mut suffix_check = false;
    if let Some(stripped) = core.strip_suffix('#') {
        suffix_mate = true;
        core = stripped;
    } else if let Some(stripped) = core.strip_suffix('+') {
        suffix_check = true;
        core = stripped;
    }

    let legal = pos.legal_moves();
    let castle_target = match core.to_ascii_uppercase().replace('0', "O").as_str() {
        "O-O" => Some(CastleSide::King),
        "O-O-O" => Some(CastleSide::Queen),
        _ => None,
    };

    let matches: Vec<Move> = if let Some(side) = castle_target {
        legal
            .iter()
            .filter(|m| m.castle() == Some(side))
            .copied()
            .collect()
    } else if let Some(caps) = PIECE_MOVE.captures(core) {
        let piece = Piece::from_letter(caps[1].chars().next().unwrap()).unwrap();
        let from_file = caps.get(2).map(|m| m.as_str().as_bytes()[0] - b'a');
        let from_rank = caps.get(3).map(|m| m.as_str().as_bytes()[0] - b'1');
        let to = super::Square::parse(&caps[5]).unwrap();
        legal
            .iter()
            .filter(|m| {
                m.piece() == piece
                    && m.to() == to
                    && from_file.is_none_or(|f| m.from().file() == f)
                    && from_rank.is_none_or(|r| m.from().rank() == r)
            })
            .copied()
            .collect()
    } else if let Some(caps) = PAWN_MOVE.captures(core) {
        let from_file = caps.get(1).map(|m| m.as_str().as_bytes()[0] - b'a');
        let from_rank = caps.get(2).map(|m| m.as_str().as_bytes()[0] - b'1');
        let to = super::Square::parse(&caps[4]).unwrap();
        let promo = caps
            .get(5)
            .map(|m| Piece::from_letter(m.as_str().chars().next().unwrap()).unwrap());
        let candidates: Vec<Move> = legal
            .iter()
            .filter(|m| {
                m.piece() == Piece::Pawn
                    && m.to() == to
                    && from_file.is_none_or(|f| m.from().file() == f)
                    && from_rank.is_none_or(|r| m.from().rank() == r)
            })
            .copied()
            .collect();
        if promo.is_none() && candidates.iter().any(|m| m.promotion().is_some()) {
            return Err(SanError::MissingPromotion(original.to_string()));
        }
        candidates
            .into_iter()
            .filter(|m| m.promotion() == promo)
            .collect()
    } else {
        return Err(SanError::Unparseable(original.to_string()));
    };

    let m = match matches.len() {
        0 => return Err(SanError::IllegalMove(original.to_string())),
        1 => matches[0],
        _ => {
            return Err(SanError::Ambiguous {
                san: original.to_string(),
                matches: matches.iter().map(|m| san_of(pos, m)).collect(),
            })
        }
    };

    if strict {
        let wrote_capture = core.contains('x');
        if wrote_capture != m.is_capture() {
            return Err(SanError::Annotation {
                san: original.to_string(),
                reason: if m.is_capture() {
                    "capture marker missing".into()
                } else {
                    "capture marker on a quiet move".into()
                },
            });
        }
        let expect = if m.is_checkmate() {
            (false, true)
        } else if m.gives_check() {
            (true, false)
        } else {
            (false, false)
        };
        if (suffix_check, suffix_mate) != expect {
            return Err(SanError::Annotation {
                san: original.to_string(),
                reason: format!(
                    "check/mate suffix disagrees with recomputation (expected {})",
                    match expect {
                        (false, true) => "'#'",
                        (true, false) => "'+'",
                        _ => "no suffix",
                    }
                ),
            });
        }
    }
    Ok(m)
}
