//! FEN parsing and serialization with distinct diagnostics per failure.

use super::movegen;
use super::types::{CastlingRights, Color, Piece, Square};
use super::{ep_capture_legal, Position};
use thiserror::Error;

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FenError {
    #[error("expected 6 FEN fields, found {0}")]
    FieldCount(usize),
    #[error("expected 8 ranks in piece placement, found {0}")]
    RankCount(usize),
    #[error("rank {rank:?} describes {width} files, expected 8")]
    RankWidth { rank: String, width: usize },
    #[error("illegal piece character {0:?}")]
    IllegalPieceChar(char),
    #[error("bad side-to-move field {0:?}")]
    SideToMove(String),
    #[error("bad castling field {0:?}")]
    Castling(String),
    #[error("bad en-passant field {0:?}")]
    EnPassant(String),
    #[error("bad halfmove clock {0:?}")]
    HalfmoveClock(String),
    #[error("bad fullmove number {0:?}")]
    FullmoveNumber(String),
    #[error("no {0} king on the board")]
    MissingKing(Color),
    #[error("more than one {0} king on the board")]
    MultipleKings(Color),
    #[error("the side not to move is in check")]
    SideNotToMoveInCheck,
}

pub fn parse_fen(text: &str) -> Result<Position, FenError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(FenError::FieldCount(fields.len()));
    }
    parse_fields(&fields)
}

/// Accepts 4-, 5-, or 6-field FENs; missing clocks default to "0 1".
pub fn parse_fen_lenient(text: &str) -> Result<Position, FenError> {
    let mut fields: Vec<&str> = text.split_whitespace().collect();
    match fields.len() {
        4 => fields.extend(["0", "1"]),
        5 => fields.push("1"),
        6 => {}
        n => return Err(FenError::FieldCount(n)),
    }
    parse_fields(&fields)
}

fn parse_fields(fields: &[&str]) -> Result<Position, FenError> {
    let mut board: [Option<(Color, Piece)>; 64] = [None; 64];
    let ranks: Vec<&str> = fields[0].split('/').collect();
    if ranks.len() != 8 {
        return Err(FenError::RankCount(ranks.len()));
    }
    for (i, rank_text) in ranks.iter().enumerate() {
        let rank = 7 - i as u8;
        let mut file = 0u8;
        for c in rank_text.chars() {
            if let Some(d) = c.to_digit(10) {
                if d == 0 || d > 8 {
                    return Err(FenError::IllegalPieceChar(c));
                }
                file += d as u8;
            } else {
                let piece = Piece::from_letter(c).ok_or(FenError::IllegalPieceChar(c))?;
                let color = if c.is_ascii_uppercase() {
                    Color::White
                } else {
                    Color::Black
                };
                if file >= 8 {
                    return Err(FenError::RankWidth {
                        rank: rank_text.to_string(),
                        width: file as usize + 1,
                    });
                }
                board[Square::new(file, rank).index()] = Some((color, piece));
                file += 1;
            }
            if file > 8 {
                return Err(FenError::RankWidth {
                    rank: rank_text.to_string(),
                    width: file as usize,
                });
            }
        }
        if file != 8 {
            return Err(FenError::RankWidth {
                rank: rank_text.to_string(),
                width: file as usize,
            });
        }
    }

    for color in [Color::White, Color::Black] {
        let kings = board
            .iter()
            .filter(|p| **p == Some((color, Piece::King)))
            .count();
        if kings == 0 {
            return Err(FenError::MissingKing(color));
        }
        if kings > 1 {
            return Err(FenError::MultipleKings(color));
        }
    }

    let side = match fields[1] {
        "w" => Color::White,
        "b" => Color::Black,
        s => return Err(FenError::SideToMove(s.to_string())),
    };

    let castling = parse_castling(fields[2], &board)?;

    let ep_field = fields[3];
    let ep_candidate = if ep_field == "-" {
        None
    } else {
        let sq =
            Square::parse(ep_field).map_err(|_| FenError::EnPassant(ep_field.to_string()))?;
        let expected_rank = match side {
            // After Black's double push White captures onto rank 6 (index 5),
            // and vice versa.
            Color::White => 5,
            Color::Black => 2,
        };
        if sq.rank() != expected_rank {
            return Err(FenError::EnPassant(ep_field.to_string()));
        }
        Some(sq)
    };

    let halfmove: u32 = fields[4]
        .parse()
        .map_err(|_| FenError::HalfmoveClock(fields[4].to_string()))?;
    let fullmove: u32 = fields[5]
        .parse()
        .map_err(|_| FenError::FullmoveNumber(fields[5].to_string()))?;
    if fullmove == 0 {
        return Err(FenError::FullmoveNumber(fields[5].to_string()));
    }

    let mut pos = Position::new_unchecked(board, side, castling, None, halfmove, fullmove);

    if movegen::is_attacked(&pos, movegen::king_square(&pos, side.flip()), side) {
        return Err(FenError::SideNotToMoveInCheck);
    }

    // Canonical en passant: keep the target only when a capture is legal.
    // Both conventions ("always after a double push" and "only when
    // capturable") are accepted on input.
    if let Some(sq) = ep_candidate {
        if ep_capture_legal(&pos, sq) {
            pos.set_ep(Some(sq));
        }
    }
    Ok(pos)
}

fn parse_castling(
    field: &str,
    board: &[Option<(Color, Piece)>; 64],
) -> Result<CastlingRights, FenError> {
    let mut rights = CastlingRights::none();
    if field != "-" {
        for c in field.chars() {
            let flag = match c {
                'K' => CastlingRights::WHITE_KINGSIDE,
                'Q' => CastlingRights::WHITE_QUEENSIDE,
                'k' => CastlingRights::BLACK_KINGSIDE,
                'q' => CastlingRights::BLACK_QUEENSIDE,
                _ => return Err(FenError::Castling(field.to_string())),
            };
            if rights.has(flag) {
                return Err(FenError::Castling(field.to_string()));
            }
            rights.set(flag);
        }
    }
    // Drop rights whose king or rook is no longer on its home square;
    // inconsistent flags appear in the wild and carry no information.
    let at = |file: u8, rank: u8| board[Square::new(file, rank).index()];
    if at(4, 0) != Some((Color::White, Piece::King)) {
        rights.clear(CastlingRights::WHITE_KINGSIDE | CastlingRights::WHITE_QUEENSIDE);
    }
    if at(7, 0) != Some((Color::White, Piece::Rook)) {
        rights.clear(CastlingRights::WHITE_KINGSIDE);
    }
    if at(0, 0) != Some((Color::White, Piece::Rook)) {
        rights.clear(CastlingRights::WHITE_QUEENSIDE);
    }
    if at(4, 7) != Some((Color::Black, Piece::King)) {
        rights.clear(CastlingRights::BLACK_KINGSIDE | CastlingRights::BLACK_QUEENSIDE);
    }
    if at(7, 7) != Some((Color::Black, Piece::Rook)) {
        rights.clear(CastlingRights::BLACK_KINGSIDE);
    }
    if at(0, 7) != Some((Color::Black, Piece::Rook)) {
        rights.clear(CastlingRights::BLACK_QUEENSIDE);
    }
    Ok(rights)
}

pub fn serialize_fen(pos: &Position) -> String {
    let mut out = String::with_capacity(90);
    for rank in (0..8).rev() {
        let mut empty = 0;
        for file in 0..8 {
            match pos.piece_at(Square::new(file, rank)) {
                None => empty += 1,
                Some((color, piece)) => {
                    if empty > 0 {
                        out.push(char::from_digit(empty, 10).unwrap());
                        empty = 0;
                    }
                    let c = piece.letter();
                    out.push(if color == Color::White {
                        c
                    } else {
                        c.to_ascii_lowercase()
                    });
                }
            }
        }
        if empty > 0 {
            out.push(char::from_digit(empty, 10).unwrap());
        }
        if rank > 0 {
            out.push('/');
        }
    }
    out.push(' ');
    out.push(match pos.side_to_move() {
        Color::White => 'w',
        Color::Black => 'b',
    });
    out.push(' ');
    out.push_str(&pos.castling().to_string());
    out.push(' ');
    match pos.en_passant() {
        Some(sq) => out.push_str(&sq.to_string()),
        None => out.push('-'),
    }
    out.push_str(&format!(
        " {} {}",
        pos.halfmove_clock(),
        pos.fullmove_number()
    ));
    out
}
