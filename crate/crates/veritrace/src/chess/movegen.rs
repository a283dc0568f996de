//! Pseudo-legal generation, attack detection, and the legality filter.

use super::types::{CastleSide, CastlingRights, Color, Piece, Square};
use super::Position;

pub(crate) const KNIGHT_OFFSETS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];

pub(crate) const KING_OFFSETS: [(i8, i8); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

pub(crate) const BISHOP_RAYS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
pub(crate) const ROOK_RAYS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// A generated move before the king-safety filter. Flags are derived later.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Proto {
    pub from: Square,
    pub to: Square,
    pub promotion: Option<Piece>,
    pub kind: ProtoKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ProtoKind {
    Normal,
    DoublePush,
    EnPassant,
    Castle(CastleSide),
}

/// Is `sq` attacked by any piece of color `by`?
pub(crate) fn is_attacked(pos: &Position, sq: Square, by: Color) -> bool {
    for (df, dr) in KNIGHT_OFFSETS {
        if let Some(s) = sq.offset(df, dr) {
            if pos.piece_at(s) == Some((by, Piece::Knight)) {
                return true;
            }
        }
    }
    for (df, dr) in KING_OFFSETS {
        if let Some(s) = sq.offset(df, dr) {
            if pos.piece_at(s) == Some((by, Piece::King)) {
                return true;
            }
        }
    }
    // A pawn of `by` attacks `sq` from one rank behind it (relative to `by`).
    for df in [-1i8, 1] {
        if let Some(s) = sq.offset(df, -by.forward()) {
            if pos.piece_at(s) == Some((by, Piece::Pawn)) {
                return true;
            }
        }
    }
    for (df, dr) in BISHOP_RAYS {
        if let Some((c, p)) = first_piece_on_ray(pos, sq, df, dr) {
            if c == by && (p == Piece::Bishop || p == Piece::Queen) {
                return true;
            }
        }
    }
    for (df, dr) in ROOK_RAYS {
        if let Some((c, p)) = first_piece_on_ray(pos, sq, df, dr) {
            if c == by && (p == Piece::Rook || p == Piece::Queen) {
                return true;
            }
        }
    }
    false
}

fn first_piece_on_ray(pos: &Position, from: Square, df: i8, dr: i8) -> Option<(Color, Piece)> {
    let mut sq = from;
    while let Some(next) = sq.offset(df, dr) {
        sq = next;
        if let Some(cp) = pos.piece_at(sq) {
            return Some(cp);
        }
    }
    None
}

pub(crate) fn king_square(pos: &Position, color: Color) -> Square {
    Square::all()
        .find(|&s| pos.piece_at(s) == Some((color, Piece::King)))
        .expect("position invariant: exactly one king per side")
}

pub(crate) fn pseudo_moves(pos: &Position, out: &mut Vec<Proto>) {
    let us = pos.side_to_move();
    let them = us.flip();
    for from in Square::all() {
        let Some((color, piece)) = pos.piece_at(from) else {
            continue;
        };
        if color != us {
            continue;
        }
        match piece {
            Piece::Pawn => pawn_moves(pos, from, us, out),
            Piece::Knight => {
                for (df, dr) in KNIGHT_OFFSETS {
                    step_move(pos, from, df, dr, us, out);
                }
            }
            Piece::King => {
                for (df, dr) in KING_OFFSETS {
                    step_move(pos, from, df, dr, us, out);
                }
                castle_moves(pos, from, us, them, out);
            }
            Piece::Bishop => ray_moves(pos, from, &BISHOP_RAYS, us, out),
            Piece::Rook => ray_moves(pos, from, &ROOK_RAYS, us, out),
            Piece::Queen => {
                ray_moves(pos, from, &BISHOP_RAYS, us, out);
                ray_moves(pos, from, &ROOK_RAYS, us, out);
            }
        }
    }
}

fn step_move(pos: &Position, from: Square, df: i8, dr: i8, us: Color, out: &mut Vec<Proto>) {
    if let Some(to) = from.offset(df, dr) {
        match pos.piece_at(to) {
            Some((c, _)) if c == us => {}
            _ => out.push(Proto {
                from,
                to,
                promotion: None,
                kind: ProtoKind::Normal,
            }),
        }
    }
}

fn ray_moves(pos: &Position, from: Square, rays: &[(i8, i8)], us: Color, out: &mut Vec<Proto>) {
    for &(df, dr) in rays {
        let mut sq = from;
        while let Some(to) = sq.offset(df, dr) {
            sq = to;
            match pos.piece_at(to) {
                None => out.push(Proto {
                    from,
                    to,
                    promotion: None,
                    kind: ProtoKind::Normal,
                }),
                Some((c, _)) => {
                    if c != us {
                        out.push(Proto {
                            from,
                            to,
                            promotion: None,
                            kind: ProtoKind::Normal,
                        });
                    }
                    break;
                }
            }
        }
    }
}

fn pawn_moves(pos: &Position, from: Square, us: Color, out: &mut Vec<Proto>) {
    let fwd = us.forward();
    let start_rank = if us == Color::White { 1 } else { 6 };
    let promo_rank = if us == Color::White { 7 } else { 0 };

    let push_promos = |from: Square, to: Square, kind: ProtoKind, out: &mut Vec<Proto>| {
        if to.rank() == promo_rank {
            for promo in [Piece::Queen, Piece::Rook, Piece::Bishop, Piece::Knight] {
                out.push(Proto {
                    from,
                    to,
                    promotion: Some(promo),
                    kind,
                });
            }
        } else {
            out.push(Proto {
                from,
                to,
                promotion: None,
                kind,
            });
        }
    };

    if let Some(one) = from.offset(0, fwd) {
        if pos.piece_at(one).is_none() {
            push_promos(from, one, ProtoKind::Normal, out);
            if from.rank() == start_rank {
                if let Some(two) = from.offset(0, 2 * fwd) {
                    if pos.piece_at(two).is_none() {
                        out.push(Proto {
                            from,
                            to: two,
                            promotion: None,
                            kind: ProtoKind::DoublePush,
                        });
                    }
                }
            }
        }
    }
    for df in [-1i8, 1] {
        if let Some(to) = from.offset(df, fwd) {
            match pos.piece_at(to) {
                Some((c, _)) if c != us => push_promos(from, to, ProtoKind::Normal, out),
                None if pos.en_passant() == Some(to) => out.push(Proto {
                    from,
                    to,
                    promotion: None,
                    kind: ProtoKind::EnPassant,
                }),
                _ => {}
            }
        }
    }
}

fn castle_moves(pos: &Position, from: Square, us: Color, them: Color, out: &mut Vec<Proto>) {
    let home_rank = if us == Color::White { 0 } else { 7 };
    if from != Square::new(4, home_rank) {
        return;
    }
    // The king may not castle out of or through check; arrival in check is
    // rejected by the generic legality filter.
    let through_check = |files: &[u8]| {
        files
            .iter()
            .any(|&f| is_attacked(pos, Square::new(f, home_rank), them))
    };
    let empty = |files: &[u8]| {
        files
            .iter()
            .all(|&f| pos.piece_at(Square::new(f, home_rank)).is_none())
    };
    if pos.castling().has(CastlingRights::flag(us, CastleSide::King))
        && pos.piece_at(Square::new(7, home_rank)) == Some((us, Piece::Rook))
        && empty(&[5, 6])
        && !through_check(&[4, 5])
    {
        out.push(Proto {
            from,
            to: Square::new(6, home_rank),
            promotion: None,
            kind: ProtoKind::Castle(CastleSide::King),
        });
    }
    if pos.castling().has(CastlingRights::flag(us, CastleSide::Queen))
        && pos.piece_at(Square::new(0, home_rank)) == Some((us, Piece::Rook))
        && empty(&[1, 2, 3])
        && !through_check(&[4, 3])
    {
        out.push(Proto {
            from,
            to: Square::new(2, home_rank),
            promotion: None,
            kind: ProtoKind::Castle(CastleSide::Queen),
        });
    }
}

/// Apply every legal move of the side to move, invoking `f` with the proto
/// move and resulting position.
pub(crate) fn for_each_legal(pos: &Position, mut f: impl FnMut(&Proto, &Position)) {
    let us = pos.side_to_move();
    let mut protos = Vec::with_capacity(48);
    pseudo_moves(pos, &mut protos);
    for proto in &protos {
        let child = pos.make(proto);
        if !is_attacked(&child, king_square(&child, us), us.flip()) {
            f(proto, &child);
        }
    }
}

pub(crate) fn has_legal_move(pos: &Position) -> bool {
    let us = pos.side_to_move();
    let mut protos = Vec::with_capacity(48);
    pseudo_moves(pos, &mut protos);
    protos.iter().any(|proto| {
        let child = pos.make(proto);
        !is_attacked(&child, king_square(&child, us), us.flip())
    })
}
