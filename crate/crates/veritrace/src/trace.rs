//! The structured reasoning-trace schema: parsing, canonical serialization,
//! and candidate deduplication.
//!
//! A schema-conforming trace looks like:
//!
//! ```text
//! <think>
//! Candidate 1: Qxf7+
//! Capture: Pawn on f7
//! Check: yes
//! Mate: mate in 1 (for)
//! Score: +5.23 pawns
//! Win rate: 99.2%
//! PV: Qxf7+ Kd8
//! Candidate 2: Nf3
//! Capture: none
//! Check: no
//! Mate: none
//! Score: +0.35 pawns
//! Win rate: 53.7%
//! PV: Nf3 Nc6 Bb5
//! Best move: Qxf7+
//! </think>
//! <answer> Qxf7+ </answer>
//! ```
//!
//! Parsing is line-oriented and forgiving: free text between schema lines is
//! ignored, claim lines attach to the most recent `Candidate` header, labels
//! are matched case-insensitively, win rates are accepted as 0-1 fractions
//! or 0-100 percents (normalized to percent), and pawn scores may omit the
//! "pawns" suffix. `parse_trace` never fails; malformed structure is
//! reported through the format flags and absent claims.

use crate::chess::{parse_san, Move, Piece, Position, Square};
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Claim about whether a candidate move captures, and what.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaptureClaim {
    /// "Capture: none"
    NoCapture,
    /// "Capture: <Piece> on <square>"
    Takes { piece: Piece, square: Square },
}

/// Claim about a forced mate after the candidate move, from the mover's
/// point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MateClaim {
    /// "Mate: none"
    NoMate,
    /// "Mate: mate in <moves> (for|against)"
    In { moves: u32, for_mover: bool },
}

/// One candidate block: the move under analysis plus its claims. Absent
/// fields mean the trace did not state a claim, which the reward and metric
/// layers treat differently from a wrong claim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateClaim {
    /// Index as written in the trace ("Candidate 3:" gives 3).
    pub index: u32,
    /// Move text as written (SAN, possibly with annotations).
    pub san: String,
    pub capture: Option<CaptureClaim>,
    pub check: Option<bool>,
    pub mate: Option<MateClaim>,
    /// Signed pawn score; the schema resolution is 0.01 pawns.
    pub pawn_score: Option<f64>,
    /// Win rate as a percent in [0, 100].
    pub win_rate: Option<f64>,
    /// Principal variation in SAN, starting with the candidate move itself,
    /// at most 5 plies.
    pub pv: Option<Vec<String>>,
}

impl CandidateClaim {
    pub fn new(index: u32, san: impl Into<String>) -> CandidateClaim {
        CandidateClaim {
            index,
            san: san.into(),
            capture: None,
            check: None,
            mate: None,
            pawn_score: None,
            win_rate: None,
            pv: None,
        }
    }

    fn has_any_claim(&self) -> bool {
        self.capture.is_some()
            || self.check.is_some()
            || self.mate.is_some()
            || self.pawn_score.is_some()
            || self.win_rate.is_some()
            || self.pv.is_some()
    }
}

/// Presence of the structural elements required by the schema.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatFlags {
    pub think_tags: bool,
    pub answer_tags: bool,
    /// At least one candidate block with at least one claim line.
    pub schema_blocks: bool,
}

impl FormatFlags {
    pub fn all(&self) -> bool {
        self.think_tags && self.answer_tags && self.schema_blocks
    }
}

/// A parsed reasoning trace. Keeps the raw text alongside the extracted
/// structure so downstream consumers can re-serialize or audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub raw: String,
    /// Content between the think tags, when both are present.
    pub think: Option<String>,
    /// The final move, when the answer block holds a single token.
    pub answer: Option<String>,
    pub candidates: Vec<CandidateClaim>,
    /// Move named on the "Best move:" line, if any.
    pub best_move_line: Option<String>,
    pub flags: FormatFlags,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("candidate {index} ({san:?}): {reason}")]
    InconsistentClaim {
        index: u32,
        san: String,
        reason: String,
    },
}

static THINK_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?s)<think>(.*?)</think>").unwrap());
static ANSWER_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?s)<answer>(.*?)</answer>").unwrap());
static CANDIDATE_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)^\s*candidate\s+(\d+)\s*:\s*(\S+)").unwrap());
static CAPTURE_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)^\s*capture\s*:\s*(.+?)\s*$").unwrap());
static CAPTURE_PIECE_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)^(pawn|knight|bishop|rook|queen|king)\s+on\s+([a-h][1-8])$").unwrap()
});
static CHECK_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)^\s*check\s*:\s*(yes|no|true|false)\s*$").unwrap());
static MATE_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)^\s*mate\s*:\s*(?:(none)|mate\s+in\s+(\d+)(?:\s*\((for|against)\))?)\s*$")
        .unwrap()
});
static SCORE_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)^\s*score\s*:\s*([+-]?\d+(?:\.\d+)?)\s*(?:pawns?)?\s*$").unwrap()
});
static WIN_RATE_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)^\s*win\s*rate\s*:\s*([+-]?\d+(?:\.\d+)?)\s*(%)?\s*$").unwrap()
});
static PV_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)^\s*pv\s*:\s*(.+?)\s*$").unwrap());
static BEST_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?i)^\s*best\s+move\s*:\s*(\S+)").unwrap());

/// Maximum PV length in plies, including the candidate move.
pub const MAX_PV_PLIES: usize = 5;

/// Strip decorations that do not change which move is meant: capture
/// markers, promotion '=', check/mate suffixes, and "!?" judgments.
pub fn normalize_move_text(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, 'x' | '=' | '+' | '#' | '!' | '?'))
        .collect()
}

/// Parse a trace. Never fails; structure that cannot be recognized is
/// simply absent from the result.
pub fn parse_trace(text: &str) -> ReasoningTrace {
    let think = THINK_RE
        .captures(text)
        .map(|c| c.get(1).unwrap().as_str().to_string());
    let answer_region = ANSWER_RE
        .captures(text)
        .map(|c| c.get(1).unwrap().as_str().to_string());
    let answer = answer_region.as_deref().and_then(|region| {
        let trimmed = region.trim();
        let mut tokens = trimmed.split_whitespace();
        match (tokens.next(), tokens.next()) {
            (Some(tok), None) => Some(tok.to_string()),
            _ => None,
        }
    });

    let mut candidates: Vec<CandidateClaim> = Vec::new();
    let mut best_move_line = None;
    for line in text.lines() {
        if let Some(caps) = CANDIDATE_RE.captures(line) {
            let index: u32 = caps[1].parse().unwrap_or(0);
            candidates.push(CandidateClaim::new(index, caps[2].to_string()));
            continue;
        }
        if let Some(caps) = BEST_RE.captures(line) {
            if best_move_line.is_none() {
                best_move_line = Some(caps[1].to_string());
            }
            continue;
        }
        let Some(current) = candidates.last_mut() else {
            continue;
        };
        if let Some(caps) = CAPTURE_RE.captures(line) {
            let value = caps[1].trim();
            if value.eq_ignore_ascii_case("none") {
                current.capture = Some(CaptureClaim::NoCapture);
            } else if let Some(pc) = CAPTURE_PIECE_RE.captures(value) {
                current.capture = Some(CaptureClaim::Takes {
                    piece: Piece::from_name(&pc[1]).unwrap(),
                    square: Square::parse(&pc[2].to_ascii_lowercase()).unwrap(),
                });
            }
        } else if let Some(caps) = CHECK_RE.captures(line) {
            current.check = Some(matches!(
                caps[1].to_ascii_lowercase().as_str(),
                "yes" | "true"
            ));
        } else if let Some(caps) = MATE_RE.captures(line) {
            if caps.get(1).is_some() {
                current.mate = Some(MateClaim::NoMate);
            } else {
                let moves: u32 = caps[2].parse().unwrap_or(0);
                if moves >= 1 {
                    // A bare "mate in n" without a side is read as a mate
                    // for the mover, the common way the phrase is used.
                    let for_mover = caps
                        .get(3)
                        .is_none_or(|m| m.as_str().eq_ignore_ascii_case("for"));
                    current.mate = Some(MateClaim::In { moves, for_mover });
                }
            }
        } else if let Some(caps) = SCORE_RE.captures(line) {
            if let Ok(v) = caps[1].parse::<f64>() {
                current.pawn_score = Some(v);
            }
        } else if let Some(caps) = WIN_RATE_RE.captures(line) {
            if let Ok(v) = caps[1].parse::<f64>() {
                let percent = if caps.get(2).is_none() && v <= 1.0 {
                    v * 100.0
                } else {
                    v
                };
                current.win_rate = Some(percent.clamp(0.0, 100.0));
            }
        } else if let Some(caps) = PV_RE.captures(line) {
            let tokens: Vec<String> = caps[1]
                .split_whitespace()
                .take(MAX_PV_PLIES)
                .map(str::to_string)
                .collect();
            // The schema requires the PV to open with the candidate move;
            // anything else is dropped rather than silently re-anchored.
            if !tokens.is_empty()
                && normalize_move_text(&tokens[0]) == normalize_move_text(&current.san)
            {
                current.pv = Some(tokens);
            }
        }
    }

    let schema_blocks = candidates.iter().any(CandidateClaim::has_any_claim);
    ReasoningTrace {
        raw: text.to_string(),
        think,
        answer,
        candidates,
        best_move_line,
        flags: FormatFlags {
            think_tags: think_tags_present(text),
            answer_tags: ANSWER_RE.is_match(text),
            schema_blocks,
        },
    }
}

fn think_tags_present(text: &str) -> bool {
    THINK_RE.is_match(text)
}

/// Render the canonical text for a structured trace. The inverse of
/// `parse_trace` for schema-conforming content: claims round-trip exactly
/// (pawn scores at the schema's 0.01 resolution).
pub fn serialize_trace(trace: &ReasoningTrace) -> Result<String, TraceError> {
    let mut out = String::from("<think>\n");
    for cand in &trace.candidates {
        if cand.san.is_empty() {
            return Err(TraceError::InconsistentClaim {
                index: cand.index,
                san: cand.san.clone(),
                reason: "empty move text".into(),
            });
        }
        writeln!(out, "Candidate {}: {}", cand.index, cand.san).unwrap();
        if let Some(capture) = &cand.capture {
            match capture {
                CaptureClaim::NoCapture => out.push_str("Capture: none\n"),
                CaptureClaim::Takes { piece, square } => {
                    writeln!(out, "Capture: {} on {}", piece.name(), square).unwrap()
                }
            }
        }
        if let Some(check) = cand.check {
            writeln!(out, "Check: {}", if check { "yes" } else { "no" }).unwrap();
        }
        if let Some(mate) = &cand.mate {
            match mate {
                MateClaim::NoMate => out.push_str("Mate: none\n"),
                MateClaim::In { moves, for_mover } => {
                    if *moves == 0 {
                        return Err(TraceError::InconsistentClaim {
                            index: cand.index,
                            san: cand.san.clone(),
                            reason: "mate in 0 is not a mate claim".into(),
                        });
                    }
                    writeln!(
                        out,
                        "Mate: mate in {} ({})",
                        moves,
                        if *for_mover { "for" } else { "against" }
                    )
                    .unwrap()
                }
            }
        }
        if let Some(score) = cand.pawn_score {
            writeln!(out, "Score: {score:+.2} pawns").unwrap();
        }
        if let Some(win_rate) = cand.win_rate {
            if !(0.0..=100.0).contains(&win_rate) {
                return Err(TraceError::InconsistentClaim {
                    index: cand.index,
                    san: cand.san.clone(),
                    reason: format!("win rate {win_rate} outside [0, 100]"),
                });
            }
            writeln!(out, "Win rate: {win_rate}%").unwrap();
        }
        if let Some(pv) = &cand.pv {
            if pv.is_empty() || pv.len() > MAX_PV_PLIES {
                return Err(TraceError::InconsistentClaim {
                    index: cand.index,
                    san: cand.san.clone(),
                    reason: format!("pv must hold 1..={MAX_PV_PLIES} plies"),
                });
            }
            if normalize_move_text(&pv[0]) != normalize_move_text(&cand.san) {
                return Err(TraceError::InconsistentClaim {
                    index: cand.index,
                    san: cand.san.clone(),
                    reason: format!("pv starts with {:?}, not the candidate move", pv[0]),
                });
            }
            writeln!(out, "PV: {}", pv.join(" ")).unwrap();
        }
    }
    if let Some(best) = &trace.best_move_line {
        writeln!(out, "Best move: {best}").unwrap();
    }
    out.push_str("</think>\n");
    match &trace.answer {
        Some(answer) => writeln!(out, "<answer> {answer} </answer>").unwrap(),
        None => out.push_str("<answer> </answer>\n"),
    }
    Ok(out)
}

/// Resolve candidate move text against a position, leniently: SAN first,
/// then long algebraic.
pub fn resolve_move_text(pos: &Position, text: &str) -> Option<Move> {
    parse_san(pos, text)
        .ok()
        .or_else(|| pos.move_from_uci(text).ok())
}

/// Drop repeated candidates, keeping the first occurrence. Two candidates
/// are duplicates when they resolve to the same legal move; unresolvable
/// ones fall back to annotation-stripped text comparison. Without a
/// position only the textual comparison applies.
pub fn dedupe_candidates(trace: &ReasoningTrace, pos: Option<&Position>) -> ReasoningTrace {
    let mut seen: Vec<DedupeKey> = Vec::new();
    let mut out = trace.clone();
    out.candidates = Vec::with_capacity(trace.candidates.len());
    for cand in &trace.candidates {
        let key = match pos.and_then(|p| resolve_move_text(p, &cand.san)) {
            Some(m) => DedupeKey::Resolved(m.key()),
            None => DedupeKey::Text(normalize_move_text(&cand.san)),
        };
        if !seen.contains(&key) {
            seen.push(key);
            out.candidates.push(cand.clone());
        }
    }
    out
}

#[derive(PartialEq)]
enum DedupeKey {
    Resolved(crate::chess::MoveKey),
    Text(String),
}
