//! The verifier: checks every extracted claim against ground truth and
//! composes the total reward R = R_form + R_acc + λ·R_reason.
//!
//! Seven subtasks are scored. Three carry engine truth (win rate, pawn
//! score, principal variation), three carry rule truth (capture, check,
//! mate distance), and one is internal (logic consistency: the stated
//! answer must be the candidate with the highest claimed win rate).
//!
//! Numeric subtasks use a flat-zone reward: full credit within δ of the
//! truth, linear decay to zero at Δ. A missing claim on an applicable
//! subtask scores zero; a subtask with no defined contribution on any
//! candidate is inapplicable and its weight is renormalized away.

use crate::chess::{Move, MoveKey, Position};
use crate::oracle::{AnalysisRecord, ScoredMove};
use crate::trace::{
    dedupe_candidates, normalize_move_text, resolve_move_text, CaptureClaim, MateClaim,
    ReasoningTrace,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// The seven reasoning subtasks, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtaskId {
    WinRate,
    PawnScore,
    Pv,
    Capture,
    Check,
    Mate,
    LogicConsistency,
}

/// Number of reasoning subtasks.
pub const K: usize = 7;

impl SubtaskId {
    pub const ALL: [SubtaskId; K] = [
        SubtaskId::WinRate,
        SubtaskId::PawnScore,
        SubtaskId::Pv,
        SubtaskId::Capture,
        SubtaskId::Check,
        SubtaskId::Mate,
        SubtaskId::LogicConsistency,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            SubtaskId::WinRate => "win_rate",
            SubtaskId::PawnScore => "pawn_score",
            SubtaskId::Pv => "pv",
            SubtaskId::Capture => "capture",
            SubtaskId::Check => "check",
            SubtaskId::Mate => "mate",
            SubtaskId::LogicConsistency => "logic_consistency",
        }
    }
}

/// Saturation rule for distances between two large magnitudes: when both
/// claimed and true values exceed `beyond`, the distance is capped at `at`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationCap {
    pub beyond: f64,
    pub at: f64,
}

/// Flat-zone reward shape: full credit within `flat` of the truth, linear
/// decay reaching zero at `zero`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardShape {
    pub flat: f64,
    pub zero: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<SaturationCap>,
}

impl RewardShape {
    pub fn valid(&self) -> bool {
        self.flat >= 0.0 && self.flat < self.zero
    }
}

/// Win-rate distances are in percentage points.
pub const WIN_RATE_SHAPE: RewardShape = RewardShape {
    flat: 0.1,
    zero: 10.0,
    cap: None,
};

/// Pawn-score distances are in pawns; beyond five pawns on both sides the
/// exact magnitude stops mattering and the distance caps at two.
pub const PAWN_SHAPE: RewardShape = RewardShape {
    flat: 0.1,
    zero: 3.0,
    cap: Some(SaturationCap {
        beyond: 5.0,
        at: 2.0,
    }),
};

/// Depth weights for principal-variation agreement at continuation plies
/// one through four.
pub const PV_WEIGHTS: [f64; 4] = [0.4, 0.3, 0.2, 0.1];

/// Mate-distance tolerance in moves: credit decays linearly and runs out
/// three moves off the true distance.
pub const MATE_TOLERANCE: f64 = 3.0;

/// Piecewise flat-zone reward. 1 on [0, flat], linear on (flat, zero],
/// 0 beyond; continuous everywhere.
pub fn flat_zone_reward(d: f64, shape: &RewardShape) -> f64 {
    assert!(shape.valid(), "reward shape requires 0 <= flat < zero");
    assert!(d >= 0.0, "distance is an absolute value");
    if d <= shape.flat {
        1.0
    } else if d <= shape.zero {
        1.0 - (d - shape.flat) / (shape.zero - shape.flat)
    } else {
        0.0
    }
}

/// Win-rate agreement in percentage points.
pub fn verify_win_rate(claim: f64, truth: f64) -> f64 {
    verify_win_rate_shaped(claim, truth, &WIN_RATE_SHAPE)
}

pub fn verify_win_rate_shaped(claim: f64, truth: f64, shape: &RewardShape) -> f64 {
    flat_zone_reward((claim - truth).abs(), shape)
}

/// Pawn-score agreement. Opposite nonzero signs score zero outright; when
/// both sides agree the position is lopsided (beyond five pawns) the
/// distance caps at two before the flat-zone rule.
pub fn verify_pawn_score(claim: f64, truth: f64) -> f64 {
    verify_pawn_score_shaped(claim, truth, &PAWN_SHAPE)
}

pub fn verify_pawn_score_shaped(claim: f64, truth: f64, shape: &RewardShape) -> f64 {
    if claim * truth < 0.0 {
        return 0.0;
    }
    let mut d = (claim - truth).abs();
    if let Some(cap) = shape.cap {
        if claim.abs() > cap.beyond && truth.abs() > cap.beyond {
            d = d.min(cap.at);
        }
    }
    flat_zone_reward(d, shape)
}

/// Depth-weighted prefix agreement between a claimed and a true pv, both
/// starting at `pos`. The first move gates: any disagreement there is zero.
/// Continuation plies carry weights [0.4, 0.3, 0.2, 0.1], renormalized over
/// the plies the truth pv actually has, and agreement stops at the first
/// mismatch. Moves are compared resolved, so spelling differences never
/// count against a claim; a claimed move that fails to resolve is a
/// mismatch.
pub fn verify_pv(claimed: &[String], truth: &[String], pos: &Position) -> f64 {
    if claimed.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let mut cur = pos.clone();
    let depth = truth.len().min(1 + PV_WEIGHTS.len());
    let mut matched = 0usize;
    for i in 0..depth {
        let truth_move = match resolve_move_text(&cur, &truth[i]) {
            Some(m) => m,
            None => break,
        };
        let claimed_move = claimed.get(i).and_then(|s| resolve_move_text(&cur, s));
        if claimed_move.map(|m| m.key()) != Some(truth_move.key()) {
            break;
        }
        matched = i + 1;
        cur = cur.apply(&truth_move);
    }
    if matched == 0 {
        return 0.0;
    }
    let available = &PV_WEIGHTS[..depth - 1];
    if available.is_empty() {
        // Single-ply truth: the gate alone decides.
        return 1.0;
    }
    let earned: f64 = PV_WEIGHTS[..matched - 1].iter().sum();
    earned / available.iter().sum::<f64>()
}

/// Capture claim against rule truth: polarity, captured piece kind, and
/// square must all match.
pub fn verify_capture(claim: &CaptureClaim, truth_capture: Option<(crate::chess::Piece, crate::chess::Square)>) -> f64 {
    let correct = match (claim, truth_capture) {
        (CaptureClaim::NoCapture, None) => true,
        (CaptureClaim::Takes { piece, square }, Some((tp, ts))) => *piece == tp && *square == ts,
        _ => false,
    };
    if correct {
        1.0
    } else {
        0.0
    }
}

/// Check claim against rule truth.
pub fn verify_check(claim: bool, truth_gives_check: bool) -> f64 {
    if claim == truth_gives_check {
        1.0
    } else {
        0.0
    }
}

/// Mate-distance agreement, evaluated only when the truth holds a mate.
/// `truth_mate` is signed moves (positive: the mover mates). Exact distance
/// scores one; each move of error costs a third; denying the mate or
/// putting it on the wrong side scores zero.
pub fn verify_mate(claim: Option<&MateClaim>, truth_mate: i32) -> f64 {
    debug_assert!(truth_mate != 0);
    let Some(MateClaim::In { moves, for_mover }) = claim else {
        return 0.0;
    };
    if *for_mover != (truth_mate > 0) {
        return 0.0;
    }
    let d = (*moves as f64 - truth_mate.abs() as f64).abs();
    (1.0 - d / MATE_TOLERANCE).max(0.0)
}

/// Whether the stated answer is the candidate with the strictly highest
/// claimed win rate (ties keep the first occurrence). Zero when the answer
/// is absent or no candidate claims a win rate. Depends only on the
/// ordering of claims, never on engine truth.
pub fn logic_consistency(trace: &ReasoningTrace, pos: Option<&Position>) -> f64 {
    let Some(answer) = &trace.answer else {
        return 0.0;
    };
    let mut best: Option<(&str, f64)> = None;
    for cand in &trace.candidates {
        if let Some(wr) = cand.win_rate {
            if best.is_none_or(|(_, b)| wr > b) {
                best = Some((&cand.san, wr));
            }
        }
    }
    let Some((best_san, _)) = best else {
        return 0.0;
    };
    if same_move(pos, answer, best_san) {
        1.0
    } else {
        0.0
    }
}

/// Move-text equality: resolved against the position when both sides
/// resolve, otherwise annotation-stripped text.
fn same_move(pos: Option<&Position>, a: &str, b: &str) -> bool {
    if let Some(pos) = pos {
        if let (Some(ma), Some(mb)) = (resolve_move_text(pos, a), resolve_move_text(pos, b)) {
            return ma.key() == mb.key();
        }
    }
    normalize_move_text(a) == normalize_move_text(b)
}

/// Where R_acc comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyProvider {
    /// Engine win rate of the answered move, scaled to [0, 1]. Dense
    /// signal; unknown or illegal answers score zero.
    #[default]
    EngineDense,
    /// One iff the answer is the record's top move.
    ExactMatch,
}

/// Scoring knobs. Defaults follow the published setup: λ = 1, the dense
/// accuracy provider, and the standard flat-zone shapes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreConfig {
    pub lambda: f64,
    pub accuracy: AccuracyProvider,
    pub win_rate_shape: RewardShape,
    pub pawn_shape: RewardShape,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            lambda: 1.0,
            accuracy: AccuracyProvider::EngineDense,
            win_rate_shape: WIN_RATE_SHAPE,
            pawn_shape: PAWN_SHAPE,
        }
    }
}

/// One subtask's outcome for a trace.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SubtaskReward {
    pub subtask: SubtaskId,
    /// Mean contribution over candidates where defined; 0.0 when
    /// inapplicable (and then excluded from R_reason).
    pub reward: f64,
    pub applicable: bool,
    /// Renormalized weight actually applied; 0.0 when inapplicable.
    pub weight: f64,
}

/// One verified claim on one candidate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub subtask: SubtaskId,
    pub reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claimed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

/// Verification detail for one deduplicated candidate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidateDetail {
    pub san: String,
    pub legal: bool,
    /// Whether the analysis record scores this move.
    pub covered: bool,
    pub checks: Vec<ClaimCheck>,
}

/// Full scoring result for one trace against one position record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub fen: String,
    pub answer: Option<String>,
    pub subtasks: Vec<SubtaskReward>,
    pub r_reason: f64,
    pub r_form: f64,
    pub r_acc: f64,
    pub lambda: f64,
    pub total: f64,
    /// Weight vector the caller supplied, before renormalization.
    pub weights: Vec<f64>,
    pub candidates: Vec<CandidateDetail>,
    /// Legal moves (candidates or answer) the record could not score.
    pub truth_gaps: u32,
}

impl RewardBreakdown {
    pub fn subtask(&self, id: SubtaskId) -> &SubtaskReward {
        &self.subtasks[id.index()]
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("record fen {fen:?} is unusable: {reason}")]
    BadFen { fen: String, reason: String },
    #[error("expected {K} subtask weights, got {0}")]
    WeightCount(usize),
}

/// Score a parsed trace against an analysis record. `weights` is the raw
/// K-vector from the scheduler (any non-negative scale); renormalization
/// over the applicable subtasks happens here.
pub fn score_trace(
    trace: &ReasoningTrace,
    record: &AnalysisRecord,
    weights: &[f64],
    cfg: &ScoreConfig,
) -> Result<RewardBreakdown, ScoreError> {
    if weights.len() != K {
        return Err(ScoreError::WeightCount(weights.len()));
    }
    let pos = Position::from_fen_lenient(&record.fen).map_err(|e| ScoreError::BadFen {
        fen: record.fen.clone(),
        reason: e.to_string(),
    })?;
    let truth: HashMap<MoveKey, &ScoredMove> = record
        .moves
        .iter()
        .filter_map(|m| resolve_move_text(&pos, &m.san).map(|mv| (mv.key(), m)))
        .collect();

    let deduped = dedupe_candidates(trace, Some(&pos));
    let mut sums = [0.0f64; K];
    let mut counts = [0usize; K];
    let mut details = Vec::with_capacity(deduped.candidates.len());
    let mut truth_gaps = 0u32;

    for cand in &deduped.candidates {
        let resolved = resolve_move_text(&pos, &cand.san);
        let entry = resolved.and_then(|m| truth.get(&m.key()).copied());
        if resolved.is_some() && entry.is_none() {
            truth_gaps += 1;
        }
        let mut checks = Vec::new();
        let mut add = |id: SubtaskId, check: ClaimCheck| {
            sums[id.index()] += check.reward;
            counts[id.index()] += 1;
            checks.push(check);
        };

        check_capture(cand, resolved.as_ref(), &mut add);
        check_check(cand, resolved.as_ref(), &mut add);
        check_win_rate(cand, resolved.is_some(), entry, &cfg.win_rate_shape, &mut add);
        check_pawn(cand, resolved.is_some(), entry, &cfg.pawn_shape, &mut add);
        check_pv(cand, resolved.is_some(), entry, &pos, &mut add);
        check_mate(cand, resolved.is_some(), entry, &mut add);

        details.push(CandidateDetail {
            san: cand.san.clone(),
            legal: resolved.is_some(),
            covered: entry.is_some(),
            checks,
        });
    }

    if !deduped.candidates.is_empty() {
        let idx = SubtaskId::LogicConsistency.index();
        sums[idx] = logic_consistency(&deduped, Some(&pos));
        counts[idx] = 1;
    }

    // Renormalize weights over the applicable set and aggregate. The sum
    // is divided by the applicable mass once at the end, so uniform
    // weights reduce to the plain arithmetic mean exactly.
    let mut subtasks = Vec::with_capacity(K);
    let applicable_mass: f64 = SubtaskId::ALL
        .iter()
        .filter(|id| counts[id.index()] > 0)
        .map(|id| weights[id.index()])
        .sum();
    let mut weighted_sum = 0.0;
    for id in SubtaskId::ALL {
        let i = id.index();
        let applicable = counts[i] > 0;
        let reward = if applicable {
            sums[i] / counts[i] as f64
        } else {
            0.0
        };
        let weight = if applicable && applicable_mass > 0.0 {
            weighted_sum += weights[i] * reward;
            weights[i] / applicable_mass
        } else {
            0.0
        };
        subtasks.push(SubtaskReward {
            subtask: id,
            reward,
            applicable,
            weight,
        });
    }
    let r_reason = if applicable_mass > 0.0 {
        weighted_sum / applicable_mass
    } else {
        0.0
    };

    let r_form = if trace.flags.all() { 1.0 } else { 0.0 };
    let answer_move = trace
        .answer
        .as_deref()
        .and_then(|a| resolve_move_text(&pos, a));
    let r_acc = match cfg.accuracy {
        AccuracyProvider::EngineDense => match answer_move {
            Some(m) => match truth.get(&m.key()) {
                Some(entry) => entry.win_rate() / 100.0,
                None => {
                    truth_gaps += 1;
                    log::debug!("answer {:?} legal but not in record for {}", trace.answer, pos.fen());
                    0.0
                }
            },
            None => 0.0,
        },
        AccuracyProvider::ExactMatch => {
            let top = record
                .best()
                .and_then(|m| resolve_move_text(&pos, &m.san).map(|mv| mv.key()));
            match (answer_move, top) {
                (Some(a), Some(t)) if a.key() == t => 1.0,
                _ => 0.0,
            }
        }
    };
    let total = r_form + r_acc + cfg.lambda * r_reason;

    Ok(RewardBreakdown {
        fen: pos.fen(),
        answer: trace.answer.clone(),
        subtasks,
        r_reason,
        r_form,
        r_acc,
        lambda: cfg.lambda,
        total,
        weights: weights.to_vec(),
        candidates: details,
        truth_gaps,
    })
}

fn check_capture(
    cand: &crate::trace::CandidateClaim,
    resolved: Option<&Move>,
    add: &mut impl FnMut(SubtaskId, ClaimCheck),
) {
    let claimed = cand.capture.as_ref().map(|c| match c {
        CaptureClaim::NoCapture => "none".to_string(),
        CaptureClaim::Takes { piece, square } => format!("{} on {}", piece.name(), square),
    });
    let (reward, truth) = match resolved {
        None => (0.0, None),
        Some(m) => {
            let truth_text = match m.capture() {
                None => "none".to_string(),
                Some((p, s)) => format!("{} on {}", p.name(), s),
            };
            let reward = match &cand.capture {
                None => 0.0,
                Some(claim) => verify_capture(claim, m.capture()),
            };
            (reward, Some(truth_text))
        }
    };
    add(
        SubtaskId::Capture,
        ClaimCheck {
            subtask: SubtaskId::Capture,
            reward,
            claimed,
            truth,
            distance: None,
        },
    );
}

fn check_check(
    cand: &crate::trace::CandidateClaim,
    resolved: Option<&Move>,
    add: &mut impl FnMut(SubtaskId, ClaimCheck),
) {
    let claimed = cand.check.map(|c| if c { "yes" } else { "no" }.to_string());
    let (reward, truth) = match resolved {
        None => (0.0, None),
        Some(m) => {
            let reward = match cand.check {
                None => 0.0,
                Some(claim) => verify_check(claim, m.gives_check()),
            };
            (
                reward,
                Some(if m.gives_check() { "yes" } else { "no" }.to_string()),
            )
        }
    };
    add(
        SubtaskId::Check,
        ClaimCheck {
            subtask: SubtaskId::Check,
            reward,
            claimed,
            truth,
            distance: None,
        },
    );
}

fn check_win_rate(
    cand: &crate::trace::CandidateClaim,
    legal: bool,
    entry: Option<&ScoredMove>,
    shape: &RewardShape,
    add: &mut impl FnMut(SubtaskId, ClaimCheck),
) {
    let (reward, truth, distance) = match (legal, entry, cand.win_rate) {
        (true, Some(t), Some(claim)) => {
            let truth_wr = t.win_rate();
            (
                verify_win_rate_shaped(claim, truth_wr, shape),
                Some(format!("{truth_wr}")),
                Some((claim - truth_wr).abs()),
            )
        }
        (true, Some(t), None) => (0.0, Some(format!("{}", t.win_rate())), None),
        _ => (0.0, None, None),
    };
    add(
        SubtaskId::WinRate,
        ClaimCheck {
            subtask: SubtaskId::WinRate,
            reward,
            claimed: cand.win_rate.map(|v| format!("{v}")),
            truth,
            distance,
        },
    );
}

fn check_pawn(
    cand: &crate::trace::CandidateClaim,
    legal: bool,
    entry: Option<&ScoredMove>,
    shape: &RewardShape,
    add: &mut impl FnMut(SubtaskId, ClaimCheck),
) {
    // A mate-scored truth entry has no centipawn value to compare with:
    // the contribution is undefined, not zero.
    if let Some(t) = entry {
        if legal && t.is_mate() {
            return;
        }
    }
    let (reward, truth, distance) = match (legal, entry, cand.pawn_score) {
        (true, Some(t), Some(claim)) => {
            let truth_pawns = t.pawn_score();
            (
                verify_pawn_score_shaped(claim, truth_pawns, shape),
                Some(format!("{truth_pawns}")),
                Some((claim - truth_pawns).abs()),
            )
        }
        (true, Some(t), None) => (0.0, Some(format!("{}", t.pawn_score())), None),
        _ => (0.0, None, None),
    };
    add(
        SubtaskId::PawnScore,
        ClaimCheck {
            subtask: SubtaskId::PawnScore,
            reward,
            claimed: cand.pawn_score.map(|v| format!("{v}")),
            truth,
            distance,
        },
    );
}

fn check_pv(
    cand: &crate::trace::CandidateClaim,
    legal: bool,
    entry: Option<&ScoredMove>,
    pos: &Position,
    add: &mut impl FnMut(SubtaskId, ClaimCheck),
) {
    // A truth entry without a stored line gives the claim nothing to match
    // against: the contribution is undefined, as with mate-scored pawn
    // entries.
    if let Some(t) = entry {
        if legal && t.pv.is_empty() {
            return;
        }
    }
    let (reward, truth) = match (legal, entry, &cand.pv) {
        (true, Some(t), Some(claimed)) => (
            verify_pv(claimed, &t.pv, pos),
            Some(t.pv.join(" ")),
        ),
        (true, Some(t), None) => (0.0, Some(t.pv.join(" "))),
        _ => (0.0, None),
    };
    add(
        SubtaskId::Pv,
        ClaimCheck {
            subtask: SubtaskId::Pv,
            reward,
            claimed: cand.pv.as_ref().map(|pv| pv.join(" ")),
            truth,
            distance: None,
        },
    );
}

fn check_mate(
    cand: &crate::trace::CandidateClaim,
    legal: bool,
    entry: Option<&ScoredMove>,
    add: &mut impl FnMut(SubtaskId, ClaimCheck),
) {
    // Defined only when the truth entry holds a mate; everywhere else the
    // subtask stays silent for this candidate.
    let Some(t) = entry else { return };
    let Some(truth_mate) = t.mate else { return };
    if !legal {
        return;
    }
    let reward = verify_mate(cand.mate.as_ref(), truth_mate);
    let claimed = cand.mate.as_ref().map(|m| match m {
        MateClaim::NoMate => "none".to_string(),
        MateClaim::In { moves, for_mover } => format!(
            "mate in {} ({})",
            moves,
            if *for_mover { "for" } else { "against" }
        ),
    });
    let claimed_moves = match cand.mate {
        Some(MateClaim::In { moves, for_mover }) if for_mover == (truth_mate > 0) => {
            Some(moves as f64)
        }
        _ => None,
    };
    add(
        SubtaskId::Mate,
        ClaimCheck {
            subtask: SubtaskId::Mate,
            reward,
            claimed,
            truth: Some(format!(
                "mate in {} ({})",
                truth_mate.abs(),
                if truth_mate > 0 { "for" } else { "against" }
            )),
            distance: claimed_moves.map(|n| (n - truth_mate.abs() as f64).abs()),
        },
    );
}
