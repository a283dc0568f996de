//! Held-out evaluation metrics: prediction accuracy, candidate coverage,
//! and per-claim reasoning quality. Candidates are deduplicated before any
//! metric is computed, and a missing numeric claim on a truth-covered
//! candidate takes a worst-case penalty instead of shrinking the
//! denominator, so omission never pays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chess::Position;
use crate::oracle::{AnalysisRecord, ScoredMove};
use crate::rewards::{logic_consistency, verify_capture, verify_check, ScoreError};
use crate::trace::{dedupe_candidates, resolve_move_text, MateClaim, ReasoningTrace, MAX_PV_PLIES};

/// Worst-case win-rate error in percentage points.
pub const WR_PENALTY_PP: f64 = 100.0;
/// Worst-case pawn-score error in pawns.
pub const PAWN_PENALTY: f64 = 10.0;
/// Worst-case pv overlap.
pub const PV_PENALTY: f64 = 0.0;
/// Engine moves checked for coverage unless the caller asks otherwise.
pub const DEFAULT_COVERAGE_K: usize = 3;

/// Everything measured on one trace. Numeric error vectors hold one entry
/// per truth-covered candidate (penalty entries included); optional fields
/// are set only when their applicability condition holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleEvaluation {
    pub fen: String,
    /// Answer resolves to the record's top move.
    pub top1_hit: bool,
    /// Fraction of the record's top-k moves found among the candidates.
    pub coverage: f64,
    /// Win-rate absolute errors in percentage points.
    pub wr_errors: Vec<f64>,
    /// Pawn-score absolute errors in pawns.
    pub pawn_errors: Vec<f64>,
    /// Pv overlap fractions in [0, 1].
    pub pv_overlaps: Vec<f64>,
    /// Stated best move is the argmax of the claimed win rates.
    pub consistency: f64,
    /// Every capturing candidate's capture claim is correct. Set only when
    /// some candidate move captures.
    pub capture_correct: Option<bool>,
    /// Every checking candidate's check claim is correct. Set only when
    /// some candidate move gives check.
    pub check_correct: Option<bool>,
    /// Mean mate-distance error in moves, a missing or wrong-side claim
    /// counting as "mate in 0". Set only when the engine found a mate for
    /// a covered candidate.
    pub mate_error: Option<f64>,
    /// Distinct candidates after deduplication.
    pub unique_candidates: usize,
    pub format_error: bool,
    /// Legal candidates the record has no entry for.
    pub truth_gaps: u32,
}

impl SampleEvaluation {
    pub fn wr_mae(&self) -> Option<f64> {
        mean(&self.wr_errors)
    }

    pub fn pawn_mae(&self) -> Option<f64> {
        mean(&self.pawn_errors)
    }

    pub fn pv_overlap(&self) -> Option<f64> {
        mean(&self.pv_overlaps)
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Unweighted lockstep prefix agreement: matched plies over the truth
/// depth, both capped at [`MAX_PV_PLIES`].
fn pv_overlap(claimed: &[String], truth: &[String], pos: &Position) -> f64 {
    let depth = truth.len().min(MAX_PV_PLIES);
    if depth == 0 {
        return 0.0;
    }
    let mut cur = pos.clone();
    let mut matched = 0usize;
    for (i, truth_text) in truth.iter().take(depth).enumerate() {
        let Some(truth_move) = resolve_move_text(&cur, truth_text) else {
            break;
        };
        let claimed_move = claimed.get(i).and_then(|s| resolve_move_text(&cur, s));
        if claimed_move.map(|m| m.key()) != Some(truth_move.key()) {
            break;
        }
        matched = i + 1;
        cur = cur.apply(&truth_move);
    }
    matched as f64 / depth as f64
}

fn mate_distance_error(claim: Option<&MateClaim>, truth_mate: i32) -> f64 {
    let truth_moves = f64::from(truth_mate.unsigned_abs());
    let claimed_moves = match claim {
        Some(MateClaim::In { moves, for_mover }) if *for_mover == (truth_mate > 0) => {
            f64::from(*moves)
        }
        _ => 0.0,
    };
    (claimed_moves - truth_moves).abs()
}

/// Evaluate one trace against the position's analysis record. `k_cov` is
/// the number of top engine moves the coverage metric looks for; a record
/// with fewer moves shrinks the denominator to what it has.
pub fn evaluate_sample(
    trace: &ReasoningTrace,
    record: &AnalysisRecord,
    k_cov: usize,
) -> Result<SampleEvaluation, ScoreError> {
    let pos = Position::from_fen_lenient(&record.fen).map_err(|e| ScoreError::BadFen {
        fen: record.fen.clone(),
        reason: e.to_string(),
    })?;
    let truth: Vec<(crate::chess::MoveKey, &ScoredMove)> = record
        .moves
        .iter()
        .filter_map(|m| resolve_move_text(&pos, &m.san).map(|mv| (mv.key(), m)))
        .collect();
    let entry_for = |key: crate::chess::MoveKey| {
        truth
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, entry)| *entry)
    };

    let deduped = dedupe_candidates(trace, Some(&pos));
    let mut eval = SampleEvaluation {
        fen: pos.fen(),
        top1_hit: false,
        coverage: 0.0,
        wr_errors: Vec::new(),
        pawn_errors: Vec::new(),
        pv_overlaps: Vec::new(),
        consistency: 0.0,
        capture_correct: None,
        check_correct: None,
        mate_error: None,
        unique_candidates: deduped.candidates.len(),
        format_error: !trace.flags.all(),
        truth_gaps: 0,
    };

    // A trace with no candidates at all is degenerate: every numeric
    // metric takes its worst case, whatever the record holds.
    if deduped.candidates.is_empty() {
        eval.wr_errors.push(WR_PENALTY_PP);
        eval.pawn_errors.push(PAWN_PENALTY);
        eval.pv_overlaps.push(PV_PENALTY);
        return Ok(eval);
    }

    let mut candidate_keys = Vec::new();
    let mut mate_errors = Vec::new();
    for cand in &deduped.candidates {
        let resolved = resolve_move_text(&pos, &cand.san);
        let entry = resolved.and_then(|m| entry_for(m.key()));
        if let Some(mv) = resolved {
            candidate_keys.push(mv.key());
            if entry.is_none() {
                eval.truth_gaps += 1;
            }
            if mv.capture().is_some() {
                let ok = cand
                    .capture
                    .as_ref()
                    .map_or(false, |c| verify_capture(c, mv.capture()) == 1.0);
                eval.capture_correct = Some(eval.capture_correct.unwrap_or(true) && ok);
            }
            if mv.gives_check() {
                let ok = cand.check.map_or(false, |c| verify_check(c, true) == 1.0);
                eval.check_correct = Some(eval.check_correct.unwrap_or(true) && ok);
            }
        }
        let Some(entry) = entry else { continue };
        eval.wr_errors.push(match cand.win_rate {
            Some(claim) => (claim - entry.win_rate()).abs(),
            None => WR_PENALTY_PP,
        });
        if !entry.is_mate() {
            eval.pawn_errors.push(match cand.pawn_score {
                Some(claim) => (claim - entry.pawn_score()).abs(),
                None => PAWN_PENALTY,
            });
        }
        if !entry.pv.is_empty() {
            eval.pv_overlaps.push(match &cand.pv {
                Some(claimed) => pv_overlap(claimed, &entry.pv, &pos),
                None => PV_PENALTY,
            });
        }
        if let Some(truth_mate) = entry.mate {
            mate_errors.push(mate_distance_error(cand.mate.as_ref(), truth_mate));
        }
    }
    eval.mate_error = mean(&mate_errors);
    eval.consistency = logic_consistency(&deduped, Some(&pos));

    let k = k_cov.min(record.moves.len()).max(1);
    let top_k: Vec<crate::chess::MoveKey> = record.moves[..k.min(record.moves.len())]
        .iter()
        .filter_map(|m| resolve_move_text(&pos, &m.san).map(|mv| mv.key()))
        .collect();
    let found = top_k
        .iter()
        .filter(|key| candidate_keys.contains(key))
        .count();
    eval.coverage = found as f64 / k as f64;

    let best_key = record
        .best()
        .and_then(|m| resolve_move_text(&pos, &m.san))
        .map(|mv| mv.key());
    let answer_key = trace
        .answer
        .as_deref()
        .and_then(|a| resolve_move_text(&pos, a))
        .map(|mv| mv.key());
    eval.top1_hit = best_key.is_some() && answer_key == best_key;

    Ok(eval)
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot aggregate zero evaluations")]
    Empty,
}

/// One aggregated metric: the mean over its applicable denominator and the
/// number of samples that denominator held.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub samples: usize,
}

fn aggregate_of(values: impl IntoIterator<Item = Option<f64>>) -> Option<Aggregate> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values.into_iter().flatten() {
        sum += v;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(Aggregate {
            mean: sum / n as f64,
            samples: n,
        })
    }
}

/// Corpus-level report. Full-set metrics keep the total sample count;
/// applicability-scoped metrics carry their own denominators and are absent
/// when no sample qualified.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub top1_acc: f64,
    pub coverage: f64,
    pub consistency: f64,
    pub move_diversity: f64,
    pub format_error_rate: f64,
    pub wr_mae: Option<Aggregate>,
    pub pawn_mae: Option<Aggregate>,
    pub pv_overlap: Option<Aggregate>,
    pub capture_acc: Option<Aggregate>,
    pub check_acc: Option<Aggregate>,
    pub mate_mae: Option<Aggregate>,
    pub truth_gaps: u64,
}

/// Fold per-sample evaluations into corpus means. Per-sample means are
/// formed first, then averaged over the samples where the metric applied.
pub fn aggregate(evaluations: &[SampleEvaluation]) -> Result<MetricsReport, MetricsError> {
    if evaluations.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = evaluations.len() as f64;
    let full = |f: &dyn Fn(&SampleEvaluation) -> f64| {
        evaluations.iter().map(f).sum::<f64>() / n
    };
    let bit = |b: bool| if b { 1.0 } else { 0.0 };
    Ok(MetricsReport {
        samples: evaluations.len(),
        top1_acc: full(&|e| bit(e.top1_hit)),
        coverage: full(&|e| e.coverage),
        consistency: full(&|e| e.consistency),
        move_diversity: full(&|e| e.unique_candidates as f64),
        format_error_rate: full(&|e| bit(e.format_error)),
        wr_mae: aggregate_of(evaluations.iter().map(|e| e.wr_mae())),
        pawn_mae: aggregate_of(evaluations.iter().map(|e| e.pawn_mae())),
        pv_overlap: aggregate_of(evaluations.iter().map(|e| e.pv_overlap())),
        capture_acc: aggregate_of(evaluations.iter().map(|e| e.capture_correct.map(bit))),
        check_acc: aggregate_of(evaluations.iter().map(|e| e.check_correct.map(bit))),
        mate_mae: aggregate_of(evaluations.iter().map(|e| e.mate_error)),
        truth_gaps: evaluations.iter().map(|e| u64::from(e.truth_gaps)).sum(),
    })
}

fn push_row(out: &mut String, cells: &[(String, String)]) {
    let mut header = String::new();
    let mut values = String::new();
    for (name, value) in cells {
        let w = name.len().max(value.len());
        if !header.is_empty() {
            header.push_str("  ");
            values.push_str("  ");
        }
        header.push_str(&format!("{name:>w$}"));
        values.push_str(&format!("{value:>w$}"));
    }
    out.push_str(&header);
    out.push('\n');
    out.push_str(&values);
    out.push('\n');
}

fn opt_cell(a: Option<Aggregate>, digits: usize) -> String {
    match a {
        Some(a) => format!("{:.digits$} (n={})", a.mean, a.samples),
        None => "-".into(),
    }
}

/// Render the report as two aligned rows of named columns.
pub fn render_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        &[
            ("Top-1 Acc.".into(), format!("{:.3}", report.top1_acc)),
            ("Coverage".into(), format!("{:.3}", report.coverage)),
            ("WR MAE".into(), opt_cell(report.wr_mae, 2)),
            ("Pawn MAE".into(), opt_cell(report.pawn_mae, 3)),
            ("PV Overlap".into(), opt_cell(report.pv_overlap, 3)),
            ("Consist.".into(), format!("{:.3}", report.consistency)),
        ],
    );
    out.push('\n');
    push_row(
        &mut out,
        &[
            ("Capture".into(), opt_cell(report.capture_acc, 3)),
            ("Check".into(), opt_cell(report.check_acc, 3)),
            ("Mate MAE".into(), opt_cell(report.mate_mae, 3)),
            ("Move Div.".into(), format!("{:.2}", report.move_diversity)),
            ("Form. Err.".into(), format!("{:.3}", report.format_error_rate)),
            ("Samples".into(), report.samples.to_string()),
        ],
    );
    out
}
