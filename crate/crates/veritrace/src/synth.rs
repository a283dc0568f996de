//! Synthetic reasoning traces built from analysis records. Each candidate
//! block copies engine truth (score, win rate, pv, mate) straight from the
//! record and derives rule truth (capture, check) from the move generator,
//! so a generated trace scores 1.0 on every applicable subtask against its
//! own record.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chess::Position;
use crate::oracle::{AnalysisRecord, Oracle, PositionSample};
use crate::prompts;
use crate::trace::{
    resolve_move_text, serialize_trace, CandidateClaim, CaptureClaim, MateClaim, ReasoningTrace,
    TraceError, MAX_PV_PLIES,
};

/// Candidate moves analyzed per trace unless the caller asks otherwise.
pub const DEFAULT_CANDIDATES: usize = 3;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("record for {fen} has no scored moves")]
    EmptyRecord { fen: String },
    #[error("record fen {fen:?} is unusable: {reason}")]
    BadFen { fen: String, reason: String },
    #[error("record move {san:?} does not resolve on {fen}")]
    BadMove { san: String, fen: String },
    #[error(transparent)]
    Serialize(#[from] TraceError),
}

fn record_position(record: &AnalysisRecord) -> Result<Position, GenError> {
    Position::from_fen_lenient(&record.fen).map_err(|e| GenError::BadFen {
        fen: record.fen.clone(),
        reason: e.to_string(),
    })
}

/// Build the structured claims for the record's top `k` moves. The answer
/// and the best-move line both name the record's first move, which carries
/// the highest win rate, so logic consistency holds by construction.
pub fn generate_claims(record: &AnalysisRecord, k: usize) -> Result<ReasoningTrace, GenError> {
    let pos = record_position(record)?;
    if record.moves.is_empty() {
        return Err(GenError::EmptyRecord {
            fen: record.fen.clone(),
        });
    }
    let k = k.max(1).min(record.moves.len());
    let mut candidates = Vec::with_capacity(k);
    for (i, scored) in record.moves[..k].iter().enumerate() {
        let mv = resolve_move_text(&pos, &scored.san).ok_or_else(|| GenError::BadMove {
            san: scored.san.clone(),
            fen: record.fen.clone(),
        })?;
        let mut cand = CandidateClaim::new((i + 1) as u32, scored.san.clone());
        cand.capture = Some(match mv.capture() {
            None => CaptureClaim::NoCapture,
            Some((piece, square)) => CaptureClaim::Takes { piece, square },
        });
        cand.check = Some(mv.gives_check());
        cand.mate = Some(match scored.mate {
            Some(n) if n != 0 => MateClaim::In {
                moves: n.unsigned_abs(),
                for_mover: n > 0,
            },
            _ => MateClaim::NoMate,
        });
        // Mate-scored moves carry no centipawn value; their score line is
        // omitted rather than invented.
        cand.pawn_score = scored.cp.map(|c| f64::from(c) / 100.0);
        cand.win_rate = Some(scored.win_rate());
        if !scored.pv.is_empty() {
            cand.pv = Some(scored.pv.iter().take(MAX_PV_PLIES).cloned().collect());
        }
        candidates.push(cand);
    }
    let best = record.moves[0].san.clone();
    Ok(ReasoningTrace {
        raw: String::new(),
        think: None,
        answer: Some(best.clone()),
        candidates,
        best_move_line: Some(best),
        flags: Default::default(),
    })
}

/// Schema-valid trace text for the record's top `k` moves.
pub fn generate_trace(record: &AnalysisRecord, k: usize) -> Result<String, GenError> {
    Ok(serialize_trace(&generate_claims(record, k)?)?)
}

/// One SFT corpus line: the position, the rendered task prompt, and the
/// generated trace text.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SftRecord {
    pub fen: String,
    pub prompt: String,
    pub trace: String,
}

pub fn sft_record(record: &AnalysisRecord, k: usize) -> Result<SftRecord, GenError> {
    let pos = record_position(record)?;
    Ok(SftRecord {
        fen: pos.fen(),
        prompt: prompts::render_task_prompt(&pos),
        trace: generate_trace(record, k)?,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub written: usize,
    pub skipped: usize,
}

/// Stream samples through the oracle and write one JSON line per success.
/// Generation itself is deterministic; output order follows input order.
/// Samples the oracle cannot answer (and records whose moves fail to
/// resolve) are skipped and counted, never fatal.
pub fn generate_corpus(
    oracle: &Oracle,
    samples: &[PositionSample],
    k: usize,
    depth: u32,
    multipv: u32,
    out: &mut dyn io::Write,
) -> io::Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    for sample in samples {
        let record = match oracle.resolve(&sample.fen, depth, multipv) {
            Ok(r) => r,
            Err(e) => {
                log::debug!("skipping {}: {e}", sample.fen);
                stats.skipped += 1;
                continue;
            }
        };
        let line = match sft_record(&record, k) {
            Ok(r) => r,
            Err(e) => {
                log::debug!("skipping {}: {e}", sample.fen);
                stats.skipped += 1;
                continue;
            }
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
        stats.written += 1;
    }
    Ok(stats)
}
