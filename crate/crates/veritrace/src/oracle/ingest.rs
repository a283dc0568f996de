//! Bulk ingestion of external corpora: evaluation databases (native or
//! Lichess-shaped JSONL) into the analysis store, and tactics-puzzle CSVs
//! into position samples.
//!
//! Ingestion is forgiving line by line: a record that does not parse or
//! replay is counted and skipped, never fatal, so one bad row cannot sink
//! an hours-long import.

use super::engine::uci_line_to_san;
use super::store::AnalysisStore;
use super::{assign_split, AnalysisRecord, PositionSample, ScoredMove, SplitFractions};
use crate::chess::{Color, Position};
use serde_json::Value;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Store(#[from] super::StoreError),
}

/// Counters for one ingestion run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Input rows or lines seen.
    pub read: usize,
    /// Analysis records inserted into the store.
    pub ingested: usize,
    /// Position samples produced.
    pub samples: usize,
    /// Rows skipped as malformed or unreplayable.
    pub skipped: usize,
}

/// Ingest an evaluation database in JSONL form. Two line shapes are
/// accepted and auto-detected: the store's native record shape (a "moves"
/// array, mover-relative scores) and the Lichess eval-db shape (an "evals"
/// array of {pvs, depth} objects with White-relative scores and UCI lines).
/// For the latter only the deepest eval is kept and scores are flipped to
/// the mover's perspective when Black is to move.
pub fn ingest_eval_db(
    input: impl BufRead,
    store: &AnalysisStore,
    limit: Option<usize>,
) -> Result<IngestStats, IngestError> {
    let mut stats = IngestStats::default();
    for line in input.lines() {
        if limit.is_some_and(|n| stats.ingested >= n) {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.read += 1;
        match convert_eval_line(&line) {
            Some(record) => match store.insert(record) {
                Ok(()) => stats.ingested += 1,
                Err(e) => {
                    log::warn!("line {}: {e}", stats.read);
                    stats.skipped += 1;
                }
            },
            None => stats.skipped += 1,
        }
    }
    Ok(stats)
}

fn convert_eval_line(line: &str) -> Option<AnalysisRecord> {
    let value: Value = serde_json::from_str(line).ok()?;
    if value.get("moves").is_some() {
        return serde_json::from_value(value).ok();
    }
    // Lichess shape.
    let fen = value.get("fen")?.as_str()?;
    let pos = Position::from_fen_lenient(fen).ok()?;
    let evals = value.get("evals")?.as_array()?;
    let deepest = evals
        .iter()
        .max_by_key(|e| e.get("depth").and_then(Value::as_u64).unwrap_or(0))?;
    let depth = deepest.get("depth").and_then(Value::as_u64).unwrap_or(0) as u32;
    // Lichess scores are from White's point of view; the store keeps them
    // relative to the side to move.
    let flip = pos.side_to_move() == Color::Black;
    let mut moves = Vec::new();
    for pv in deepest.get("pvs")?.as_array()? {
        let cp = pv.get("cp").and_then(Value::as_i64).map(|v| v as i32);
        let mate = pv.get("mate").and_then(Value::as_i64).map(|v| v as i32);
        if cp.is_none() && mate.is_none() {
            continue;
        }
        let uci: Vec<String> = pv
            .get("line")?
            .as_str()?
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let san = uci_line_to_san(&pos, &uci);
        if san.is_empty() {
            continue;
        }
        moves.push(ScoredMove {
            san: san[0].clone(),
            cp: if flip { cp.map(|v| -v) } else { cp },
            mate: if flip { mate.map(|v| -v) } else { mate },
            pv: san,
        });
    }
    if moves.is_empty() {
        return None;
    }
    let mut record = AnalysisRecord {
        fen: pos.fen(),
        depth,
        moves,
        source: "eval-db".into(),
    };
    record.sort_moves();
    Some(record)
}

/// Expand a puzzle solution into one sample per solver decision. `moves`
/// starts with the solver's move: a three-ply solution (solver, opponent,
/// solver) yields two samples. Returns (fen, best san) pairs; None when a
/// move fails to replay.
pub fn flatten_solution(start: &Position, moves: &[String]) -> Option<Vec<(String, String)>> {
    let mut samples = Vec::new();
    let mut pos = start.clone();
    for (i, uci) in moves.iter().enumerate() {
        let m = pos.move_from_uci(uci).ok()?;
        if i % 2 == 0 {
            samples.push((pos.fen(), pos.san(&m)));
        }
        pos = pos.apply(&m);
    }
    Some(samples)
}

/// Ingest a tactics-puzzle CSV with columns PuzzleId, FEN, Moves (extra
/// columns ignored). Moves are UCI; the first one is the setup move that
/// produces the puzzle position, the rest alternate solver and opponent.
/// Splits are assigned per puzzle so plies of one puzzle never straddle a
/// split boundary.
pub fn ingest_puzzle_csv(
    input: impl std::io::Read,
    seed: u64,
    fractions: SplitFractions,
) -> Result<(Vec<PositionSample>, IngestStats), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let mut stats = IngestStats::default();
    let mut samples = Vec::new();
    for row in reader.records() {
        let row = row?;
        stats.read += 1;
        let (Some(id), Some(fen), Some(moves)) = (row.get(0), row.get(1), row.get(2)) else {
            stats.skipped += 1;
            continue;
        };
        let moves: Vec<String> = moves.split_whitespace().map(str::to_string).collect();
        let flattened = Position::from_fen_lenient(fen).ok().and_then(|pos| {
            let setup = pos.move_from_uci(moves.first()?).ok()?;
            flatten_solution(&pos.apply(&setup), &moves[1..])
        });
        let Some(flattened) = flattened else {
            stats.skipped += 1;
            continue;
        };
        let split = assign_split(id, seed, fractions);
        for (fen, best) in flattened {
            samples.push(PositionSample {
                fen,
                best: Some(best),
                split,
                source: format!("puzzle:{id}"),
            });
            stats.samples += 1;
        }
    }
    Ok((samples, stats))
}

/// Write position samples as JSONL.
pub fn write_samples(
    mut out: impl Write,
    samples: &[PositionSample],
) -> Result<(), IngestError> {
    for sample in samples {
        serde_json::to_writer(&mut out, sample).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read position samples from JSONL, skipping blank lines.
pub fn read_samples(input: impl BufRead) -> Result<Vec<PositionSample>, IngestError> {
    let mut samples = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = serde_json::from_str(&line).map_err(std::io::Error::other)?;
        samples.push(sample);
    }
    Ok(samples)
}
