//! Ground truth about positions: engine analysis records, the append-only
//! analysis store, corpus ingestion, and engine clients.
//!
//! Everything downstream (rewards, metrics, trace generation) consumes
//! [`AnalysisRecord`]s. A record holds the multipv analysis of one position:
//! per move a centipawn or mate score from the mover's point of view and a
//! short principal variation in SAN. Win rates are always derived from the
//! stored score at read time, never persisted, so the centipawn-to-win-rate
//! mapping has exactly one implementation.

mod engine;
mod fixtures;
mod ingest;
mod store;

pub use engine::{fake_engine_script, EngineBackend, EngineError, MockEngine, UciEngine};
pub use fixtures::synthetic_corpus;
pub use ingest::{
    flatten_solution, ingest_eval_db, ingest_puzzle_csv, read_samples, write_samples,
    IngestError, IngestStats,
};
pub use store::{canonical_fen_key, AnalysisStore, StoreError};

use crate::chess::Position;
use serde::{Deserialize, Serialize};
use std::sync::Mutex;

/// Slope of the logistic centipawn-to-win-rate curve, fit against engine
/// self-play outcomes.
pub const WIN_RATE_SLOPE: f64 = 0.00368208;

/// Map a centipawn score (mover's point of view) to an expected win rate in
/// percent. 0 cp is exactly 50%, +100 cp is about 59.1%.
pub fn cp_to_win_rate(cp: f64) -> f64 {
    50.0 + 50.0 * (2.0 / (1.0 + (-WIN_RATE_SLOPE * cp).exp()) - 1.0)
}

/// One engine-scored move. Scores are from the point of view of the side to
/// move in the parent position: positive cp favors the mover, `mate: 3`
/// means the mover forces mate in 3 moves, `mate: -2` means the mover gets
/// mated in 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredMove {
    pub san: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mate: Option<i32>,
    /// Principal variation in SAN, starting with this move. Capped at
    /// [`crate::trace::MAX_PV_PLIES`] plies.
    #[serde(default)]
    pub pv: Vec<String>,
}

impl ScoredMove {
    /// Expected win rate in percent. Forced mates clamp to the endpoints.
    pub fn win_rate(&self) -> f64 {
        match (self.mate, self.cp) {
            (Some(m), _) => {
                if m > 0 {
                    100.0
                } else {
                    0.0
                }
            }
            (None, Some(cp)) => cp_to_win_rate(cp as f64),
            (None, None) => 50.0,
        }
    }

    /// Score in pawns for the pawn-score subtask. Mates saturate at ±100.
    pub fn pawn_score(&self) -> f64 {
        match (self.mate, self.cp) {
            (Some(m), _) => {
                if m > 0 {
                    100.0
                } else {
                    -100.0
                }
            }
            (None, Some(cp)) => cp as f64 / 100.0,
            (None, None) => 0.0,
        }
    }

    /// Whether the score is a forced mate rather than a centipawn estimate.
    pub fn is_mate(&self) -> bool {
        self.mate.is_some()
    }
}

/// Multipv analysis of one position. Moves are sorted best-first with the
/// win rate derived from their scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    /// Canonical six-field FEN of the analyzed position.
    pub fen: String,
    /// Nominal search depth the scores were produced at.
    pub depth: u32,
    pub moves: Vec<ScoredMove>,
    /// Where the record came from: "engine:<name>", "eval-db", "mock", ...
    #[serde(default)]
    pub source: String,
}

impl AnalysisRecord {
    pub fn best(&self) -> Option<&ScoredMove> {
        self.moves.first()
    }

    /// Sort moves best-first by derived win rate; ties keep insertion order.
    pub fn sort_moves(&mut self) {
        self.moves
            .sort_by(|a, b| b.win_rate().partial_cmp(&a.win_rate()).unwrap());
    }

    /// Whether any scored move carries a forced-mate score.
    pub fn has_mate(&self) -> bool {
        self.moves.iter().any(ScoredMove::is_mate)
    }

    pub fn position(&self) -> Result<Position, crate::chess::FenError> {
        Position::from_fen_lenient(&self.fen)
    }
}

/// Corpus split, assigned by a stable hash so membership never depends on
/// ingestion order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Fractions of the corpus assigned to train and val; test takes the rest.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.90,
            val: 0.05,
        }
    }
}

/// Assign a split from a stable 64-bit FNV-1a hash of seed and key. The
/// same (key, seed) always lands in the same split regardless of corpus
/// size or order.
pub fn assign_split(key: &str, seed: u64, fractions: SplitFractions) -> Split {
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in seed.to_le_bytes().iter().chain(key.as_bytes()) {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let bucket = (h % 10_000) as f64 / 10_000.0;
    if bucket < fractions.train {
        Split::Train
    } else if bucket < fractions.train + fractions.val {
        Split::Val
    } else {
        Split::Test
    }
}

/// A position destined for trace generation or evaluation. `best` is the
/// reference move when the source supplies one (puzzle solutions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionSample {
    pub fen: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<String>,
    pub split: Split,
    #[serde(default)]
    pub source: String,
}

/// Store-backed analysis access with an optional engine for misses. The
/// store answers first; the engine fills gaps and its results are persisted
/// so repeated runs never re-search.
pub struct Oracle {
    store: AnalysisStore,
    engine: Option<Mutex<Box<dyn EngineBackend>>>,
}

impl Oracle {
    pub fn new(store: AnalysisStore) -> Oracle {
        Oracle {
            store,
            engine: None,
        }
    }

    pub fn with_engine(store: AnalysisStore, engine: Box<dyn EngineBackend>) -> Oracle {
        Oracle {
            store,
            engine: Some(Mutex::new(engine)),
        }
    }

    pub fn store(&self) -> &AnalysisStore {
        &self.store
    }

    /// Best stored record for the position, regardless of depth.
    pub fn lookup(&self, fen: &str) -> Option<AnalysisRecord> {
        self.store.query(fen)
    }

    /// A record of at least the requested depth and multipv width. Cache
    /// hit from the store, otherwise one engine search whose result is
    /// inserted before returning.
    pub fn resolve(
        &self,
        fen: &str,
        depth: u32,
        multipv: u32,
    ) -> Result<AnalysisRecord, EngineError> {
        if let Some(hit) = self.store.satisfying(fen, depth, multipv) {
            return Ok(hit);
        }
        let engine = self.engine.as_ref().ok_or(EngineError::NoEngine)?;
        let record = engine.lock().unwrap().analyze(fen, depth, multipv)?;
        self.store.insert(record.clone()).map_err(|e| {
            EngineError::Protocol(format!("failed to persist analysis: {e}"))
        })?;
        Ok(record)
    }
}
