//! Append-only analysis store: one JSON record per line, indexed in memory
//! by position.
//!
//! The index key is the first four FEN fields (placement, side, castling,
//! en passant), so records match regardless of move counters. Inserts go to
//! the in-memory index and, for file-backed stores, are appended to disk
//! immediately; nothing is ever rewritten in place.

use super::AnalysisRecord;
use crate::chess::Position;
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {source}")]
    Malformed {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("record holds unusable fen {fen:?}: {reason}")]
    BadFen { fen: String, reason: String },
}

/// Position key used for store lookups: the first four FEN fields, with the
/// position itself canonicalized (en passant square kept only when a legal
/// capture exists). Falls back to the raw prefix when the FEN does not
/// parse, so key construction itself cannot fail.
pub fn canonical_fen_key(fen: &str) -> String {
    let canonical = match Position::from_fen_lenient(fen) {
        Ok(pos) => pos.fen(),
        Err(_) => fen.to_string(),
    };
    canonical.split_whitespace().take(4).collect::<Vec<_>>().join(" ")
}

struct Inner {
    records: Vec<AnalysisRecord>,
    by_key: HashMap<String, Vec<usize>>,
}

/// In-memory index over analysis records with optional JSONL persistence.
pub struct AnalysisStore {
    inner: RwLock<Inner>,
    sink: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl AnalysisStore {
    /// A store with no backing file; inserts live only in memory.
    pub fn in_memory() -> AnalysisStore {
        AnalysisStore {
            inner: RwLock::new(Inner {
                records: Vec::new(),
                by_key: HashMap::new(),
            }),
            sink: None,
            path: None,
        }
    }

    /// Open or create a file-backed store. Existing records are loaded and
    /// indexed; later inserts append to the same file.
    pub fn open(path: impl AsRef<Path>) -> Result<AnalysisStore, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut records = Vec::new();
        if path.exists() {
            let file = File::open(&path).map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|source| StoreError::Io {
                    path: path.clone(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: AnalysisRecord =
                    serde_json::from_str(&line).map_err(|source| StoreError::Malformed {
                        path: path.clone(),
                        line: lineno + 1,
                        source,
                    })?;
                records.push(record);
            }
        }
        let sink = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })?;
        let mut inner = Inner {
            records: Vec::new(),
            by_key: HashMap::new(),
        };
        for record in records {
            index_record(&mut inner, record);
        }
        Ok(AnalysisStore {
            inner: RwLock::new(inner),
            sink: Some(Mutex::new(sink)),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of distinct positions indexed.
    pub fn position_count(&self) -> usize {
        self.inner.read().unwrap().by_key.len()
    }

    /// Insert a record, canonicalizing its FEN, and append it to the
    /// backing file when one exists.
    pub fn insert(&self, mut record: AnalysisRecord) -> Result<(), StoreError> {
        let pos = Position::from_fen_lenient(&record.fen).map_err(|e| StoreError::BadFen {
            fen: record.fen.clone(),
            reason: e.to_string(),
        })?;
        record.fen = pos.fen();
        if let Some(sink) = &self.sink {
            let mut line = serde_json::to_string(&record).expect("records always serialize");
            line.push('\n');
            let mut file = sink.lock().unwrap();
            file.write_all(line.as_bytes())
                .map_err(|source| StoreError::Io {
                    path: self.path.clone().unwrap_or_default(),
                    source,
                })?;
        }
        index_record(&mut self.inner.write().unwrap(), record);
        Ok(())
    }

    /// Deepest record for the position; depth ties go to the latest insert.
    pub fn query(&self, fen: &str) -> Option<AnalysisRecord> {
        let key = canonical_fen_key(fen);
        let inner = self.inner.read().unwrap();
        let ids = inner.by_key.get(&key)?;
        let best = ids
            .iter()
            .max_by_key(|&&i| (inner.records[i].depth, i))
            .copied()?;
        Some(inner.records[best].clone())
    }

    /// Deepest record with at least the requested depth and multipv width,
    /// the cache-hit test used before spending an engine search.
    pub fn satisfying(&self, fen: &str, depth: u32, multipv: u32) -> Option<AnalysisRecord> {
        self.query(fen)
            .filter(|r| r.depth >= depth && r.moves.len() >= multipv as usize)
    }

    /// Snapshot of every record, in insertion order.
    pub fn records(&self) -> Vec<AnalysisRecord> {
        self.inner.read().unwrap().records.clone()
    }

    /// Canonical four-field keys of every indexed position.
    pub fn keys(&self) -> Vec<String> {
        let inner = self.inner.read().unwrap();
        let mut keys: Vec<String> = inner.by_key.keys().cloned().collect();
        keys.sort();
        keys
    }
}

fn index_record(inner: &mut Inner, record: AnalysisRecord) {
    let key = canonical_fen_key(&record.fen);
    let id = inner.records.len();
    inner.records.push(record);
    inner.by_key.entry(key).or_default().push(id);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::START_FEN;
    use crate::oracle::ScoredMove;

    fn record(fen: &str, depth: u32, san: &str, cp: i32) -> AnalysisRecord {
        AnalysisRecord {
            fen: fen.into(),
            depth,
            moves: vec![ScoredMove {
                san: san.into(),
                cp: Some(cp),
                mate: None,
                pv: vec![san.into()],
            }],
            source: "test".into(),
        }
    }

    #[test]
    fn query_prefers_depth_then_recency() {
        let store = AnalysisStore::in_memory();
        store.insert(record(START_FEN, 20, "e4", 30)).unwrap();
        store.insert(record(START_FEN, 30, "d4", 28)).unwrap();
        store.insert(record(START_FEN, 25, "c4", 22)).unwrap();
        assert_eq!(store.query(START_FEN).unwrap().moves[0].san, "d4");
        store.insert(record(START_FEN, 30, "Nf3", 27)).unwrap();
        assert_eq!(store.query(START_FEN).unwrap().moves[0].san, "Nf3");
        assert_eq!(store.len(), 4);
        assert_eq!(store.position_count(), 1);
    }

    #[test]
    fn key_ignores_move_counters_and_stale_ep() {
        let store = AnalysisStore::in_memory();
        store.insert(record(START_FEN, 10, "e4", 30)).unwrap();
        // Same position, different counters.
        let alt = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 5 9";
        assert!(store.query(alt).is_some());
        // En passant square with no capturer collapses to "-".
        let verbose = "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1";
        let plain = "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 1";
        assert_eq!(canonical_fen_key(verbose), canonical_fen_key(plain));
    }

    #[test]
    fn satisfying_checks_depth_and_multipv() {
        let store = AnalysisStore::in_memory();
        let mut rec = record(START_FEN, 20, "e4", 30);
        rec.moves.push(ScoredMove {
            san: "d4".into(),
            cp: Some(25),
            mate: None,
            pv: vec![],
        });
        store.insert(rec).unwrap();
        assert!(store.satisfying(START_FEN, 20, 2).is_some());
        assert!(store.satisfying(START_FEN, 15, 1).is_some());
        assert!(store.satisfying(START_FEN, 21, 2).is_none());
        assert!(store.satisfying(START_FEN, 20, 3).is_none());
    }

    #[test]
    fn file_round_trip_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.jsonl");
        {
            let store = AnalysisStore::open(&path).unwrap();
            store.insert(record(START_FEN, 12, "e4", 31)).unwrap();
        }
        {
            let store = AnalysisStore::open(&path).unwrap();
            assert_eq!(store.len(), 1);
            store.insert(record(START_FEN, 14, "d4", 29)).unwrap();
        }
        let store = AnalysisStore::open(&path).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.query(START_FEN).unwrap().depth, 14);
        // Stored FENs are canonical six-field.
        assert!(store.records()[0].fen.split_whitespace().count() == 6);
    }

    #[test]
    fn malformed_lines_are_reported_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"fen\": \"oops\"\n").unwrap();
        match AnalysisStore::open(&path) {
            Err(StoreError::Malformed { line, .. }) => assert_eq!(line, 1),
            Err(other) => panic!("expected malformed error, got {other:?}"),
            Ok(_) => panic!("open accepted a malformed store"),
        }
    }
}
