//! Reproducible position corpora for tests and examples, built by random
//! playouts so no external data is needed.

use crate::chess::Position;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// `n` distinct legal middlegame-ish positions reached by random playouts
/// from the initial position. Deterministic in `seed`; every position has
/// at least two legal moves so multipv analysis is meaningful.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut fens = Vec::with_capacity(n);
    let mut attempts = 0;
    while fens.len() < n && attempts < n * 200 {
        attempts += 1;
        let plies = rng.gen_range(4..=36);
        let mut pos = Position::start();
        for _ in 0..plies {
            let moves = pos.legal_moves();
            let Some(m) = moves.choose(&mut rng) else {
                break;
            };
            pos = pos.apply(&m.clone());
        }
        if pos.legal_moves().len() < 2 {
            continue;
        }
        let fen = pos.fen();
        let key: String = fen.split_whitespace().take(4).collect::<Vec<_>>().join(" ");
        if seen.insert(key) {
            fens.push(fen);
        }
    }
    fens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_distinct_and_legal() {
        let a = synthetic_corpus(40, 3);
        let b = synthetic_corpus(40, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
        let keys: HashSet<String> = a
            .iter()
            .map(|f| f.split_whitespace().take(4).collect::<Vec<_>>().join(" "))
            .collect();
        assert_eq!(keys.len(), 40);
        for fen in &a {
            let pos = Position::from_fen(fen).unwrap();
            assert!(pos.legal_moves().len() >= 2);
        }
        assert_ne!(a, synthetic_corpus(40, 4));
    }
}
