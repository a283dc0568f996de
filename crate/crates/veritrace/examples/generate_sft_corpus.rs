//! Building a self-consistent SFT corpus: positions go through the oracle,
//! each record becomes a prompt plus a trace whose claims restate the
//! engine's analysis exactly, so the corpus self-scores perfectly.
//!
//! ```text
//! cargo run --example generate_sft_corpus
//! ```

use veritrace::oracle::{synthetic_corpus, AnalysisStore, MockEngine, Oracle, PositionSample, Split};
use veritrace::synth::generate_corpus;

fn main() {
    let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    let samples: Vec<PositionSample> = synthetic_corpus(5, 42)
        .into_iter()
        .map(|fen| PositionSample {
            fen,
            best: None,
            split: Split::Train,
            source: "synthetic".into(),
        })
        .collect();

    let mut out = Vec::new();
    let stats = generate_corpus(&oracle, &samples, 3, 6, 3, &mut out).unwrap();
    println!(
        "wrote {} corpus lines ({} positions skipped)\n",
        stats.written, stats.skipped
    );

    let text = String::from_utf8(out).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    println!("=== prompt ===\n{}", first["prompt"].as_str().unwrap());
    println!("=== target trace ===\n{}", first["trace"].as_str().unwrap());
}
