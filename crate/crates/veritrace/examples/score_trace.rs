//! Scoring one trace against engine truth: a perfect trace, then the same
//! trace with a corrupted win-rate claim, and what that does to each
//! subtask reward and the total.
//!
//! ```text
//! cargo run --example score_trace
//! ```

use veritrace::oracle::{AnalysisStore, MockEngine, Oracle};
use veritrace::rewards::{score_trace, ScoreConfig, K};
use veritrace::synth::generate_trace;
use veritrace::trace::parse_trace;

fn main() {
    let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    let fen = "r1bqkbnr/pppp1ppp/2n5/4p3/4P3/5N2/PPPP1PPP/RNBQKB1R w KQkq - 2 3";
    let record = oracle.resolve(fen, 6, 3).unwrap();
    println!("engine truth for {fen}:");
    for m in &record.moves {
        println!("  {:6} cp={:?} pv={:?}", m.san, m.cp, m.pv);
    }

    let text = generate_trace(&record, 3).unwrap();
    let weights = [1.0 / K as f64; K];
    let cfg = ScoreConfig::default();

    let perfect = score_trace(&parse_trace(&text), &record, &weights, &cfg).unwrap();
    println!("\nperfect trace: total {:.4}", perfect.total);

    // Overstate the first candidate's win rate by thirty points.
    let first_wr = parse_trace(&text).candidates[0].win_rate.unwrap();
    let corrupted_text = text.replacen(
        &format!("Win rate: {first_wr}%"),
        &format!("Win rate: {}%", (first_wr + 30.0).min(100.0)),
        1,
    );
    let corrupted = score_trace(&parse_trace(&corrupted_text), &record, &weights, &cfg).unwrap();
    println!("corrupted win rate: total {:.4}", corrupted.total);
    println!("\nsubtask rewards (perfect vs corrupted):");
    for (a, b) in perfect.subtasks.iter().zip(&corrupted.subtasks) {
        println!(
            "  {:17} {:.3} -> {:.3}{}",
            a.subtask.name(),
            a.reward,
            b.reward,
            if a.applicable { "" } else { "  (inapplicable)" }
        );
    }
    println!("\nfull breakdown is serializable:");
    println!("{}", serde_json::to_string_pretty(&corrupted).unwrap());
}
