//! Corpus evaluation: per-sample metrics for a faithful and a sloppy
//! trace, aggregated into the report table the eval subcommand prints.
//!
//! ```text
//! cargo run --example evaluate_metrics
//! ```

use veritrace::metrics::{aggregate, evaluate_sample, render_table};
use veritrace::oracle::{synthetic_corpus, AnalysisStore, MockEngine, Oracle};
use veritrace::synth::generate_trace;
use veritrace::trace::parse_trace;

fn main() {
    let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    let mut evaluations = Vec::new();

    for (i, fen) in synthetic_corpus(6, 3).iter().enumerate() {
        let record = oracle.resolve(fen, 4, 3).unwrap();
        let text = generate_trace(&record, 3).unwrap();
        // Every other trace loses its claims and answers with a shrug.
        let text = if i % 2 == 0 {
            text
        } else {
            "<think>\nCandidate 1: h3\nWin rate: 99%\n</think>\n<answer> h3 </answer>\n".to_string()
        };
        let eval = evaluate_sample(&parse_trace(&text), &record, 3).unwrap();
        println!(
            "{fen}\n  top1={} coverage={:.2} wr_mae={:?} consistency={}",
            eval.top1_hit,
            eval.coverage,
            eval.wr_mae(),
            eval.consistency
        );
        evaluations.push(eval);
    }

    let report = aggregate(&evaluations).unwrap();
    println!("\n{}", render_table(&report));
    println!("as json:\n{}", serde_json::to_string_pretty(&report).unwrap());
}
