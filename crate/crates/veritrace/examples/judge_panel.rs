//! Rubric judging: prompt assembly, expected scores from token
//! probabilities, and a two-judge mock panel with a retry-surviving
//! transcript. Swap MockJudge for HttpJudge endpoints to call real models.
//!
//! ```text
//! cargo run --example judge_panel
//! ```

use std::time::Duration;

use veritrace::judge::{
    build_prompt, engine_summary, expected_score, run_panel, Dimension, JudgeResponse, MockJudge,
    PanelConfig, PanelItem,
};
use veritrace::oracle::{AnalysisStore, MockEngine, Oracle};
use veritrace::synth::generate_trace;

fn main() {
    // Expected score is the probability-weighted mean of the 1..5 digits.
    let response = JudgeResponse {
        raw: r#"{"score": 4}"#.into(),
        parsed_score: Some(4),
        score_logprobs: Some(vec![(4, 0.7f64.ln()), (3, 0.2f64.ln()), (5, 0.1f64.ln())]),
    };
    println!("expected score: {:.3}\n", expected_score(&response).unwrap());

    let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    let fen = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
    let record = oracle.resolve(fen, 6, 3).unwrap();
    let trace = generate_trace(&record, 3).unwrap();
    let answer = veritrace::trace::parse_trace(&trace).answer.unwrap();
    let summary = engine_summary(&record, &answer).unwrap();

    let request = build_prompt(Dimension::Clarity, &trace, fen, &summary);
    println!("=== clarity prompt ===\n{}\n", request.prompt);

    let strict = MockJudge::new("strict")
        .with_distribution(Dimension::Relevance, &[(4, 0.8), (3, 0.2)])
        .with_distribution(Dimension::Completeness, &[(3, 1.0)])
        .with_distribution(Dimension::Clarity, &[(4, 0.5), (5, 0.5)])
        .with_distribution(Dimension::Fluency, &[(4, 1.0)]);
    let lenient = MockJudge::new("lenient")
        .with_distribution(Dimension::Relevance, &[(5, 1.0)])
        .with_distribution(Dimension::Completeness, &[(5, 0.6), (4, 0.4)])
        .with_distribution(Dimension::Clarity, &[(5, 1.0)])
        .with_distribution(Dimension::Fluency, &[(5, 0.9), (1, 0.1)]);
    lenient.fail_next(1); // first call fails; the panel retries it

    let items = vec![PanelItem {
        id: "demo".into(),
        fen: fen.into(),
        trace,
        summary,
    }];
    let cfg = PanelConfig {
        attempts: 3,
        backoff: Duration::from_millis(1),
        concurrency: 2,
    };
    let mut transcript = Vec::new();
    let report = run_panel(&items, &[&strict, &lenient], &cfg, Some(&mut transcript)).unwrap();

    for row in &report.rows {
        for (judge, dims) in &row.judges {
            println!("{judge:8} {dims:?}");
        }
        println!("row mean {:?} overall {:?}", row.mean, row.overall);
    }
    println!(
        "\ntranscript lines: {}",
        String::from_utf8(transcript).unwrap().lines().count()
    );
}
