//! The NDJSON scoring protocol in-process: score requests, an error reply
//! for a malformed line, and a session whose weights update at batch
//! markers. serve_tcp exposes exactly this handler over a socket.
//!
//! ```text
//! cargo run --example scoring_service
//! ```

use veritrace::oracle::{AnalysisStore, MockEngine, Oracle};
use veritrace::rewards::{ScoreConfig, K};
use veritrace::scheduler::{SchedulerParams, WeightState};
use veritrace::service::ScoreService;
use veritrace::synth::generate_trace;

fn main() {
    let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    let fen = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
    let trace = generate_trace(&oracle.resolve(fen, 4, 3).unwrap(), 3).unwrap();

    let params = SchedulerParams {
        alpha: 0.2,
        ..SchedulerParams::default()
    };
    let service = ScoreService::new(oracle, ScoreConfig::default(), 4, 3)
        .with_session(WeightState::init(K, params).unwrap());

    let request = serde_json::json!({ "id": 1, "fen": fen, "trace": trace }).to_string();
    let lines = [
        request.as_str(),
        "this is not json",
        r#"{"id": 2, "fen": "not a fen", "trace": "<think></think>"}"#,
        r#"{"batch_end": true}"#,
        request.as_str(),
    ];
    for line in lines {
        println!("<- {}", truncate(line, 90));
        println!("-> {}\n", truncate(&service.handle_line(line), 200));
    }
    println!("session snapshot: {}", service.snapshot().unwrap());
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        s.to_string()
    } else {
        format!("{}...", &s[..n])
    }
}
