//! The analysis oracle: a persistent store backed by an engine. The first
//! resolve searches and persists; the second is a pure cache hit. The
//! engine here is a UCI stub shell script, exercising the same protocol
//! path a real engine would.
//!
//! ```text
//! cargo run --example engine_oracle
//! ```

use veritrace::oracle::{fake_engine_script, AnalysisStore, MockEngine, Oracle, UciEngine};

fn main() {
    let dir = tempfile::tempdir().unwrap();

    // A real UCI conversation against a stub engine binary.
    let script = fake_engine_script(dir.path()).unwrap();
    let engine = UciEngine::spawn(script.to_str().unwrap(), &[]).unwrap();
    let store_path = dir.path().join("analysis.jsonl");
    let oracle = Oracle::with_engine(AnalysisStore::open(&store_path).unwrap(), Box::new(engine));

    let fen = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
    let record = oracle.resolve(fen, 6, 1).unwrap();
    println!("uci stub returned: {}", serde_json::to_string_pretty(&record).unwrap());
    println!(
        "store now holds {} record(s) at {}",
        oracle.store().len(),
        store_path.display()
    );

    // Same position again: served from the store, no engine round trip.
    let again = oracle.resolve(fen, 6, 1).unwrap();
    assert_eq!(serde_json::to_string(&record).unwrap(), serde_json::to_string(&again).unwrap());
    println!("second resolve was a cache hit");

    // The built-in search engine needs no process at all and answers any
    // width and depth deterministically.
    let mock = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    let deep = mock.resolve(fen, 8, 4).unwrap();
    println!("\nbuilt-in engine, four lines:");
    for m in &deep.moves {
        println!("  {:5} cp={:>5} pv: {}", m.san, m.cp.unwrap_or(0), m.pv.join(" "));
    }
}
