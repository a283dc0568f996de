//! Closed-loop curriculum demo: a mock policy that improves in proportion
//! to the weight a subtask receives, trained once with fixed uniform
//! weights and once with adaptive weighting, from the same seed.
//!
//! ```text
//! cargo run --example simulate_training
//! ```

use veritrace::oracle::{synthetic_corpus, AnalysisStore, MockEngine, Oracle};
use veritrace::rewards::{SubtaskId, K};
use veritrace::scheduler::{SchedulerParams, WeightState};
use veritrace::sim::{train_loop, Granularity, MockPolicy, TrainConfig, WeightMode};

fn main() {
    let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    let records: Vec<_> = synthetic_corpus(30, 7)
        .iter()
        .map(|fen| oracle.resolve(fen, 4, 5).unwrap())
        .collect();

    let params = SchedulerParams {
        alpha: 0.02,
        base_temperature: 0.15,
        ..SchedulerParams::default()
    };
    let policy = || {
        MockPolicy::new(9)
            .with_competence(SubtaskId::WinRate, 0.10)
            .with_competence(SubtaskId::Capture, 0.95)
            .with_eta(0.02)
    };

    for mode in [WeightMode::Fixed, WeightMode::Adaptive] {
        let cfg = TrainConfig {
            steps: 150,
            batch: 16,
            k: 3,
            mode,
            granularity: Granularity::PerBatch,
            score: Default::default(),
        };
        let mut p = policy();
        let mut state = WeightState::init(K, params).unwrap();
        let logs = train_loop(&mut p, &records, &mut state, &cfg, None).unwrap();
        let last = logs.last().unwrap();
        println!("{mode:?} weighting after {} steps:", logs.len());
        println!("  final weights   {}", fmt(&last.weights));
        println!("  final ema       {}", fmt(&last.mu));
        println!("  competence      {}", fmt(&last.competence));
        println!("  mean total      {:.3}\n", last.mean_total);
    }
    println!("subtask order: {}", SubtaskId::ALL.map(|s| s.name()).join(" "));
}

fn fmt(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}
