//! The weight scheduler on its own: feed scripted per-subtask reward
//! streams and watch the EMAs converge and the weights chase headroom,
//! never dipping below the floor and always summing to one.
//!
//! ```text
//! cargo run --example adaptive_weights
//! ```

use veritrace::rewards::{SubtaskId, K};
use veritrace::scheduler::{SchedulerParams, WeightState};

fn main() {
    let params = SchedulerParams {
        alpha: 0.05,
        base_temperature: 0.2,
        ..SchedulerParams::default()
    };
    let mut state = WeightState::init(K, params).unwrap();

    // A policy that aces captures, struggles with win rates, and never
    // sees a mate to claim.
    let stream: [Option<f64>; K] = [
        Some(0.15), // win_rate
        Some(0.55), // pawn_score
        Some(0.70), // pv
        Some(0.95), // capture
        Some(0.90), // check
        None,       // mate: inapplicable this batch
        Some(0.60), // logic_consistency
    ];

    println!("step  {}", SubtaskId::ALL.map(|s| format!("{:>9}", s.name())).join(" "));
    for step in 1..=200 {
        state.update(&stream).unwrap();
        if step % 40 == 0 || step == 1 {
            let cells: Vec<String> = state.weights().iter().map(|w| format!("{w:9.4}")).collect();
            println!("{step:4}  {}", cells.join(" "));
        }
    }

    let w = state.weights();
    println!(
        "\nsum = {:.12}, min = {:.4} (floor {}), argmax = {}",
        w.iter().sum::<f64>(),
        w.iter().cloned().fold(f64::INFINITY, f64::min),
        params.w_min,
        SubtaskId::ALL[w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0]
            .name()
    );
    println!("snapshot: {}", state.to_json());
}
