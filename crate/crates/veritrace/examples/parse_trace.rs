//! Parsing reasoning traces: the tag and schema format flags, per-candidate
//! claims, and the lossless claim round trip through serialize_trace.
//!
//! ```text
//! cargo run --example parse_trace
//! ```

use veritrace::trace::{parse_trace, serialize_trace};

const SAMPLE: &str = "<think>\n\
Candidate 1: Nf3\n\
Capture: none\n\
Check: no\n\
Mate: none\n\
Score: +0.35 pawns\n\
Win rate: 53.2%\n\
PV: Nf3 d5 g3\n\
Candidate 2: e4\n\
Capture: none\n\
Check: no\n\
Score: +0.30 pawns\n\
Win rate: 52.8%\n\
PV: e4 e5\n\
Best move: Nf3\n\
</think>\n\
<answer> Nf3 </answer>\n";

fn main() {
    let trace = parse_trace(SAMPLE);
    println!(
        "format flags: think={} answer={} schema={} (all: {})",
        trace.flags.think_tags,
        trace.flags.answer_tags,
        trace.flags.schema_blocks,
        trace.flags.all()
    );
    println!("answer: {:?}", trace.answer);
    for cand in &trace.candidates {
        println!(
            "candidate {}: {} win_rate={:?} pawns={:?} pv={:?}",
            cand.index, cand.san, cand.win_rate, cand.pawn_score, cand.pv
        );
    }

    // Claims survive a round trip; parsing never fails, it only lowers
    // flags. Feed it garbage and the trace comes back empty but usable.
    let rebuilt = serialize_trace(&trace).unwrap();
    assert_eq!(parse_trace(&rebuilt).candidates.len(), trace.candidates.len());
    let broken = parse_trace("no tags at all");
    println!(
        "degenerate input: candidates={} flags all={} ",
        broken.candidates.len(),
        broken.flags.all()
    );
}
