//! Board fundamentals: FEN parsing, legal move generation, SAN naming,
//! and perft as a movegen self-check.
//!
//! ```text
//! cargo run --example chess_basics
//! ```

use veritrace::chess::{Position, START_FEN};
use veritrace::trace::resolve_move_text;

fn main() {
    let start = Position::from_fen_lenient(START_FEN).unwrap();
    let legal = start.legal_moves();
    println!("start position has {} legal moves:", legal.len());
    let sans: Vec<String> = legal.iter().map(|m| start.san(m)).collect();
    println!("  {}", sans.join(" "));

    for depth in 1..=4 {
        println!("perft({depth}) = {}", start.perft(depth));
    }

    let mut pos = start;
    for san in ["e4", "c5", "Nf3", "d6", "Bb5+"] {
        let m = resolve_move_text(&pos, san).expect("line stays legal");
        println!(
            "{san:5} capture: {:9} check: {}",
            m.capture()
                .map(|(p, sq)| format!("{} on {sq}", p.name()))
                .unwrap_or_else(|| "none".into()),
            m.gives_check(),
        );
        pos = pos.apply(&m);
    }
    println!("after the line: {}", pos.fen());
}
