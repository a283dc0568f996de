//! Prompt texts, embedded verbatim from `prompts/`. The task prompt frames
//! the move-selection problem for a model; the four rubric prompts instruct
//! a judge to rate one quality dimension each.

use crate::chess::Position;

/// Move-selection task instructions with `<board>` and `<legal moves>`
/// placeholders.
pub const CHESS_TASK: &str = include_str!("../prompts/chess_task.txt");
pub const RUBRIC_RELEVANCE: &str = include_str!("../prompts/rubric_relevance.txt");
pub const RUBRIC_COMPLETENESS: &str = include_str!("../prompts/rubric_completeness.txt");
pub const RUBRIC_CLARITY: &str = include_str!("../prompts/rubric_clarity.txt");
pub const RUBRIC_FLUENCY: &str = include_str!("../prompts/rubric_fluency.txt");

/// Fill the task template for a concrete position. Legal moves are listed
/// in SAN, in the deterministic generation order.
pub fn render_task_prompt(pos: &Position) -> String {
    let legal: Vec<String> = pos.legal_moves().iter().map(|m| pos.san(m)).collect();
    CHESS_TASK
        .replace("<board>", &pos.fen())
        .replace("<legal moves>", &legal.join(", "))
}
