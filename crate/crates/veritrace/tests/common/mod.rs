//! Shared fixtures and reference implementations for the integration
//! suites. The scoring and metrics references here are deliberately plain
//! loops written against the documented rules, kept apart from the
//! library's own code paths so the suites compare two derivations.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use veritrace::chess::Position;
use veritrace::oracle::{synthetic_corpus, AnalysisRecord, EngineBackend, MockEngine, ScoredMove};
use veritrace::trace::{
    normalize_move_text, resolve_move_text, CandidateClaim, CaptureClaim, MateClaim,
    ReasoningTrace,
};

// Canonical subtask order.
pub const WR: usize = 0;
pub const PAWN: usize = 1;
pub const PV: usize = 2;
pub const CAPTURE: usize = 3;
pub const CHECK: usize = 4;
pub const MATE: usize = 5;
pub const CONSISTENCY: usize = 6;
pub const K: usize = 7;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Deterministic analysis records over the synthetic fixture corpus.
pub fn fixture_records(n: usize, seed: u64) -> Vec<AnalysisRecord> {
    let mut engine = MockEngine::new();
    synthetic_corpus(n, seed)
        .iter()
        .map(|fen| engine.analyze(fen, 4, 5).expect("fixture position analyzes"))
        .collect()
}

/// Reference centipawn-to-win-rate mapping, evaluated through tanh rather
/// than the logistic so the two derivations share no floating-point path.
pub fn ref_win_rate(cp: f64) -> f64 {
    50.0 + 50.0 * (0.00368208 * cp / 2.0).tanh()
}

fn ref_truth_wr(entry: &ScoredMove) -> f64 {
    match (entry.mate, entry.cp) {
        (Some(n), _) => {
            if n > 0 {
                100.0
            } else {
                0.0
            }
        }
        (None, Some(cp)) => ref_win_rate(f64::from(cp)),
        (None, None) => 50.0,
    }
}

fn ref_truth_pawn(entry: &ScoredMove) -> f64 {
    match (entry.mate, entry.cp) {
        (Some(n), _) => {
            if n > 0 {
                100.0
            } else {
                -100.0
            }
        }
        (None, Some(cp)) => f64::from(cp) * 0.01,
        (None, None) => 0.0,
    }
}

fn ref_flat_zone(d: f64, flat: f64, zero: f64) -> f64 {
    if d <= flat {
        1.0
    } else if d <= zero {
        1.0 - (d - flat) / (zero - flat)
    } else {
        0.0
    }
}

fn ref_pawn_reward(claim: f64, truth: f64) -> f64 {
    if claim * truth < 0.0 {
        return 0.0;
    }
    let mut d = (claim - truth).abs();
    if claim.abs() > 5.0 && truth.abs() > 5.0 {
        d = d.min(2.0);
    }
    ref_flat_zone(d, 0.1, 3.0)
}

/// Weighted prefix agreement with gate-or-nothing on ply zero and the
/// [0.4, 0.3, 0.2, 0.1] ladder renormalized to the truth depth.
pub fn ref_pv_reward(claimed: &[String], truth: &[String], pos: &Position) -> f64 {
    if claimed.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let ladder = [0.4, 0.3, 0.2, 0.1];
    let depth = truth.len().min(5);
    let mut cur = pos.clone();
    let mut matched = 0usize;
    for i in 0..depth {
        let Some(truth_move) = resolve_move_text(&cur, &truth[i]) else {
            break;
        };
        let agreed = claimed
            .get(i)
            .and_then(|s| resolve_move_text(&cur, s))
            .map(|m| m.key() == truth_move.key())
            .unwrap_or(false);
        if !agreed {
            break;
        }
        matched = i + 1;
        cur = cur.apply(&truth_move);
    }
    if matched == 0 {
        return 0.0;
    }
    if depth == 1 {
        return 1.0;
    }
    let earned: f64 = ladder[..matched - 1].iter().sum();
    let available: f64 = ladder[..depth - 1].iter().sum();
    earned / available
}

/// First-occurrence dedup: resolved moves compare by identity, unresolvable
/// texts by annotation-stripped spelling.
fn ref_dedupe<'t>(trace: &'t ReasoningTrace, pos: &Position) -> Vec<&'t CandidateClaim> {
    let mut kept: Vec<&CandidateClaim> = Vec::new();
    let mut seen_keys = Vec::new();
    let mut seen_texts = Vec::new();
    for cand in &trace.candidates {
        match resolve_move_text(pos, &cand.san) {
            Some(m) => {
                if seen_keys.contains(&m.key()) {
                    continue;
                }
                seen_keys.push(m.key());
            }
            None => {
                let text = normalize_move_text(&cand.san);
                if seen_texts.contains(&text) {
                    continue;
                }
                seen_texts.push(text);
            }
        }
        kept.push(cand);
    }
    kept
}

fn ref_consistency(kept: &[&CandidateClaim], answer: Option<&str>, pos: &Position) -> f64 {
    let Some(answer) = answer else {
        return 0.0;
    };
    let mut best: Option<(&str, f64)> = None;
    for cand in kept {
        if let Some(wr) = cand.win_rate {
            match best {
                Some((_, b)) if wr <= b => {}
                _ => best = Some((&cand.san, wr)),
            }
        }
    }
    let Some((best_san, _)) = best else {
        return 0.0;
    };
    let same = match (resolve_move_text(pos, answer), resolve_move_text(pos, best_san)) {
        (Some(a), Some(b)) => a.key() == b.key(),
        _ => normalize_move_text(answer) == normalize_move_text(best_san),
    };
    if same {
        1.0
    } else {
        0.0
    }
}

/// Reference scoring result: per-subtask mean rewards in canonical order.
pub struct RefBreakdown {
    pub rewards: [f64; K],
    pub applicable: [bool; K],
    pub r_reason: f64,
    pub r_form: f64,
    pub r_acc: f64,
    pub total: f64,
}

/// Score a parsed trace with plain loops: one rule, one block. Uses the
/// dense accuracy provider and the published shapes.
pub fn ref_score(
    trace: &ReasoningTrace,
    record: &AnalysisRecord,
    weights: &[f64; K],
    lambda: f64,
) -> RefBreakdown {
    let pos = Position::from_fen_lenient(&record.fen).expect("fixture fen parses");
    let mut truth: Vec<(veritrace::chess::MoveKey, &ScoredMove)> = Vec::new();
    for m in &record.moves {
        if let Some(mv) = resolve_move_text(&pos, &m.san) {
            truth.push((mv.key(), m));
        }
    }
    // Later record entries shadow earlier ones for the same move.
    let entry_of = |key: veritrace::chess::MoveKey| {
        truth.iter().rev().find(|(k, _)| *k == key).map(|(_, m)| *m)
    };

    let kept = ref_dedupe(trace, &pos);
    let mut sums = [0.0f64; K];
    let mut counts = [0usize; K];
    let push = |i: usize, r: f64, sums: &mut [f64; K], counts: &mut [usize; K]| {
        sums[i] += r;
        counts[i] += 1;
    };

    for cand in &kept {
        let resolved = resolve_move_text(&pos, &cand.san);
        let entry = resolved.as_ref().and_then(|m| entry_of(m.key()));

        let capture_reward = match (&resolved, &cand.capture) {
            (Some(m), Some(CaptureClaim::NoCapture)) => {
                if m.capture().is_none() {
                    1.0
                } else {
                    0.0
                }
            }
            (Some(m), Some(CaptureClaim::Takes { piece, square })) => match m.capture() {
                Some((tp, ts)) if *piece == tp && *square == ts => 1.0,
                _ => 0.0,
            },
            _ => 0.0,
        };
        push(CAPTURE, capture_reward, &mut sums, &mut counts);

        let check_reward = match (&resolved, cand.check) {
            (Some(m), Some(claim)) => {
                if claim == m.gives_check() {
                    1.0
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        push(CHECK, check_reward, &mut sums, &mut counts);

        let wr_reward = match (entry, cand.win_rate) {
            (Some(t), Some(claim)) => {
                ref_flat_zone((claim - ref_truth_wr(t)).abs(), 0.1, 10.0)
            }
            _ => 0.0,
        };
        push(WR, wr_reward, &mut sums, &mut counts);

        // Pawn contribution is undefined against a mate-scored truth entry.
        if !matches!(entry, Some(t) if t.mate.is_some()) {
            let pawn_reward = match (entry, cand.pawn_score) {
                (Some(t), Some(claim)) => ref_pawn_reward(claim, ref_truth_pawn(t)),
                _ => 0.0,
            };
            push(PAWN, pawn_reward, &mut sums, &mut counts);
        }

        // Pv contribution is undefined against an entry with no stored line.
        if !matches!(entry, Some(t) if t.pv.is_empty()) {
            let pv_reward = match (entry, &cand.pv) {
                (Some(t), Some(claimed)) => ref_pv_reward(claimed, &t.pv, &pos),
                _ => 0.0,
            };
            push(PV, pv_reward, &mut sums, &mut counts);
        }

        // Mate contribution exists only when the truth entry holds a mate.
        if let Some(t) = entry {
            if let Some(truth_mate) = t.mate {
                let mate_reward = match &cand.mate {
                    Some(MateClaim::In { moves, for_mover })
                        if *for_mover == (truth_mate > 0) =>
                    {
                        let d = (f64::from(*moves) - f64::from(truth_mate.abs())).abs();
                        (1.0 - d / 3.0).max(0.0)
                    }
                    _ => 0.0,
                };
                push(MATE, mate_reward, &mut sums, &mut counts);
            }
        }
    }

    if !kept.is_empty() {
        let c = ref_consistency(&kept, trace.answer.as_deref(), &pos);
        push(CONSISTENCY, c, &mut sums, &mut counts);
    }

    let mut rewards = [0.0f64; K];
    let mut applicable = [false; K];
    let mut mass = 0.0;
    for i in 0..K {
        if counts[i] > 0 {
            mass += weights[i];
        }
    }
    let mut weighted = 0.0;
    for i in 0..K {
        applicable[i] = counts[i] > 0;
        if applicable[i] {
            rewards[i] = sums[i] / counts[i] as f64;
            if mass > 0.0 {
                weighted += weights[i] * rewards[i];
            }
        }
    }
    let r_reason = if mass > 0.0 { weighted / mass } else { 0.0 };
    let r_form = if trace.flags.all() { 1.0 } else { 0.0 };
    let r_acc = trace
        .answer
        .as_deref()
        .and_then(|a| resolve_move_text(&pos, a))
        .and_then(|m| entry_of(m.key()))
        .map(|t| ref_truth_wr(t) / 100.0)
        .unwrap_or(0.0);
    RefBreakdown {
        rewards,
        applicable,
        r_reason,
        r_form,
        r_acc,
        total: r_form + r_acc + lambda * r_reason,
    }
}

/// Reference per-sample metrics, plain loops against the documented rules.
pub struct RefSample {
    pub top1_hit: bool,
    pub coverage: f64,
    pub wr_errors: Vec<f64>,
    pub pawn_errors: Vec<f64>,
    pub pv_overlaps: Vec<f64>,
    pub consistency: f64,
    pub capture_correct: Option<bool>,
    pub check_correct: Option<bool>,
    pub mate_error: Option<f64>,
    pub unique_candidates: usize,
    pub format_error: bool,
    pub truth_gaps: u32,
}

pub fn ref_evaluate(trace: &ReasoningTrace, record: &AnalysisRecord, k_cov: usize) -> RefSample {
    let pos = Position::from_fen_lenient(&record.fen).expect("fixture fen parses");
    let mut truth: Vec<(veritrace::chess::MoveKey, &ScoredMove)> = Vec::new();
    for m in &record.moves {
        if let Some(mv) = resolve_move_text(&pos, &m.san) {
            truth.push((mv.key(), m));
        }
    }
    let entry_of = |key: veritrace::chess::MoveKey| {
        truth.iter().find(|(k, _)| *k == key).map(|(_, m)| *m)
    };

    let kept = ref_dedupe(trace, &pos);
    let mut sample = RefSample {
        top1_hit: false,
        coverage: 0.0,
        wr_errors: Vec::new(),
        pawn_errors: Vec::new(),
        pv_overlaps: Vec::new(),
        consistency: 0.0,
        capture_correct: None,
        check_correct: None,
        mate_error: None,
        unique_candidates: kept.len(),
        format_error: !trace.flags.all(),
        truth_gaps: 0,
    };
    if kept.is_empty() {
        sample.wr_errors.push(100.0);
        sample.pawn_errors.push(10.0);
        sample.pv_overlaps.push(0.0);
        return sample;
    }

    let mut keys = Vec::new();
    let mut mate_errors = Vec::new();
    for cand in &kept {
        let resolved = resolve_move_text(&pos, &cand.san);
        if let Some(m) = &resolved {
            keys.push(m.key());
            if entry_of(m.key()).is_none() {
                sample.truth_gaps += 1;
            }
            if let Some(taken) = m.capture() {
                let ok = matches!(
                    &cand.capture,
                    Some(CaptureClaim::Takes { piece, square }) if *piece == taken.0 && *square == taken.1
                );
                sample.capture_correct = Some(sample.capture_correct.unwrap_or(true) && ok);
            }
            if m.gives_check() {
                let ok = cand.check == Some(true);
                sample.check_correct = Some(sample.check_correct.unwrap_or(true) && ok);
            }
        }
        let Some(entry) = resolved.as_ref().and_then(|m| entry_of(m.key())) else {
            continue;
        };
        sample.wr_errors.push(match cand.win_rate {
            Some(claim) => (claim - ref_truth_wr(entry)).abs(),
            None => 100.0,
        });
        if entry.mate.is_none() {
            sample.pawn_errors.push(match cand.pawn_score {
                Some(claim) => (claim - ref_truth_pawn(entry)).abs(),
                None => 10.0,
            });
        }
        if !entry.pv.is_empty() {
            sample.pv_overlaps.push(match &cand.pv {
                Some(claimed) => ref_pv_overlap(claimed, &entry.pv, &pos),
                None => 0.0,
            });
        }
        if let Some(truth_mate) = entry.mate {
            let claimed = match &cand.mate {
                Some(MateClaim::In { moves, for_mover }) if *for_mover == (truth_mate > 0) => {
                    f64::from(*moves)
                }
                _ => 0.0,
            };
            mate_errors.push((claimed - f64::from(truth_mate.unsigned_abs())).abs());
        }
    }
    if !mate_errors.is_empty() {
        sample.mate_error = Some(mate_errors.iter().sum::<f64>() / mate_errors.len() as f64);
    }
    sample.consistency = ref_consistency(&kept, trace.answer.as_deref(), &pos);

    let k = k_cov.min(record.moves.len()).max(1);
    let mut found = 0usize;
    for m in record.moves.iter().take(k) {
        if let Some(mv) = resolve_move_text(&pos, &m.san) {
            if keys.contains(&mv.key()) {
                found += 1;
            }
        }
    }
    sample.coverage = found as f64 / k as f64;

    let best = record
        .moves
        .first()
        .and_then(|m| resolve_move_text(&pos, &m.san))
        .map(|m| m.key());
    let answered = trace
        .answer
        .as_deref()
        .and_then(|a| resolve_move_text(&pos, a))
        .map(|m| m.key());
    sample.top1_hit = best.is_some() && answered == best;
    sample
}

/// Unweighted lockstep prefix overlap: matched plies over truth depth,
/// both capped at five plies.
pub fn ref_pv_overlap(claimed: &[String], truth: &[String], pos: &Position) -> f64 {
    let depth = truth.len().min(5);
    if depth == 0 {
        return 0.0;
    }
    let mut cur = pos.clone();
    let mut matched = 0usize;
    for i in 0..depth {
        let Some(t) = resolve_move_text(&cur, &truth[i]) else {
            break;
        };
        let agreed = claimed
            .get(i)
            .and_then(|s| resolve_move_text(&cur, s))
            .map(|m| m.key() == t.key())
            .unwrap_or(false);
        if !agreed {
            break;
        }
        matched = i + 1;
        cur = cur.apply(&t);
    }
    matched as f64 / depth as f64
}

/// Reference corpus aggregation: per-sample means first, then the mean over
/// samples where the metric applied. Option fields carry (mean, samples).
pub struct RefReport {
    pub samples: usize,
    pub top1_acc: f64,
    pub coverage: f64,
    pub consistency: f64,
    pub move_diversity: f64,
    pub format_error_rate: f64,
    pub wr_mae: Option<(f64, usize)>,
    pub pawn_mae: Option<(f64, usize)>,
    pub pv_overlap: Option<(f64, usize)>,
    pub capture_acc: Option<(f64, usize)>,
    pub check_acc: Option<(f64, usize)>,
    pub mate_mae: Option<(f64, usize)>,
    pub truth_gaps: u64,
}

pub fn ref_aggregate(samples: &[RefSample]) -> RefReport {
    let n = samples.len() as f64;
    let mean_of = |values: Vec<Option<f64>>| {
        let mut sum = 0.0;
        let mut count = 0usize;
        for v in values.into_iter().flatten() {
            sum += v;
            count += 1;
        }
        (count > 0).then(|| (sum / count as f64, count))
    };
    let vec_mean = |xs: &Vec<f64>| {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    };
    RefReport {
        samples: samples.len(),
        top1_acc: samples.iter().filter(|s| s.top1_hit).count() as f64 / n,
        coverage: samples.iter().map(|s| s.coverage).sum::<f64>() / n,
        consistency: samples.iter().map(|s| s.consistency).sum::<f64>() / n,
        move_diversity: samples.iter().map(|s| s.unique_candidates as f64).sum::<f64>() / n,
        format_error_rate: samples.iter().filter(|s| s.format_error).count() as f64 / n,
        wr_mae: mean_of(samples.iter().map(|s| vec_mean(&s.wr_errors)).collect()),
        pawn_mae: mean_of(samples.iter().map(|s| vec_mean(&s.pawn_errors)).collect()),
        pv_overlap: mean_of(samples.iter().map(|s| vec_mean(&s.pv_overlaps)).collect()),
        capture_acc: mean_of(
            samples
                .iter()
                .map(|s| s.capture_correct.map(|b| if b { 1.0 } else { 0.0 }))
                .collect(),
        ),
        check_acc: mean_of(
            samples
                .iter()
                .map(|s| s.check_correct.map(|b| if b { 1.0 } else { 0.0 }))
                .collect(),
        ),
        mate_mae: mean_of(samples.iter().map(|s| s.mate_error).collect()),
        truth_gaps: samples.iter().map(|s| u64::from(s.truth_gaps)).sum(),
    }
}

const PIECE_NAMES: [&str; 5] = ["Pawn", "Knight", "Bishop", "Rook", "Queen"];

fn random_square(rng: &mut ChaCha8Rng) -> String {
    let file = (b'a' + rng.gen_range(0..8u8)) as char;
    let rank = (b'1' + rng.gen_range(0..8u8)) as char;
    format!("{file}{rank}")
}

/// A randomly assembled trace over the record's position: candidates drawn
/// from the record, other legal moves, garbage spellings, and duplicates;
/// claims present, correct, corrupted, or missing independently. Exercises
/// every scoring rule, including format failures and empty traces.
pub fn random_trace(rng: &mut ChaCha8Rng, record: &AnalysisRecord) -> String {
    let pos = Position::from_fen_lenient(&record.fen).expect("fixture fen parses");
    let legal: Vec<String> = pos.legal_moves().iter().map(|m| pos.san(m)).collect();

    if rng.gen_bool(0.04) {
        return "<think>\nNo analysis.\n</think>\n<answer> e4 </answer>".into();
    }

    let mut sans: Vec<String> = Vec::new();
    for _ in 0..3 {
        let roll: f64 = rng.gen();
        let san = if roll < 0.6 {
            record.moves[rng.gen_range(0..record.moves.len())].san.clone()
        } else if roll < 0.9 {
            legal[rng.gen_range(0..legal.len())].clone()
        } else {
            format!("Z{}", random_square(rng))
        };
        sans.push(san);
    }
    if rng.gen_bool(0.15) {
        sans[1] = sans[0].clone();
    }

    let mut body = String::new();
    for (i, san) in sans.iter().enumerate() {
        body.push_str(&format!("Candidate {}: {}\n", i + 1, san));
        let resolved = resolve_move_text(&pos, san);
        let entry = resolved.as_ref().and_then(|m| {
            record
                .moves
                .iter()
                .find(|t| resolve_move_text(&pos, &t.san).map(|tm| tm.key()) == Some(m.key()))
        });

        if rng.gen_bool(0.85) {
            let truthful = rng.gen_bool(0.6);
            let line = match (&resolved, truthful) {
                (Some(m), true) => match m.capture() {
                    None => "Capture: none".to_string(),
                    Some((p, s)) => format!("Capture: {} on {}", p.name(), s),
                },
                _ => {
                    if rng.gen_bool(0.5) {
                        "Capture: none".to_string()
                    } else {
                        format!(
                            "Capture: {} on {}",
                            PIECE_NAMES[rng.gen_range(0..PIECE_NAMES.len())],
                            random_square(rng)
                        )
                    }
                }
            };
            body.push_str(&line);
            body.push('\n');
        }

        if rng.gen_bool(0.85) {
            let truth = resolved.as_ref().map(|m| m.gives_check()).unwrap_or(false);
            let claim = if rng.gen_bool(0.6) { truth } else { !truth };
            body.push_str(if claim { "Check: yes\n" } else { "Check: no\n" });
        }

        if rng.gen_bool(0.7) {
            let line = match entry.and_then(|t| t.mate) {
                Some(n) if rng.gen_bool(0.5) => {
                    let moves = (n.unsigned_abs() as i64 + rng.gen_range(-1..=2)).max(1);
                    let side = if (n > 0) == rng.gen_bool(0.8) { "for" } else { "against" };
                    format!("Mate: mate in {moves} ({side})")
                }
                _ => {
                    if rng.gen_bool(0.9) {
                        "Mate: none".to_string()
                    } else {
                        format!("Mate: mate in {} (for)", rng.gen_range(1..5))
                    }
                }
            };
            body.push_str(&line);
            body.push('\n');
        }

        if rng.gen_bool(0.85) {
            let base = entry.map(ref_truth_pawn).unwrap_or(0.0);
            let noise: f64 = if rng.gen_bool(0.5) {
                rng.gen_range(-0.05..0.05)
            } else {
                rng.gen_range(-6.0..6.0)
            };
            body.push_str(&format!("Score: {:+.2} pawns\n", base + noise));
        }

        if rng.gen_bool(0.85) {
            let base = entry.map(ref_truth_wr).unwrap_or(50.0);
            let noise: f64 = if rng.gen_bool(0.5) {
                rng.gen_range(-0.05..0.05)
            } else {
                rng.gen_range(-20.0..20.0)
            };
            body.push_str(&format!("Win rate: {}%\n", (base + noise).clamp(0.0, 100.0)));
        }

        if rng.gen_bool(0.8) {
            let pv: Vec<String> = match entry {
                Some(t) if !t.pv.is_empty() && rng.gen_bool(0.6) => {
                    let keep = rng.gen_range(1..=t.pv.len());
                    let mut line: Vec<String> = t.pv[..keep].to_vec();
                    if keep < t.pv.len() && rng.gen_bool(0.5) {
                        line.push("Kh5".into());
                    }
                    line
                }
                _ => vec![san.clone(), legal[rng.gen_range(0..legal.len())].clone()],
            };
            body.push_str(&format!("PV: {}\n", pv.join(" ")));
        }
    }

    let answer = if rng.gen_bool(0.75) {
        sans[0].clone()
    } else {
        sans[rng.gen_range(0..sans.len())].clone()
    };
    if rng.gen_bool(0.08) {
        // Missing answer tags: a format failure the verifier must flag.
        format!("<think>\n{body}Best move: {answer}\n</think>\n")
    } else {
        format!("<think>\n{body}Best move: {answer}\n</think>\n<answer> {answer} </answer>\n")
    }
}
