//! Rubric-based quality judging over a pluggable transport. Each trace is
//! rated on four dimensions (1 to 5) by one or more judges; scores are
//! probability-weighted expectations over the judge's digit distribution
//! when token log-probabilities are available, and the parsed integer
//! otherwise. The judge sees engine analysis as context, summarized
//! relationally rather than as raw numbers.
//!
//! Locating the score token in a reply is heuristic by necessity: the
//! first response token that trims to a lone digit 1 to 5 is taken as the
//! numeric token, and the digit alternatives at that position form the
//! distribution.

use std::collections::BTreeMap;
use std::io;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chess::Position;
use crate::oracle::{AnalysisRecord, ScoredMove};
use crate::prompts;
use crate::trace::{normalize_move_text, resolve_move_text};

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Relevance,
    Completeness,
    Clarity,
    Fluency,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Relevance,
        Dimension::Completeness,
        Dimension::Clarity,
        Dimension::Fluency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Relevance => "relevance",
            Dimension::Completeness => "completeness",
            Dimension::Clarity => "clarity",
            Dimension::Fluency => "fluency",
        }
    }

    /// The verbatim rubric text for this dimension.
    pub fn rubric(self) -> &'static str {
        match self {
            Dimension::Relevance => prompts::RUBRIC_RELEVANCE,
            Dimension::Completeness => prompts::RUBRIC_COMPLETENESS,
            Dimension::Clarity => prompts::RUBRIC_CLARITY,
            Dimension::Fluency => prompts::RUBRIC_FLUENCY,
        }
    }
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("no judges configured")]
    NoJudges,
    #[error("record has no scored moves")]
    EmptyRecord,
    #[error("credential variable {0} is not set")]
    MissingCredential(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed judge reply: {0}")]
    Protocol(String),
    #[error("reply carries neither score log-probabilities nor a parseable integer")]
    NoScore,
    #[error("injected failure")]
    Injected,
}

/// One rating request: the fully rendered prompt plus the context it was
/// built from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub dimension: Dimension,
    pub prompt: String,
    pub fen: String,
    pub summary: String,
}

/// One judge reply. `score_logprobs` holds (digit, logprob) pairs for the
/// numeric token's alternatives when the transport could extract them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub raw: String,
    pub parsed_score: Option<u8>,
    pub score_logprobs: Option<Vec<(u8, f64)>>,
}

/// Deterministic prompt assembly: rubric text, then the position, the
/// engine summary, and the trace under test.
pub fn build_prompt(dimension: Dimension, trace_text: &str, fen: &str, summary: &str) -> JudgeRequest {
    let prompt = format!(
        "{rubric}\n\n### Position (FEN)\n{fen}\n\n### Engine summary\n{summary}\n\n### Reasoning trace\n{trace}\n",
        rubric = dimension.rubric().trim_end(),
        trace = trace_text.trim_end(),
    );
    JudgeRequest {
        dimension,
        prompt,
        fen: fen.to_string(),
        summary: summary.to_string(),
    }
}

/// Qualitative engine context for the judge: the top five moves, whether
/// any forces checkmate, and how the analyzed move compares with the best
/// one. Gaps at most 2 win-rate points read as "similar to best move";
/// beyond that, more than a pawn of difference reads as significantly
/// worse.
pub fn engine_summary(record: &AnalysisRecord, analyzed: &str) -> Result<String, JudgeError> {
    let best = record.best().ok_or(JudgeError::EmptyRecord)?;
    let pos = Position::from_fen_lenient(&record.fen).ok();
    let key_of = |san: &str| {
        pos.as_ref()
            .and_then(|p| resolve_move_text(p, san))
            .map(|m| m.key())
    };
    let analyzed_key = key_of(analyzed);
    let entry = record.moves.iter().find(|m| match (analyzed_key, key_of(&m.san)) {
        (Some(a), Some(b)) => a == b,
        _ => normalize_move_text(&m.san) == normalize_move_text(analyzed),
    });

    let top: Vec<&ScoredMove> = record.moves.iter().take(5).collect();
    let names: Vec<&str> = top.iter().map(|m| m.san.as_str()).collect();
    let mut out = format!(
        "Engine top moves (depth {}): {}.",
        record.depth,
        names.join(", ")
    );
    match top.iter().find(|m| m.mate.map_or(false, |n| n > 0)) {
        Some(m) => {
            out.push_str(&format!(
                " {} leads to forced checkmate (mate in {}).",
                m.san,
                m.mate.unwrap()
            ));
        }
        None => out.push_str(" No candidate leads to forced checkmate."),
    }
    out.push_str(&format!(" The engine's best move is {}.", best.san));
    match entry {
        None => out.push_str(&format!(
            " The analyzed move {analyzed} is not among the engine's scored moves."
        )),
        Some(e) => {
            let wr_gap = best.win_rate() - e.win_rate();
            let pawn_gap = best.pawn_score() - e.pawn_score();
            let bucket = if wr_gap <= 2.0 {
                "similar to best move"
            } else if pawn_gap > 1.0 {
                "significantly worse than best move (over a pawn)"
            } else {
                "somewhat worse than best move"
            };
            out.push_str(&format!(" The analyzed move {} is {}.", e.san, bucket));
        }
    }
    Ok(out)
}

/// Probability-weighted expected score over digits 1 to 5, renormalized
/// over whichever of them the response carries; the parsed integer when no
/// usable log-probabilities exist.
pub fn expected_score(response: &JudgeResponse) -> Result<f64, JudgeError> {
    if let Some(pairs) = &response.score_logprobs {
        let valid: Vec<(u8, f64)> = pairs
            .iter()
            .filter(|(s, _)| (1..=5).contains(s))
            .copied()
            .collect();
        if !valid.is_empty() {
            let max = valid.iter().map(|(_, lp)| *lp).fold(f64::NEG_INFINITY, f64::max);
            let mass: f64 = valid.iter().map(|(_, lp)| (lp - max).exp()).sum();
            let sum: f64 = valid
                .iter()
                .map(|(s, lp)| f64::from(*s) * (lp - max).exp())
                .sum();
            return Ok(sum / mass);
        }
    }
    response
        .parsed_score
        .map(f64::from)
        .ok_or(JudgeError::NoScore)
}

static SCORE_FIELD_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r#"(?i)score\D{0,10}([1-5])\b"#).unwrap());
static LONE_DIGIT_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b([1-5])\b").unwrap());

/// Integer score from reply text: the JSON `score` field when the reply
/// parses (possibly with surrounding prose), else the first digit near a
/// "score" mention, else the first lone digit 1 to 5.
pub fn parse_score(raw: &str) -> Option<u8> {
    let from_value = |v: &serde_json::Value| -> Option<u8> {
        let s = v.get("score")?;
        let n = s.as_i64().or_else(|| s.as_f64().map(|f| f.round() as i64))?;
        u8::try_from(n).ok().filter(|n| (1..=5).contains(n))
    };
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(raw.trim()) {
        if let Some(s) = from_value(&v) {
            return Some(s);
        }
    }
    if let (Some(start), Some(end)) = (raw.find('{'), raw.rfind('}')) {
        if start < end {
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(&raw[start..=end]) {
                if let Some(s) = from_value(&v) {
                    return Some(s);
                }
            }
        }
    }
    if let Some(c) = SCORE_FIELD_RE.captures(raw) {
        return c[1].parse().ok();
    }
    LONE_DIGIT_RE.captures(raw).and_then(|c| c[1].parse().ok())
}

/// A rating backend. Implementations must be callable from multiple panel
/// workers at once.
pub trait JudgeTransport: Send + Sync {
    fn name(&self) -> &str;
    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError>;
}

/// Deterministic in-process judge for tests and offline runs: a fixed
/// digit distribution per dimension, with optional failure injection.
pub struct MockJudge {
    name: String,
    distributions: BTreeMap<Dimension, Vec<(u8, f64)>>,
    fail_next: AtomicU32,
}

impl MockJudge {
    pub fn new(name: impl Into<String>) -> MockJudge {
        let mut distributions = BTreeMap::new();
        distributions.insert(Dimension::Relevance, vec![(4, 0.7), (5, 0.3)]);
        distributions.insert(Dimension::Completeness, vec![(3, 1.0)]);
        distributions.insert(
            Dimension::Clarity,
            (1..=5).map(|s| (s, 0.2)).collect(),
        );
        distributions.insert(Dimension::Fluency, vec![(2, 0.5), (3, 0.5)]);
        MockJudge {
            name: name.into(),
            distributions,
            fail_next: AtomicU32::new(0),
        }
    }

    /// Replace one dimension's probabilities (need not be normalized).
    pub fn with_distribution(mut self, dim: Dimension, probs: &[(u8, f64)]) -> MockJudge {
        self.distributions.insert(dim, probs.to_vec());
        self
    }

    /// Make the next `n` calls fail, for exercising retry handling.
    pub fn fail_next(&self, n: u32) {
        self.fail_next.store(n, Ordering::SeqCst);
    }

    pub fn expected(&self, dim: Dimension) -> f64 {
        let dist = &self.distributions[&dim];
        let mass: f64 = dist.iter().map(|(_, p)| p).sum();
        dist.iter().map(|(s, p)| f64::from(*s) * p).sum::<f64>() / mass
    }
}

impl JudgeTransport for MockJudge {
    fn name(&self) -> &str {
        &self.name
    }

    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let take = self
            .fail_next
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1));
        if take.is_ok() {
            return Err(JudgeError::Injected);
        }
        let dist = self
            .distributions
            .get(&request.dimension)
            .ok_or_else(|| JudgeError::Protocol("dimension not configured".into()))?;
        let top = dist
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(s, _)| *s)
            .unwrap_or(3);
        Ok(JudgeResponse {
            raw: format!(r#"{{"score": {top}, "justification": "fixed mock distribution"}}"#),
            parsed_score: Some(top),
            score_logprobs: Some(dist.iter().map(|(s, p)| (*s, p.ln())).collect()),
        })
    }
}

/// Where and how to reach one HTTP judge. The credential is read from the
/// named environment variable at call time, never stored.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JudgeEndpoint {
    pub name: String,
    /// Base URL of a chat-completions style API, without the trailing
    /// `/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    #[serde(default = "default_top_logprobs")]
    pub top_logprobs: u8,
}

fn default_top_logprobs() -> u8 {
    10
}

/// Chat-completions transport asking for token log-probabilities.
pub struct HttpJudge {
    endpoint: JudgeEndpoint,
}

impl HttpJudge {
    pub fn new(endpoint: JudgeEndpoint) -> HttpJudge {
        HttpJudge { endpoint }
    }
}

fn digit_token(token: &str) -> Option<u8> {
    let t = token.trim();
    let mut chars = t.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if ('1'..='5').contains(&c) => Some(c as u8 - b'0'),
        _ => None,
    }
}

/// Pull the reply text and the digit distribution at the first numeric
/// token out of a chat-completions response body.
fn parse_chat_response(v: &serde_json::Value) -> Result<JudgeResponse, JudgeError> {
    let choice = v["choices"]
        .get(0)
        .ok_or_else(|| JudgeError::Protocol("no choices in reply".into()))?;
    let raw = choice["message"]["content"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    let mut score_logprobs = None;
    if let Some(tokens) = choice["logprobs"]["content"].as_array() {
        for tok in tokens {
            let Some(digit) = tok["token"].as_str().and_then(digit_token) else {
                continue;
            };
            let mut pairs: Vec<(u8, f64)> = Vec::new();
            if let Some(alts) = tok["top_logprobs"].as_array() {
                for alt in alts {
                    if let (Some(d), Some(lp)) = (
                        alt["token"].as_str().and_then(digit_token),
                        alt["logprob"].as_f64(),
                    ) {
                        if !pairs.iter().any(|(seen, _)| *seen == d) {
                            pairs.push((d, lp));
                        }
                    }
                }
            }
            if pairs.is_empty() {
                if let Some(lp) = tok["logprob"].as_f64() {
                    pairs.push((digit, lp));
                }
            }
            if !pairs.is_empty() {
                score_logprobs = Some(pairs);
                break;
            }
        }
    }
    Ok(JudgeResponse {
        parsed_score: parse_score(&raw),
        raw,
        score_logprobs,
    })
}

impl JudgeTransport for HttpJudge {
    fn name(&self) -> &str {
        &self.endpoint.name
    }

    fn judge(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let key = std::env::var(&self.endpoint.api_key_env)
            .map_err(|_| JudgeError::MissingCredential(self.endpoint.api_key_env.clone()))?;
        let url = format!(
            "{}/chat/completions",
            self.endpoint.base_url.trim_end_matches('/')
        );
        let body = serde_json::json!({
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": 0,
            "max_tokens": 256,
            "logprobs": true,
            "top_logprobs": self.endpoint.top_logprobs,
        });
        let reply = ureq::post(&url)
            .set("Authorization", &format!("Bearer {key}"))
            .send_json(body)
            .map_err(|e| JudgeError::Transport(e.to_string()))?;
        let v: serde_json::Value = reply
            .into_json()
            .map_err(|e| JudgeError::Protocol(e.to_string()))?;
        parse_chat_response(&v)
    }
}

/// One trace queued for the panel, with its context already rendered.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanelItem {
    pub id: String,
    pub fen: String,
    pub trace: String,
    pub summary: String,
}

#[derive(Clone, Debug)]
pub struct PanelConfig {
    /// Total attempts per request.
    pub attempts: u32,
    /// First retry delay; doubles per attempt.
    pub backoff: Duration,
    /// In-flight request cap.
    pub concurrency: usize,
}

impl Default for PanelConfig {
    fn default() -> PanelConfig {
        PanelConfig {
            attempts: 3,
            backoff: Duration::from_millis(200),
            concurrency: 4,
        }
    }
}

pub type DimScores = BTreeMap<Dimension, f64>;

/// All scores for one trace: per judge, the cross-judge mean per
/// dimension, and the mean over dimensions. Failed requests simply leave
/// their dimension absent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanelRow {
    pub trace_id: String,
    pub judges: BTreeMap<String, DimScores>,
    pub mean: DimScores,
    pub overall: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanelReport {
    pub rows: Vec<PanelRow>,
    /// Corpus mean per dimension, over the rows where it was scored.
    pub mean: DimScores,
    pub overall: Option<f64>,
}

/// One transcript line per request, for audit and caching.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub trace_id: String,
    pub dimension: Dimension,
    pub judge: String,
    /// Hex SHA-256 of the prompt bytes.
    pub prompt_hash: String,
    pub raw: String,
    pub expected_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Job {
    item: usize,
    judge: usize,
    request: JudgeRequest,
}

struct JobOutcome {
    raw: String,
    expected: Option<f64>,
    error: Option<String>,
}

fn run_job(job: &Job, judges: &[&dyn JudgeTransport], cfg: &PanelConfig) -> JobOutcome {
    let judge = judges[job.judge];
    let mut last_error = String::new();
    for attempt in 0..cfg.attempts.max(1) {
        match judge.judge(&job.request).and_then(|r| {
            let score = expected_score(&r)?;
            Ok((r, score))
        }) {
            Ok((response, score)) => {
                return JobOutcome {
                    raw: response.raw,
                    expected: Some(score),
                    error: None,
                }
            }
            Err(e) => {
                last_error = e.to_string();
                if attempt + 1 < cfg.attempts.max(1) && !cfg.backoff.is_zero() {
                    std::thread::sleep(cfg.backoff * 2u32.pow(attempt));
                }
            }
        }
    }
    JobOutcome {
        raw: String::new(),
        expected: None,
        error: Some(last_error),
    }
}

/// Rate every item on every dimension with every judge. Requests fan out
/// over `cfg.concurrency` workers; aggregation is a deterministic fold in
/// job order, so reports do not depend on completion timing. Failures
/// exhaust the retry budget, land in the transcript with their error, and
/// are excluded from every mean.
pub fn run_panel(
    items: &[PanelItem],
    judges: &[&dyn JudgeTransport],
    cfg: &PanelConfig,
    mut transcript: Option<&mut dyn io::Write>,
) -> Result<PanelReport, JudgeError> {
    if judges.is_empty() {
        return Err(JudgeError::NoJudges);
    }
    let mut jobs = Vec::with_capacity(items.len() * judges.len() * Dimension::ALL.len());
    for (item_idx, item) in items.iter().enumerate() {
        for judge_idx in 0..judges.len() {
            for dim in Dimension::ALL {
                jobs.push(Job {
                    item: item_idx,
                    judge: judge_idx,
                    request: build_prompt(dim, &item.trace, &item.fen, &item.summary),
                });
            }
        }
    }

    let outcomes: Vec<Mutex<Option<JobOutcome>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cfg.concurrency.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let outcome = run_job(&jobs[i], judges, cfg);
                *outcomes[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    let outcomes: Vec<JobOutcome> = outcomes
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every job ran"))
        .collect();

    if let Some(out) = transcript.as_deref_mut() {
        for (job, outcome) in jobs.iter().zip(&outcomes) {
            let line = TranscriptLine {
                trace_id: items[job.item].id.clone(),
                dimension: job.request.dimension,
                judge: judges[job.judge].name().to_string(),
                prompt_hash: hex_sha256(job.request.prompt.as_bytes()),
                raw: outcome.raw.clone(),
                expected_score: outcome.expected,
                error: outcome.error.clone(),
            };
            serde_json::to_writer(&mut *out, &line).map_err(|e| JudgeError::Transport(e.to_string()))?;
            out.write_all(b"\n")
                .map_err(|e| JudgeError::Transport(e.to_string()))?;
        }
    }

    let mut rows = Vec::with_capacity(items.len());
    for (item_idx, item) in items.iter().enumerate() {
        let mut per_judge: BTreeMap<String, DimScores> = BTreeMap::new();
        for (job, outcome) in jobs.iter().zip(&outcomes) {
            if job.item != item_idx {
                continue;
            }
            let scores = per_judge
                .entry(judges[job.judge].name().to_string())
                .or_default();
            if let Some(score) = outcome.expected {
                scores.insert(job.request.dimension, score);
            }
        }
        let mut mean = DimScores::new();
        for dim in Dimension::ALL {
            let vals: Vec<f64> = per_judge.values().filter_map(|s| s.get(&dim)).copied().collect();
            if !vals.is_empty() {
                mean.insert(dim, vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        let overall = if mean.is_empty() {
            None
        } else {
            Some(mean.values().sum::<f64>() / mean.len() as f64)
        };
        rows.push(PanelRow {
            trace_id: item.id.clone(),
            judges: per_judge,
            mean,
            overall,
        });
    }

    let mut mean = DimScores::new();
    for dim in Dimension::ALL {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.mean.get(&dim)).copied().collect();
        if !vals.is_empty() {
            mean.insert(dim, vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    let overall = if mean.is_empty() {
        None
    } else {
        Some(mean.values().sum::<f64>() / mean.len() as f64)
    };
    Ok(PanelReport { rows, mean, overall })
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
