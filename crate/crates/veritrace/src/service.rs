//! Streaming scoring service: newline-delimited JSON in, one reply per
//! line out, over stdio or TCP. The scoring path is the same function the
//! batch command uses, so a service reply and an offline score for the
//! same inputs are identical. A malformed line gets an error reply, never
//! a dropped connection or a dead process.
//!
//! With a session, the service also embodies the per-step weight refresh:
//! every scored trace accumulates subtask rewards, and a batch-end marker
//! (`{"batch_end": true}`) folds them into the scheduler and bumps the
//! weights step echoed in every subsequent reply.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{EngineError, Oracle};
use crate::rewards::{score_trace, RewardBreakdown, ScoreConfig, ScoreError, K};
use crate::scheduler::WeightState;
use crate::trace::parse_trace;

/// Why one scoring request failed. Position errors cover both offline
/// store misses and live engine failures; callers that care (exit codes)
/// can inspect the inner engine error.
#[derive(Debug, Error)]
pub enum RequestError {
    #[error("position unavailable: {0}")]
    Position(#[source] EngineError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Deserialize)]
struct Request {
    #[serde(default)]
    id: Option<serde_json::Value>,
    #[serde(default)]
    fen: Option<String>,
    #[serde(default)]
    trace: Option<String>,
    #[serde(default)]
    batch_end: bool,
}

#[derive(Debug, Serialize)]
struct ScoreReply<'a> {
    id: &'a serde_json::Value,
    breakdown: &'a RewardBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights_step: Option<u64>,
}

#[derive(Debug, Serialize)]
struct ErrorReply<'a> {
    id: &'a serde_json::Value,
    error: &'a str,
}

#[derive(Debug, Serialize)]
struct BatchReply {
    batch_end: bool,
    weights_step: u64,
    weights: Vec<f64>,
    mu: Vec<f64>,
}

struct Session {
    state: WeightState,
    sums: [f64; K],
    counts: [usize; K],
}

/// Scoring backend shared by every connection. Stateless by default; give
/// it a scheduler to turn on session mode.
pub struct ScoreService {
    oracle: Oracle,
    score: ScoreConfig,
    depth: u32,
    multipv: u32,
    weights: Vec<f64>,
    session: Option<Mutex<Session>>,
}

impl ScoreService {
    pub fn new(oracle: Oracle, score: ScoreConfig, depth: u32, multipv: u32) -> ScoreService {
        ScoreService {
            oracle,
            score,
            depth,
            multipv,
            weights: vec![1.0 / K as f64; K],
            session: None,
        }
    }

    /// Fixed subtask weights (a frozen scheduler snapshot). Ignored once a
    /// session is attached; the live scheduler wins.
    pub fn with_weights(mut self, weights: Vec<f64>) -> ScoreService {
        assert_eq!(weights.len(), K, "weights must cover the {K} subtasks");
        self.weights = weights;
        self
    }

    pub fn with_session(mut self, state: WeightState) -> ScoreService {
        assert_eq!(state.k(), K, "session scheduler must track the {K} subtasks");
        self.session = Some(Mutex::new(Session {
            state,
            sums: [0.0; K],
            counts: [0; K],
        }));
        self
    }

    /// Score one (fen, trace) pair: the single code path behind both the
    /// batch command and the wire protocol. Returns the breakdown and, in
    /// session mode, the weights step it was scored under. Session reward
    /// accumulation happens here too.
    pub fn score_one(
        &self,
        fen: &str,
        trace_text: &str,
    ) -> Result<(RewardBreakdown, Option<u64>), RequestError> {
        // Any stored record serves; the engine only runs for unknown
        // positions, and only when one is configured.
        let record = match self.oracle.lookup(fen) {
            Some(r) => r,
            None => self
                .oracle
                .resolve(fen, self.depth, self.multipv)
                .map_err(RequestError::Position)?,
        };
        let parsed = parse_trace(trace_text);
        let (weights, step) = match &self.session {
            Some(session) => {
                let s = session.lock().unwrap();
                (s.state.weights().to_vec(), Some(s.state.step()))
            }
            None => (self.weights.clone(), None),
        };
        let breakdown = score_trace(&parsed, &record, &weights, &self.score)?;
        if let Some(session) = &self.session {
            let mut s = session.lock().unwrap();
            for sub in &breakdown.subtasks {
                if sub.applicable {
                    let i = sub.subtask.index();
                    s.sums[i] += sub.reward;
                    s.counts[i] += 1;
                }
            }
        }
        Ok((breakdown, step))
    }

    fn error(id: &serde_json::Value, error: &str) -> String {
        serde_json::to_string(&ErrorReply { id, error }).expect("reply serializes")
    }

    /// Score one request line and render the reply line.
    pub fn handle_line(&self, line: &str) -> String {
        let null = serde_json::Value::Null;
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Self::error(&null, &format!("malformed request: {e}")),
        };
        let id = request.id.as_ref().unwrap_or(&null);
        if request.batch_end {
            return self.end_batch(id);
        }
        let Some(fen) = request.fen.as_deref() else {
            return Self::error(id, "missing field: fen");
        };
        let Some(trace_text) = request.trace.as_deref() else {
            return Self::error(id, "missing field: trace");
        };
        match self.score_one(fen, trace_text) {
            Ok((breakdown, step)) => serde_json::to_string(&ScoreReply {
                id,
                breakdown: &breakdown,
                weights_step: step,
            })
            .expect("reply serializes"),
            Err(e) => Self::error(id, &e.to_string()),
        }
    }

    fn end_batch(&self, id: &serde_json::Value) -> String {
        let Some(session) = &self.session else {
            return Self::error(id, "batch_end requires session mode");
        };
        let mut s = session.lock().unwrap();
        let means: Vec<Option<f64>> = (0..K)
            .map(|i| (s.counts[i] > 0).then(|| s.sums[i] / s.counts[i] as f64))
            .collect();
        if let Err(e) = s.state.update(&means) {
            return Self::error(id, &e.to_string());
        }
        s.sums = [0.0; K];
        s.counts = [0; K];
        serde_json::to_string(&BatchReply {
            batch_end: true,
            weights_step: s.state.step(),
            weights: s.state.weights().to_vec(),
            mu: s.state.mu().to_vec(),
        })
        .expect("reply serializes")
    }

    /// Current scheduler snapshot, when a session is live.
    pub fn snapshot(&self) -> Option<String> {
        self.session
            .as_ref()
            .map(|s| s.lock().unwrap().state.to_json())
    }
}

/// Serve line requests from any reader to any writer, one reply per line.
pub fn serve_lines(
    service: &ScoreService,
    input: impl BufRead,
    mut output: impl Write,
) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        output.write_all(service.handle_line(&line).as_bytes())?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

/// Bind and return the listener so callers learn the actual port before
/// serving (ephemeral binds in tests, logs in production).
pub fn bind(addr: impl ToSocketAddrs) -> io::Result<TcpListener> {
    TcpListener::bind(addr)
}

/// Accept loop: one thread per connection, capped. Runs until the process
/// ends or the listener errors.
pub fn serve_tcp(
    service: Arc<ScoreService>,
    listener: TcpListener,
    max_connections: usize,
) -> io::Result<()> {
    let live = Arc::new(AtomicUsize::new(0));
    for stream in listener.incoming() {
        let stream = stream?;
        if live.load(Ordering::SeqCst) >= max_connections.max(1) {
            // Hard cap: refuse rather than queue unboundedly.
            drop(stream);
            continue;
        }
        live.fetch_add(1, Ordering::SeqCst);
        let service = Arc::clone(&service);
        let live = Arc::clone(&live);
        std::thread::spawn(move || {
            let reader = BufReader::new(stream.try_clone().expect("clone stream"));
            let _ = serve_lines(&service, reader, stream);
            live.fetch_sub(1, Ordering::SeqCst);
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{AnalysisStore, MockEngine};
    use crate::scheduler::SchedulerParams;
    use crate::synth::generate_trace;

    fn service_with_engine() -> ScoreService {
        let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
        ScoreService::new(oracle, ScoreConfig::default(), 4, 5)
    }

    fn perfect_request(id: u32) -> (String, String) {
        let mut engine = MockEngine::new();
        let record =
            crate::oracle::EngineBackend::analyze(&mut engine, crate::chess::START_FEN, 4, 5)
                .unwrap();
        let trace = generate_trace(&record, 3).unwrap();
        let line = serde_json::json!({
            "id": id,
            "fen": crate::chess::START_FEN,
            "trace": trace,
        });
        (line.to_string(), trace)
    }

    #[test]
    fn scores_requests_and_echoes_ids() {
        let service = service_with_engine();
        let (line, _) = perfect_request(7);
        let reply: serde_json::Value =
            serde_json::from_str(&service.handle_line(&line)).unwrap();
        assert_eq!(reply["id"], 7);
        assert_eq!(reply["breakdown"]["r_form"], 1.0);
        assert_eq!(reply["breakdown"]["r_reason"], 1.0);
        assert!(reply.get("weights_step").is_none());
        assert!(reply.get("error").is_none());
    }

    #[test]
    fn service_reply_matches_direct_scoring() {
        let service = service_with_engine();
        let (line, trace) = perfect_request(1);
        let reply: serde_json::Value =
            serde_json::from_str(&service.handle_line(&line)).unwrap();

        let mut engine = MockEngine::new();
        let record =
            crate::oracle::EngineBackend::analyze(&mut engine, crate::chess::START_FEN, 4, 5)
                .unwrap();
        let direct = score_trace(
            &parse_trace(&trace),
            &record,
            &vec![1.0 / K as f64; K],
            &ScoreConfig::default(),
        )
        .unwrap();
        assert_eq!(reply["breakdown"], serde_json::to_value(&direct).unwrap());
    }

    #[test]
    fn bad_lines_get_error_replies_not_crashes() {
        let service = service_with_engine();

        let reply: serde_json::Value =
            serde_json::from_str(&service.handle_line("this is not json")).unwrap();
        assert!(reply["id"].is_null());
        assert!(reply["error"].as_str().unwrap().contains("malformed"));

        let reply: serde_json::Value = serde_json::from_str(
            &service.handle_line(r#"{"id": 3, "trace": "<think></think>"}"#),
        )
        .unwrap();
        assert_eq!(reply["id"], 3);
        assert!(reply["error"].as_str().unwrap().contains("fen"));

        // Stateless services reject batch markers.
        let reply: serde_json::Value =
            serde_json::from_str(&service.handle_line(r#"{"batch_end": true}"#)).unwrap();
        assert!(reply["error"].as_str().unwrap().contains("session"));

        // Offline store without the position: error reply, id preserved.
        let offline = ScoreService::new(
            Oracle::new(AnalysisStore::in_memory()),
            ScoreConfig::default(),
            4,
            5,
        );
        let (line, _) = perfect_request(9);
        let reply: serde_json::Value =
            serde_json::from_str(&offline.handle_line(&line)).unwrap();
        assert_eq!(reply["id"], 9);
        assert!(reply["error"].as_str().unwrap().contains("position unavailable"));
    }

    #[test]
    fn session_updates_weights_at_batch_markers() {
        let state = WeightState::init(K, SchedulerParams { alpha: 0.2, ..Default::default() })
            .unwrap();
        let service = service_with_engine().with_session(state);

        let (line, _) = perfect_request(1);
        let first: serde_json::Value =
            serde_json::from_str(&service.handle_line(&line)).unwrap();
        assert_eq!(first["weights_step"], 0);

        let marker: serde_json::Value =
            serde_json::from_str(&service.handle_line(r#"{"batch_end": true}"#)).unwrap();
        assert_eq!(marker["batch_end"], true);
        assert_eq!(marker["weights_step"], 1);
        assert_eq!(marker["weights"].as_array().unwrap().len(), K);

        let second: serde_json::Value =
            serde_json::from_str(&service.handle_line(&line)).unwrap();
        assert_eq!(second["weights_step"], 1);
        // Perfect rewards shrink headroom everywhere they applied, so the
        // mu vector moved off the prior.
        let mu: Vec<f64> = serde_json::from_value(marker["mu"].clone()).unwrap();
        assert!(mu.iter().any(|m| (m - 0.5).abs() > 1e-9));
    }

    #[test]
    fn tcp_round_trip_serves_concurrent_clients() {
        use std::io::{BufRead, BufReader, Write};
        use std::net::TcpStream;

        let service = Arc::new(service_with_engine());
        let listener = bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        {
            let service = Arc::clone(&service);
            std::thread::spawn(move || serve_tcp(service, listener, 8));
        }

        let handles: Vec<_> = (0..4u32)
            .map(|i| {
                std::thread::spawn(move || {
                    let mut stream = TcpStream::connect(addr).unwrap();
                    let (line, _) = perfect_request(i);
                    stream.write_all(line.as_bytes()).unwrap();
                    stream.write_all(b"\n").unwrap();
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut reply = String::new();
                    reader.read_line(&mut reply).unwrap();
                    let v: serde_json::Value = serde_json::from_str(&reply).unwrap();
                    assert_eq!(v["id"], i);
                    assert_eq!(v["breakdown"]["r_form"], 1.0);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn serve_lines_replies_per_line_and_skips_blanks() {
        let service = service_with_engine();
        let (line, _) = perfect_request(5);
        let input = format!("{line}\n\nnot json\n");
        let mut out = Vec::new();
        serve_lines(&service, input.as_bytes(), &mut out).unwrap();
        let replies: Vec<serde_json::Value> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(replies.len(), 2);
        assert_eq!(replies[0]["id"], 5);
        assert!(replies[1]["error"].is_string());
    }
}
