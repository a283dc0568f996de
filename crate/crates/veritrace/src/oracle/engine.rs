//! Engine backends that produce [`AnalysisRecord`]s: a UCI child-process
//! client for real engines and a deterministic mock for tests, examples,
//! and offline runs.

use super::{AnalysisRecord, ScoredMove};
use crate::chess::{Color, Piece, Position};
use crate::trace::MAX_PV_PLIES;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no engine configured and the store has no matching record")]
    NoEngine,
    #[error("cannot analyze {fen:?}: {reason}")]
    BadPosition { fen: String, reason: String },
    #[error("engine io: {0}")]
    Io(#[from] std::io::Error),
    #[error("engine protocol: {0}")]
    Protocol(String),
    #[error("engine did not answer within {0:?}")]
    Timeout(Duration),
}

/// Anything that can turn a position into a multipv analysis record.
pub trait EngineBackend: Send {
    fn analyze(
        &mut self,
        fen: &str,
        depth: u32,
        multipv: u32,
    ) -> Result<AnalysisRecord, EngineError>;

    fn name(&self) -> &str;
}

// ---------------------------------------------------------------------
// UCI child-process client
// ---------------------------------------------------------------------

/// Client for a UCI engine running as a child process. One search at a
/// time; stdout is drained by a reader thread so slow parsing never blocks
/// the engine.
pub struct UciEngine {
    child: Child,
    stdin: std::process::ChildStdin,
    lines: Receiver<String>,
    name: String,
    timeout: Duration,
    multipv: Option<u32>,
}

impl UciEngine {
    pub fn spawn(program: &str, args: &[String]) -> Result<UciEngine, EngineError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(line) => {
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut engine = UciEngine {
            child,
            stdin,
            lines: rx,
            name: program.to_string(),
            timeout: Duration::from_secs(120),
            multipv: None,
        };
        engine.send("uci")?;
        let deadline = Instant::now() + engine.timeout;
        loop {
            let line = engine.recv_until(deadline)?;
            if let Some(rest) = line.strip_prefix("id name ") {
                engine.name = rest.trim().to_string();
            }
            if line.trim() == "uciok" {
                break;
            }
        }
        Ok(engine)
    }

    /// Cap on how long one search (or handshake) may take.
    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    fn send(&mut self, command: &str) -> Result<(), EngineError> {
        writeln!(self.stdin, "{command}")?;
        self.stdin.flush()?;
        Ok(())
    }

    fn recv_until(&self, deadline: Instant) -> Result<String, EngineError> {
        let now = Instant::now();
        let left = deadline.saturating_duration_since(now);
        if left.is_zero() {
            return Err(EngineError::Timeout(self.timeout));
        }
        match self.lines.recv_timeout(left) {
            Ok(line) => Ok(line),
            Err(RecvTimeoutError::Timeout) => Err(EngineError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(EngineError::Protocol("engine closed its stdout".into()))
            }
        }
    }

    fn sync(&mut self) -> Result<(), EngineError> {
        self.send("isready")?;
        let deadline = Instant::now() + self.timeout;
        loop {
            if self.recv_until(deadline)?.trim() == "readyok" {
                return Ok(());
            }
        }
    }
}

impl Drop for UciEngine {
    fn drop(&mut self) {
        let _ = self.send("quit");
        std::thread::sleep(Duration::from_millis(50));
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One parsed `info` line that carries a scored pv.
struct InfoLine {
    depth: u32,
    multipv: u32,
    cp: Option<i32>,
    mate: Option<i32>,
    pv_uci: Vec<String>,
}

fn parse_info_line(line: &str) -> Option<InfoLine> {
    let mut tokens = line.split_whitespace().peekable();
    if tokens.next()? != "info" {
        return None;
    }
    let mut info = InfoLine {
        depth: 0,
        multipv: 1,
        cp: None,
        mate: None,
        pv_uci: Vec::new(),
    };
    while let Some(tok) = tokens.next() {
        match tok {
            "depth" => info.depth = tokens.next()?.parse().ok()?,
            "multipv" => info.multipv = tokens.next()?.parse().ok()?,
            "score" => match tokens.next()? {
                "cp" => info.cp = Some(tokens.next()?.parse().ok()?),
                "mate" => info.mate = Some(tokens.next()?.parse().ok()?),
                _ => return None,
            },
            "pv" => {
                info.pv_uci = tokens.map(str::to_string).collect();
                break;
            }
            _ => {}
        }
    }
    if info.pv_uci.is_empty() || (info.cp.is_none() && info.mate.is_none()) {
        return None;
    }
    Some(info)
}

/// Replay a UCI move list from `pos`, converting to SAN until a move fails
/// to resolve. Returns the SAN prefix, capped at [`MAX_PV_PLIES`].
pub(crate) fn uci_line_to_san(pos: &Position, uci_moves: &[String]) -> Vec<String> {
    let mut sans = Vec::new();
    let mut cur = pos.clone();
    for uci in uci_moves.iter().take(MAX_PV_PLIES) {
        match cur.move_from_uci(uci) {
            Ok(m) => {
                sans.push(cur.san(&m));
                cur = cur.apply(&m);
            }
            Err(_) => break,
        }
    }
    sans
}

impl EngineBackend for UciEngine {
    fn analyze(
        &mut self,
        fen: &str,
        depth: u32,
        multipv: u32,
    ) -> Result<AnalysisRecord, EngineError> {
        let pos = Position::from_fen_lenient(fen).map_err(|e| EngineError::BadPosition {
            fen: fen.into(),
            reason: e.to_string(),
        })?;
        let fen = pos.fen();
        if self.multipv != Some(multipv) {
            self.send(&format!("setoption name MultiPV value {multipv}"))?;
            self.multipv = Some(multipv);
        }
        self.sync()?;
        self.send(&format!("position fen {fen}"))?;
        self.send(&format!("go depth {depth}"))?;

        // Later info lines supersede earlier ones per multipv slot.
        let mut slots: Vec<Option<InfoLine>> = Vec::new();
        let deadline = Instant::now() + self.timeout;
        loop {
            let line = self.recv_until(deadline)?;
            if line.starts_with("bestmove") {
                break;
            }
            if let Some(info) = parse_info_line(&line) {
                let idx = info.multipv as usize - 1;
                if slots.len() <= idx {
                    slots.resize_with(idx + 1, || None);
                }
                let newer = slots[idx]
                    .as_ref()
                    .is_none_or(|old| info.depth >= old.depth);
                if newer {
                    slots[idx] = Some(info);
                }
            }
        }

        let mut moves = Vec::new();
        for info in slots.into_iter().flatten() {
            let pv = uci_line_to_san(&pos, &info.pv_uci);
            if pv.is_empty() {
                return Err(EngineError::Protocol(format!(
                    "pv starts with a move that is not legal in {fen}"
                )));
            }
            moves.push(ScoredMove {
                san: pv[0].clone(),
                cp: info.cp,
                mate: info.mate,
                pv,
            });
        }
        if moves.is_empty() {
            return Err(EngineError::Protocol(
                "search finished without any scored pv".into(),
            ));
        }
        let mut record = AnalysisRecord {
            fen,
            depth,
            moves,
            source: format!("engine:{}", self.name),
        };
        record.sort_moves();
        Ok(record)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

// ---------------------------------------------------------------------
// Deterministic mock engine
// ---------------------------------------------------------------------

const MATE: i32 = 100_000;
const MATE_BAND: i32 = MATE - 100;

fn material(piece: Piece) -> i32 {
    match piece {
        Piece::Pawn => 100,
        Piece::Knight | Piece::Bishop => 300,
        Piece::Rook => 500,
        Piece::Queen => 900,
        Piece::King => 0,
    }
}

/// Static evaluation from the side to move's perspective: material plus a
/// small centralization and pawn-advancement bonus. Integer-only, so the
/// mock is bit-identical everywhere.
fn eval(pos: &Position) -> i32 {
    let mut score = 0;
    for sq in crate::chess::Square::all() {
        let Some((color, piece)) = pos.piece_at(sq) else {
            continue;
        };
        let df = (2 * sq.file() as i32 - 7).abs() / 2;
        let dr = (2 * sq.rank() as i32 - 7).abs() / 2;
        let positional = match piece {
            Piece::King => 0,
            Piece::Pawn => {
                let progress = match color {
                    Color::White => sq.rank() as i32 - 1,
                    Color::Black => 6 - sq.rank() as i32,
                };
                2 * progress
            }
            _ => 6 - (df + dr),
        };
        let value = material(piece) + positional;
        score += if color == pos.side_to_move() { value } else { -value };
    }
    score
}

fn negamax(pos: &Position, depth: u32, ply: i32) -> i32 {
    if depth == 0 {
        if pos.is_checkmate() {
            return -(MATE - ply);
        }
        if pos.is_stalemate() {
            return 0;
        }
        return eval(pos);
    }
    let mut best = i32::MIN;
    pos.for_each_child(|child| {
        best = best.max(-negamax(child, depth - 1, ply + 1));
    });
    if best == i32::MIN {
        return if pos.in_check() { -(MATE - ply) } else { 0 };
    }
    best
}

/// Greedy continuation after a root move: at each ply pick the reply with
/// the best immediate evaluation, ties broken by lowest long-algebraic
/// spelling. Deterministic and cheap.
fn greedy_pv(first_san: String, mut pos: Position) -> Vec<String> {
    let mut pv = vec![first_san];
    while pv.len() < MAX_PV_PLIES {
        let mut choice: Option<(i32, String, crate::chess::Move)> = None;
        for m in pos.legal_moves() {
            let child = pos.apply(&m);
            let score = if child.is_checkmate() {
                MATE
            } else if child.is_stalemate() {
                0
            } else {
                -eval(&child)
            };
            let uci = m.uci();
            let better = match &choice {
                None => true,
                Some((best, best_uci, _)) => {
                    score > *best || (score == *best && uci < *best_uci)
                }
            };
            if better {
                choice = Some((score, uci, m));
            }
        }
        let Some((_, _, m)) = choice else { break };
        pv.push(pos.san(&m));
        pos = pos.apply(&m);
    }
    pv
}

/// Deterministic stand-in for a real engine: material-and-centralization
/// evaluation behind a fixed three-ply search, greedy continuations for
/// pvs, and immediate forced mates reported as mate scores. The record is
/// stamped with the requested depth so store cache checks behave exactly
/// as they would with a real engine.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockEngine;

impl MockEngine {
    pub fn new() -> MockEngine {
        MockEngine
    }
}

impl EngineBackend for MockEngine {
    fn analyze(
        &mut self,
        fen: &str,
        depth: u32,
        multipv: u32,
    ) -> Result<AnalysisRecord, EngineError> {
        let pos = Position::from_fen_lenient(fen).map_err(|e| EngineError::BadPosition {
            fen: fen.into(),
            reason: e.to_string(),
        })?;
        let legal = pos.legal_moves();
        if legal.is_empty() {
            return Err(EngineError::BadPosition {
                fen: pos.fen(),
                reason: "no legal moves to score".into(),
            });
        }
        let mut moves = Vec::with_capacity(legal.len());
        for m in &legal {
            let child = pos.apply(m);
            let san = pos.san(m);
            let score = -negamax(&child, 2, 1);
            let (cp, mate) = if score >= MATE_BAND {
                (None, Some((MATE - score + 1) / 2))
            } else if score <= -MATE_BAND {
                (None, Some(-((MATE + score) / 2)))
            } else {
                (Some(score), None)
            };
            let pv = if child.is_checkmate() {
                vec![san.clone()]
            } else {
                greedy_pv(san.clone(), child)
            };
            moves.push(ScoredMove { san, cp, mate, pv });
        }
        let mut record = AnalysisRecord {
            fen: pos.fen(),
            depth,
            moves,
            source: "mock".into(),
        };
        record.sort_moves();
        record.moves.truncate(multipv.max(1) as usize);
        Ok(record)
    }

    fn name(&self) -> &str {
        "mock"
    }
}

/// Write a tiny shell script that speaks just enough UCI for tests: fixed
/// analysis of the start position. Returns the script path.
pub fn fake_engine_script(dir: &std::path::Path) -> std::io::Result<std::path::PathBuf> {
    let path = dir.join("fake_engine.sh");
    let script = "#!/bin/sh\n\
        while read line; do\n\
          case \"$line\" in\n\
            uci) echo 'id name fakefish 0.1'; echo 'uciok';;\n\
            isready) echo 'readyok';;\n\
            go*)\n\
              echo 'info depth 6 multipv 1 score cp 20 pv e2e4 e7e5 g1f3'\n\
              echo 'info depth 8 multipv 1 score cp 31 pv e2e4 c7c5 g1f3 d7d6'\n\
              echo 'info depth 8 multipv 2 score cp 22 pv d2d4 d7d5 c2c4'\n\
              echo 'bestmove e2e4'\n\
              ;;\n\
            quit) exit 0;;\n\
          esac\n\
        done\n";
    std::fs::write(&path, script)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755))?;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::START_FEN;

    #[test]
    fn mock_engine_is_deterministic_and_sorted() {
        let mut engine = MockEngine::new();
        let a = engine.analyze(START_FEN, 12, 5).unwrap();
        let b = engine.analyze(START_FEN, 12, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.depth, 12);
        assert_eq!(a.moves.len(), 5);
        for w in a.moves.windows(2) {
            assert!(w[0].win_rate() >= w[1].win_rate());
        }
        for m in &a.moves {
            assert!(!m.pv.is_empty());
            assert_eq!(m.pv[0], m.san);
            assert!(m.pv.len() <= MAX_PV_PLIES);
        }
    }

    #[test]
    fn mock_engine_reports_immediate_mate() {
        // White mates with Qxf7#.
        let fen = "r1bqkbnr/pppp1ppp/2n5/4p2Q/2B1P3/8/PPPP1PPP/RNB1K1NR w KQkq - 4 4";
        let mut engine = MockEngine::new();
        let record = engine.analyze(fen, 10, 40).unwrap();
        let best = record.best().unwrap();
        assert_eq!(best.san, "Qxf7#");
        assert_eq!(best.mate, Some(1));
        assert_eq!(best.win_rate(), 100.0);
        assert!(record.has_mate());
    }

    #[test]
    fn mock_engine_sees_hanging_material() {
        // Black queen on d5 is free to take with the c4 bishop.
        let fen = "rnb1kbnr/ppp1pppp/8/3q4/2B5/8/PPPP1PPP/RNBQK1NR w KQkq - 0 3";
        let mut engine = MockEngine::new();
        let record = engine.analyze(fen, 10, 3).unwrap();
        assert_eq!(record.best().unwrap().san, "Bxd5");
        assert!(record.best().unwrap().cp.unwrap() > 700);
    }

    #[test]
    fn info_line_parser_handles_real_output() {
        let info = parse_info_line(
            "info depth 24 seldepth 31 multipv 2 score cp -37 nodes 182 nps 9 \
             hashfull 12 tbhits 0 time 20 pv e7e5 g1f3 b8c6",
        )
        .unwrap();
        assert_eq!(info.depth, 24);
        assert_eq!(info.multipv, 2);
        assert_eq!(info.cp, Some(-37));
        assert_eq!(info.pv_uci, vec!["e7e5", "g1f3", "b8c6"]);
        let mate = parse_info_line("info depth 12 score mate -3 pv h7h8q").unwrap();
        assert_eq!(mate.mate, Some(-3));
        assert_eq!(mate.multipv, 1);
        assert!(parse_info_line("info depth 12 currmove e2e4").is_none());
        assert!(parse_info_line("bestmove e2e4").is_none());
    }

    #[test]
    #[cfg(unix)]
    fn uci_client_against_fake_engine() {
        let dir = tempfile::tempdir().unwrap();
        let script = fake_engine_script(dir.path()).unwrap();
        let mut engine = UciEngine::spawn(script.to_str().unwrap(), &[]).unwrap();
        engine.set_timeout(Duration::from_secs(10));
        assert_eq!(engine.name(), "fakefish 0.1");
        let record = engine.analyze(START_FEN, 8, 2).unwrap();
        assert_eq!(record.depth, 8);
        assert_eq!(record.moves.len(), 2);
        // The deeper multipv-1 line supersedes the shallow one.
        assert_eq!(record.moves[0].san, "e4");
        assert_eq!(record.moves[0].cp, Some(31));
        assert_eq!(record.moves[0].pv, vec!["e4", "c5", "Nf3", "d6"]);
        assert_eq!(record.moves[1].san, "d4");
        assert_eq!(record.source, "engine:fakefish 0.1");
    }
}
