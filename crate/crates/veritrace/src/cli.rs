//! Command-line surface. All behavior lives in the library modules; this
//! one parses flags, loads configuration, opens stores and engines, and
//! maps failures to stable exit codes for automation: 0 success, 1 usage,
//! 2 data error, 3 engine error.
//!
//! Every value in the config file can be overridden by a flag; precedence
//! is flag, then file, then built-in default.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::config::Config;
use crate::metrics::{aggregate, evaluate_sample, render_table};
use crate::oracle::{
    ingest_eval_db, ingest_puzzle_csv, write_samples, AnalysisStore, EngineError, IngestStats,
    MockEngine, Oracle, PositionSample, Split, SplitFractions, UciEngine,
};
use crate::rewards::{ScoreConfig, K};
use crate::scheduler::WeightState;
use crate::service::{serve_lines, serve_tcp, RequestError, ScoreService};
use crate::sim::{train_loop, Granularity, MockPolicy, TrainConfig, WeightMode};
use crate::synth::generate_corpus;
use crate::trace::parse_trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ENGINE: i32 = 3;

/// A command failure carrying its exit class. Usage errors never reach
/// here; clap reports those.
#[derive(Debug)]
enum CliError {
    Data(String),
    Engine(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Engine(_) => EXIT_ENGINE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Engine(m) => m,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

/// Engine failures split by class: a missing record with no engine is a
/// data problem; a live engine misbehaving is an engine problem.
fn classify_engine(e: EngineError) -> CliError {
    match e {
        EngineError::NoEngine => CliError::Data(e.to_string()),
        other => CliError::Engine(other.to_string()),
    }
}

fn classify_request(e: RequestError) -> CliError {
    match e {
        RequestError::Position(inner) => classify_engine(inner),
        RequestError::Score(inner) => CliError::Data(inner.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "veritrace",
    version,
    about = "Verify, score, and evaluate structured chess reasoning traces"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load evaluation databases or puzzle CSVs into the analysis store.
    Ingest(IngestArgs),
    /// Emit a supervised fine-tuning corpus of verified traces.
    GenSft(GenSftArgs),
    /// Score traces into reward breakdowns, one JSON object per line.
    Score(ScoreArgs),
    /// Compute the accuracy and reasoning metrics report over traces.
    Eval(EvalArgs),
    /// Run the mock-policy training simulation.
    Simulate(SimulateArgs),
    /// Serve the line-JSON scoring protocol over stdio or TCP.
    Serve(ServeArgs),
}

/// Store and engine flags shared by every command that resolves positions.
#[derive(Args)]
struct BackendArgs {
    /// Analysis store path (JSONL; created when missing).
    #[arg(long, value_name = "PATH")]
    store: Option<PathBuf>,
    /// UCI engine executable for positions the store cannot answer.
    #[arg(long, value_name = "PATH")]
    engine: Option<PathBuf>,
    /// Use the built-in deterministic engine instead of a UCI process.
    #[arg(long)]
    mock_engine: bool,
    /// Search depth for fresh analyses.
    #[arg(long)]
    depth: Option<u32>,
    /// Moves requested per analysis (multipv).
    #[arg(long)]
    multipv: Option<u32>,
}

/// Which depth a command asks of the engine when the store misses.
enum DepthUse {
    Train,
    Eval,
}

struct Backend {
    oracle: Oracle,
    depth: u32,
    multipv: u32,
}

fn open_backend(cfg: &Config, args: &BackendArgs, depth_use: DepthUse) -> Result<Backend, CliError> {
    let path = args.store.clone().unwrap_or_else(|| cfg.store.path.clone());
    let store = AnalysisStore::open(&path).map_err(data_err)?;
    let engine_path = args.engine.clone().or_else(|| cfg.engine.path.clone());
    let oracle = if args.mock_engine || cfg.engine.mock {
        Oracle::with_engine(store, Box::new(MockEngine::new()))
    } else if let Some(program) = engine_path {
        let engine =
            UciEngine::spawn(&program.to_string_lossy(), &[]).map_err(classify_engine)?;
        Oracle::with_engine(store, Box::new(engine))
    } else {
        Oracle::new(store)
    };
    let depth = args.depth.unwrap_or(match depth_use {
        DepthUse::Train => cfg.engine.train_depth,
        DepthUse::Eval => cfg.engine.eval_depth,
    });
    let multipv = args.multipv.unwrap_or(cfg.engine.multipv);
    Ok(Backend {
        oracle,
        depth,
        multipv,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IngestKind {
    /// JSONL evaluation database (native or Lichess shape).
    EvalDb,
    /// Tactics puzzle CSV (PuzzleId, FEN, Moves columns).
    Puzzles,
}

#[derive(Args)]
struct IngestArgs {
    /// Input files.
    #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
    input: Vec<PathBuf>,
    /// Input format.
    #[arg(long, value_enum)]
    kind: IngestKind,
    #[command(flatten)]
    backend: BackendArgs,
    /// Train,val,test fractions for split assignment.
    #[arg(long, default_value = "0.9,0.05,0.05", value_parser = parse_fractions)]
    split: SplitFractions,
    /// Split-assignment seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Split manifest output (default: <store>.samples.jsonl).
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Analyze every sample the store cannot answer yet (needs an engine).
    #[arg(long)]
    backfill: bool,
    /// Stop after this many ingested eval-db records per file.
    #[arg(long)]
    limit: Option<usize>,
}

fn parse_fractions(text: &str) -> Result<SplitFractions, String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let (train, val, test) = match parts.as_slice() {
        [t, v] => (*t, *v, 1.0 - t - v),
        [t, v, rest] => (*t, *v, *rest),
        _ => return Err("expected train,val[,test] fractions".into()),
    };
    if train < 0.0 || val < 0.0 || test < -1e-9 || (train + val + test - 1.0).abs() > 1e-9 {
        return Err(format!("fractions must be non-negative and sum to 1, got {text}"));
    }
    Ok(SplitFractions { train, val })
}

#[derive(Args)]
struct GenSftArgs {
    #[command(flatten)]
    backend: BackendArgs,
    /// Restrict positions to one split of this samples manifest.
    #[arg(long, value_name = "PATH")]
    samples: Option<PathBuf>,
    /// Split drawn from the manifest.
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    split: SplitArg,
    /// Records to emit.
    #[arg(long)]
    n: usize,
    /// Candidates analyzed per trace.
    #[arg(long)]
    k: Option<usize>,
    /// Position-sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output corpus (NDJSON of {fen, prompt, trace}).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

impl SplitArg {
    fn admits(self, split: Split) -> bool {
        match self {
            SplitArg::Train => split == Split::Train,
            SplitArg::Val => split == Split::Val,
            SplitArg::Test => split == Split::Test,
            SplitArg::All => true,
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// NDJSON traces: one {fen, trace} object per line.
    #[arg(long, value_name = "PATH")]
    traces: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    /// Scheduler snapshot JSON supplying subtask weights (default uniform).
    #[arg(long, value_name = "PATH")]
    weights: Option<PathBuf>,
    /// Reasoning-reward coefficient λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Breakdown output, one JSON object per input line (default stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// NDJSON traces: one {fen, trace} object per line.
    #[arg(long, value_name = "PATH")]
    traces: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    /// Coverage denominator: engine top-k (default: multipv).
    #[arg(long)]
    k_cov: Option<usize>,
    /// Also write the report as JSON here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    backend: BackendArgs,
    /// Optimization steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Traces per step.
    #[arg(long)]
    batch: Option<usize>,
    /// Candidates per trace.
    #[arg(long)]
    candidates: Option<usize>,
    /// Policy seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Policy learning rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Weighting mode to run.
    #[arg(long, value_enum, default_value_t = ModeArg::Adaptive)]
    mode: ModeArg,
    /// Scheduler update granularity.
    #[arg(long, value_enum)]
    granularity: Option<GranularityArg>,
    /// Trajectory CSV path; --mode both derives .fixed/.adaptive names.
    #[arg(long, value_name = "PATH")]
    trajectory: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Fixed,
    Adaptive,
    /// Paired fixed and adaptive runs from the same seed.
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GranularityArg {
    PerBatch,
    PerSample,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Granularity {
        match g {
            GranularityArg::PerBatch => Granularity::PerBatch,
            GranularityArg::PerSample => Granularity::PerSample,
        }
    }
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    backend: BackendArgs,
    /// TCP bind address (host:port); omitted means stdio.
    #[arg(long, value_name = "ADDR")]
    bind: Option<String>,
    /// Keep a live scheduler: accumulate rewards, update at batch markers.
    #[arg(long)]
    session: bool,
    /// Scheduler snapshot to score under (fixed, or session starting point).
    #[arg(long, value_name = "PATH")]
    weights: Option<PathBuf>,
    /// Concurrent TCP connection cap.
    #[arg(long)]
    max_connections: Option<usize>,
}

/// Run the CLI against explicit arguments; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(&config, args),
        Command::GenSft(args) => cmd_gen_sft(&config, args),
        Command::Score(args) => cmd_score(&config, args),
        Command::Eval(args) => cmd_eval(&config, args),
        Command::Simulate(args) => cmd_simulate(&config, args),
        Command::Serve(args) => cmd_serve(&config, args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

/// Run the CLI against the process arguments.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn open_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Writer for an optional output path, stdout when absent.
fn out_or_stdout(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => Ok(Box::new(open_output(p)?)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn cmd_ingest(cfg: &Config, args: IngestArgs) -> Result<(), CliError> {
    let backend = open_backend(cfg, &args.backend, DepthUse::Train)?;
    let store = backend.oracle.store();
    let mut samples: Vec<PositionSample> = Vec::new();
    let mut totals = IngestStats::default();
    for path in &args.input {
        let stats = match args.kind {
            IngestKind::EvalDb => {
                let before: std::collections::HashSet<String> =
                    store.keys().into_iter().collect();
                let stats =
                    ingest_eval_db(open_input(path)?, store, args.limit).map_err(data_err)?;
                // The manifest entry for an eval-db position is the stored
                // record's own FEN, split-assigned like any other sample.
                for record in store.records() {
                    let key = crate::oracle::canonical_fen_key(&record.fen);
                    if !before.contains(&key) {
                        samples.push(PositionSample {
                            fen: record.fen.clone(),
                            best: None,
                            split: crate::oracle::assign_split(&key, args.seed, args.split),
                            source: record.source.clone(),
                        });
                    }
                }
                stats
            }
            IngestKind::Puzzles => {
                let (mut found, stats) =
                    ingest_puzzle_csv(open_input(path)?, args.seed, args.split)
                        .map_err(data_err)?;
                samples.append(&mut found);
                stats
            }
        };
        println!(
            "{}: read {} ingested {} samples {} skipped {}",
            path.display(),
            stats.read,
            stats.ingested,
            stats.samples,
            stats.skipped
        );
        totals.read += stats.read;
        totals.ingested += stats.ingested;
        totals.samples += stats.samples;
        totals.skipped += stats.skipped;
    }
    // Eval-db sample counts come from the manifest diff, not the reader.
    if args.kind == IngestKind::EvalDb {
        totals.samples = samples.len();
    }
    if args.backfill {
        for sample in &samples {
            backend
                .oracle
                .resolve(&sample.fen, backend.depth, backend.multipv)
                .map_err(classify_engine)?;
        }
    }
    let manifest = args.manifest.clone().unwrap_or_else(|| {
        let store_path = args
            .backend
            .store
            .clone()
            .unwrap_or_else(|| cfg.store.path.clone());
        store_path.with_extension("samples.jsonl")
    });
    write_samples(open_output(&manifest)?, &samples).map_err(data_err)?;
    let by_split = |s: Split| samples.iter().filter(|x| x.split == s).count();
    println!(
        "total: read {} ingested {} samples {} skipped {} | splits train {} val {} test {} | store {} records, {} positions | manifest {}",
        totals.read,
        totals.ingested,
        totals.samples,
        totals.skipped,
        by_split(Split::Train),
        by_split(Split::Val),
        by_split(Split::Test),
        store.len(),
        store.position_count(),
        manifest.display()
    );
    Ok(())
}

fn cmd_gen_sft(cfg: &Config, args: GenSftArgs) -> Result<(), CliError> {
    let backend = open_backend(cfg, &args.backend, DepthUse::Train)?;
    let mut pool: Vec<PositionSample> = match &args.samples {
        Some(path) => crate::oracle::read_samples(open_input(path)?)
            .map_err(data_err)?
            .into_iter()
            .filter(|s| args.split.admits(s.split))
            .collect(),
        // No manifest: every stored position, in stable store order.
        None => backend
            .oracle
            .store()
            .records()
            .into_iter()
            .map(|r| PositionSample {
                fen: r.fen,
                best: None,
                split: Split::Train,
                source: r.source,
            })
            .collect(),
    };
    if pool.len() < args.n {
        return Err(CliError::Data(format!(
            "need {} positions but only {} available",
            args.n,
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    pool.shuffle(&mut rng);
    pool.truncate(args.n);
    let k = args.k.unwrap_or(cfg.sim.candidates);
    // A trace needs k scored moves, so k is the analysis width unless the
    // flag asks for more; the config-wide multipv would reject stored
    // records that are plenty deep but narrower than an engine default.
    let multipv = args.backend.multipv.unwrap_or(k as u32);
    let mut out = open_output(&args.out)?;
    let stats = generate_corpus(
        &backend.oracle,
        &pool,
        k,
        backend.depth,
        multipv,
        &mut out,
    )
    .map_err(data_err)?;
    out.flush().map_err(data_err)?;
    if stats.written < args.n {
        return Err(CliError::Data(format!(
            "only {} of {} positions produced traces ({} skipped)",
            stats.written, args.n, stats.skipped
        )));
    }
    println!("wrote {} records to {}", stats.written, args.out.display());
    Ok(())
}

/// One line of a traces file. Extra fields (prompt, id) are ignored so
/// gen-sft output feeds straight into score and eval.
#[derive(Deserialize)]
struct TraceLine {
    fen: String,
    trace: String,
}

fn read_trace_line(line: &str, lineno: usize) -> Result<TraceLine, CliError> {
    serde_json::from_str(line)
        .map_err(|e| CliError::Data(format!("traces line {lineno}: {e}")))
}

fn load_weights(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let state = WeightState::from_json(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if state.k() != K {
        return Err(CliError::Data(format!(
            "{}: snapshot tracks {} subtasks, expected {K}",
            path.display(),
            state.k()
        )));
    }
    Ok(state.weights().to_vec())
}

fn cmd_score(cfg: &Config, args: ScoreArgs) -> Result<(), CliError> {
    let backend = open_backend(cfg, &args.backend, DepthUse::Eval)?;
    let score = ScoreConfig {
        lambda: args.lambda.unwrap_or(cfg.reward.lambda),
        ..cfg.reward
    };
    let mut service =
        ScoreService::new(backend.oracle, score, backend.depth, backend.multipv);
    if let Some(path) = &args.weights {
        service = service.with_weights(load_weights(path)?);
    }
    let mut out = out_or_stdout(args.out.as_deref())?;
    for (i, line) in open_input(&args.traces)?.lines().enumerate() {
        let line = line.map_err(data_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let request = read_trace_line(&line, i + 1)?;
        let (breakdown, _) = service
            .score_one(&request.fen, &request.trace)
            .map_err(classify_request)?;
        serde_json::to_writer(&mut out, &breakdown).map_err(data_err)?;
        out.write_all(b"\n").map_err(data_err)?;
    }
    out.flush().map_err(data_err)?;
    Ok(())
}

fn cmd_eval(cfg: &Config, args: EvalArgs) -> Result<(), CliError> {
    let backend = open_backend(cfg, &args.backend, DepthUse::Eval)?;
    let k_cov = args.k_cov.unwrap_or(backend.multipv as usize);
    let mut evaluations = Vec::new();
    for (i, line) in open_input(&args.traces)?.lines().enumerate() {
        let line = line.map_err(data_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let request = read_trace_line(&line, i + 1)?;
        let record = match backend.oracle.lookup(&request.fen) {
            Some(r) => r,
            None => backend
                .oracle
                .resolve(&request.fen, backend.depth, backend.multipv)
                .map_err(classify_engine)?,
        };
        let trace = parse_trace(&request.trace);
        evaluations.push(evaluate_sample(&trace, &record, k_cov).map_err(data_err)?);
    }
    let report = aggregate(&evaluations).map_err(data_err)?;
    println!("{}", render_table(&report));
    if let Some(path) = &args.out {
        let mut out = open_output(path)?;
        serde_json::to_writer_pretty(&mut out, &report).map_err(data_err)?;
        out.write_all(b"\n").map_err(data_err)?;
        out.flush().map_err(data_err)?;
    }
    Ok(())
}

/// Simulation data: the configured store when it has records, otherwise a
/// synthetic corpus analyzed by the built-in engine so the command works
/// in an empty checkout.
fn simulation_data(backend: &Backend) -> Result<Vec<crate::oracle::AnalysisRecord>, CliError> {
    let records = backend.oracle.store().records();
    if !records.is_empty() {
        return Ok(records);
    }
    let oracle = Oracle::with_engine(AnalysisStore::in_memory(), Box::new(MockEngine::new()));
    crate::oracle::synthetic_corpus(50, 7)
        .iter()
        .map(|fen| {
            oracle
                .resolve(fen, 4, backend.multipv)
                .map_err(classify_engine)
        })
        .collect()
}

fn cmd_simulate(cfg: &Config, args: SimulateArgs) -> Result<(), CliError> {
    let backend = open_backend(cfg, &args.backend, DepthUse::Train)?;
    let data = simulation_data(&backend)?;
    let train = TrainConfig {
        steps: args.steps.unwrap_or(cfg.sim.steps),
        batch: args.batch.unwrap_or(cfg.sim.batch),
        k: args.candidates.unwrap_or(cfg.sim.candidates),
        mode: WeightMode::Adaptive,
        granularity: args
            .granularity
            .map(Granularity::from)
            .unwrap_or(cfg.sim.granularity),
        score: cfg.reward,
    };
    let seed = args.seed.unwrap_or(cfg.sim.seed);
    let eta = args.eta.unwrap_or(cfg.sim.eta);
    let modes: &[WeightMode] = match args.mode {
        ModeArg::Fixed => &[WeightMode::Fixed],
        ModeArg::Adaptive => &[WeightMode::Adaptive],
        ModeArg::Both => &[WeightMode::Fixed, WeightMode::Adaptive],
    };
    for &mode in modes {
        let label = match mode {
            WeightMode::Fixed => "fixed",
            WeightMode::Adaptive => "adaptive",
        };
        let cfg_run = TrainConfig { mode, ..train.clone() };
        let mut policy = MockPolicy::new(seed).with_eta(eta);
        let mut state = WeightState::init(K, cfg.scheduler).map_err(data_err)?;
        let mut sink: Option<BufWriter<File>> = match &args.trajectory {
            Some(path) => {
                let path = if args.mode == ModeArg::Both {
                    path.with_extension(format!("{label}.csv"))
                } else {
                    path.clone()
                };
                Some(open_output(&path)?)
            }
            None => None,
        };
        let logs = train_loop(
            &mut policy,
            &data,
            &mut state,
            &cfg_run,
            sink.as_mut().map(|s| s as &mut dyn Write),
        )
        .map_err(data_err)?;
        if let Some(mut s) = sink {
            s.flush().map_err(data_err)?;
        }
        let last = logs.last().expect("at least one step");
        println!(
            "{label}: steps {} mean_total {:.4} weights [{}] mu [{}]",
            logs.len(),
            last.mean_total,
            join_fixed(&last.weights),
            join_fixed(&last.mu),
        );
    }
    Ok(())
}

fn join_fixed(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_serve(cfg: &Config, args: ServeArgs) -> Result<(), CliError> {
    let backend = open_backend(cfg, &args.backend, DepthUse::Eval)?;
    let mut service =
        ScoreService::new(backend.oracle, cfg.reward, backend.depth, backend.multipv);
    let snapshot = match &args.weights {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Some(WeightState::from_json(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    if args.session || cfg.service.session {
        let state = match snapshot {
            Some(s) => s,
            None => WeightState::init(K, cfg.scheduler).map_err(data_err)?,
        };
        service = service.with_session(state);
    } else if let Some(s) = snapshot {
        service = service.with_weights(s.weights().to_vec());
    }
    let bind = args.bind.clone().or_else(|| cfg.service.bind.clone());
    match bind {
        Some(addr) => {
            let listener = crate::service::bind(&*addr).map_err(data_err)?;
            let local = listener.local_addr().map_err(data_err)?;
            eprintln!("listening on {local}");
            let cap = args.max_connections.unwrap_or(cfg.service.max_connections);
            serve_tcp(Arc::new(service), listener, cap).map_err(data_err)
        }
        None => {
            let stdin = io::stdin().lock();
            let stdout = io::stdout().lock();
            serve_lines(&service, stdin, stdout).map_err(data_err)
        }
    }
}
