//! Synthetic end-to-end training loop: a mock policy with controllable
//! per-subtask competence emits traces, the verifier scores them, the
//! scheduler reweights, and competence grows in proportion to allocated
//! weight. This makes weighting dynamics observable at desk scale without
//! any model in the loop.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::chess::Position;
use crate::oracle::AnalysisRecord;
use crate::rewards::{score_trace, ScoreConfig, ScoreError, SubtaskId, K};
use crate::scheduler::{SchedulerError, TrajectoryWriter, WeightState};
use crate::synth::{generate_claims, GenError};
use crate::trace::{parse_trace, resolve_move_text, serialize_trace, CaptureClaim, MateClaim};

/// Synthetic policy: claim `k` is emitted correctly with probability
/// `competence[k]`; wrong numeric claims get truth plus Gaussian noise
/// scaled by `(1 - competence) * noise`, wrong binary claims flip, and a
/// wrong best-move pick names a non-argmax candidate.
#[derive(Clone, Debug)]
pub struct MockPolicy {
    pub competence: [f64; K],
    /// Competence gain per unit of allocated weight.
    pub eta: f64,
    /// Win-rate noise scale in percentage points.
    pub wr_noise: f64,
    /// Pawn-score noise scale in pawns.
    pub pawn_noise: f64,
    rng: ChaCha8Rng,
}

impl MockPolicy {
    pub fn new(seed: u64) -> MockPolicy {
        MockPolicy {
            competence: [0.5; K],
            eta: 0.01,
            wr_noise: 30.0,
            pawn_noise: 3.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn with_competence(mut self, id: SubtaskId, p: f64) -> MockPolicy {
        assert!((0.0..=1.0).contains(&p), "competence must lie in [0, 1]");
        self.competence[id.index()] = p;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> MockPolicy {
        self.eta = eta;
        self
    }

    fn hit(&mut self, id: SubtaskId) -> bool {
        self.rng.gen::<f64>() < self.competence[id.index()]
    }

    fn noise(&mut self, id: SubtaskId, scale: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        z * scale * (1.0 - self.competence[id.index()])
    }

    /// Emit one schema-valid trace for the record, corrupting each claim
    /// independently according to competence. Single-ply pvs have no
    /// continuation to corrupt and stay correct.
    pub fn emit_trace(&mut self, record: &AnalysisRecord, k: usize) -> Result<String, GenError> {
        let mut trace = generate_claims(record, k)?;
        let pos = Position::from_fen_lenient(&record.fen).expect("validated by generate_claims");
        for cand in &mut trace.candidates {
            let mv = resolve_move_text(&pos, &cand.san).expect("validated by generate_claims");
            if let Some(wr) = cand.win_rate {
                if !self.hit(SubtaskId::WinRate) {
                    let noisy = wr + self.noise(SubtaskId::WinRate, self.wr_noise);
                    cand.win_rate = Some(noisy.clamp(0.0, 100.0));
                }
            }
            if let Some(ps) = cand.pawn_score {
                if !self.hit(SubtaskId::PawnScore) {
                    cand.pawn_score = Some(ps + self.noise(SubtaskId::PawnScore, self.pawn_noise));
                }
            }
            if !self.hit(SubtaskId::Capture) {
                cand.capture = Some(match mv.capture() {
                    Some(_) => CaptureClaim::NoCapture,
                    None => CaptureClaim::Takes {
                        piece: crate::chess::Piece::Pawn,
                        square: mv.to(),
                    },
                });
            }
            if !self.hit(SubtaskId::Check) {
                cand.check = cand.check.map(|b| !b);
            }
            if matches!(cand.mate, Some(MateClaim::In { .. })) && !self.hit(SubtaskId::Mate) {
                cand.mate = Some(MateClaim::NoMate);
            }
            if let Some(pv) = cand.pv.clone() {
                if pv.len() > 1 && !self.hit(SubtaskId::Pv) {
                    cand.pv = Some(self.corrupt_pv(&pos, &pv));
                }
            }
        }
        let argmax = trace
            .candidates
            .iter()
            .max_by(|a, b| {
                a.win_rate
                    .unwrap_or(0.0)
                    .total_cmp(&b.win_rate.unwrap_or(0.0))
            })
            .map(|c| c.san.clone())
            .expect("generate_claims emits at least one candidate");
        let chosen = if self.hit(SubtaskId::LogicConsistency) || trace.candidates.len() == 1 {
            argmax
        } else {
            trace
                .candidates
                .iter()
                .map(|c| c.san.clone())
                .find(|san| *san != argmax)
                .unwrap_or(argmax)
        };
        trace.best_move_line = Some(chosen.clone());
        trace.answer = Some(chosen);
        Ok(serialize_trace(&trace)?)
    }

    /// Replace the continuation from a random ply onward with a different
    /// legal move, keeping the mandatory first ply intact.
    fn corrupt_pv(&mut self, pos: &Position, pv: &[String]) -> Vec<String> {
        let depth = self.rng.gen_range(1..pv.len());
        let mut cur = pos.clone();
        let mut out = Vec::with_capacity(depth + 1);
        for ply in pv.iter().take(depth) {
            let Some(mv) = resolve_move_text(&cur, ply) else {
                return pv[..depth.max(1)].to_vec();
            };
            out.push(ply.clone());
            cur = cur.apply(&mv);
        }
        let truth_key = resolve_move_text(&cur, &pv[depth]).map(|m| m.key());
        if let Some(wrong) = cur
            .legal_moves()
            .iter()
            .find(|m| Some(m.key()) != truth_key)
        {
            out.push(cur.san(wrong));
        }
        out
    }

    /// Weight-proportional learning: p ← p + η·w·(1 − p), clamped.
    pub fn learn(&mut self, weights: &[f64]) {
        for (p, w) in self.competence.iter_mut().zip(weights) {
            *p = (*p + self.eta * w * (1.0 - *p)).clamp(0.0, 1.0);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Weights stay at initialization; the EMA still tracks rewards.
    Fixed,
    /// Weights follow the headroom softmax every update.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// One scheduler update per step, fed batch-mean rewards.
    PerBatch,
    /// One scheduler update per scored trace.
    PerSample,
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    /// Candidates analyzed per trace.
    pub k: usize,
    pub mode: WeightMode,
    pub granularity: Granularity,
    pub score: ScoreConfig,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            steps: 300,
            batch: 128,
            k: 3,
            mode: WeightMode::Adaptive,
            granularity: Granularity::PerBatch,
            score: ScoreConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no training records supplied")]
    NoData,
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("trajectory: {0}")]
    Trajectory(#[from] csv::Error),
}

/// Per-step summary kept in memory alongside the CSV trajectory.
#[derive(Clone, Debug)]
pub struct StepLog {
    pub step: usize,
    pub mean_rewards: Vec<Option<f64>>,
    pub weights: Vec<f64>,
    pub mu: Vec<f64>,
    pub competence: [f64; K],
    pub mean_total: f64,
}

/// Run the generate, verify, weight, update loop. Each step draws `batch`
/// records with replacement, scores the emitted traces under the current
/// weights, feeds subtask means to the scheduler (per sample or per
/// batch), and lets the policy learn in proportion to the weights.
pub fn train_loop(
    policy: &mut MockPolicy,
    data: &[AnalysisRecord],
    state: &mut WeightState,
    cfg: &TrainConfig,
    trajectory: Option<&mut dyn io::Write>,
) -> Result<Vec<StepLog>, SimError> {
    if data.is_empty() {
        return Err(SimError::NoData);
    }
    assert_eq!(state.k(), K, "scheduler must track the {K} subtasks");
    let mut writer = match trajectory {
        Some(sink) => Some(TrajectoryWriter::new(sink, K)?),
        None => None,
    };
    let mut logs = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut sums = [0.0f64; K];
        let mut counts = [0usize; K];
        let mut total = 0.0;
        for _ in 0..cfg.batch {
            let record = &data[policy.rng.gen_range(0..data.len())];
            let text = policy.emit_trace(record, cfg.k)?;
            let parsed = parse_trace(&text);
            let breakdown = score_trace(&parsed, record, state.weights(), &cfg.score)?;
            total += breakdown.total;
            let mut sample = [None; K];
            for sub in &breakdown.subtasks {
                if sub.applicable {
                    let i = sub.subtask.index();
                    sums[i] += sub.reward;
                    counts[i] += 1;
                    sample[i] = Some(sub.reward);
                }
            }
            if cfg.granularity == Granularity::PerSample {
                match cfg.mode {
                    WeightMode::Adaptive => state.update(&sample)?,
                    WeightMode::Fixed => state.observe(&sample)?,
                }
            }
        }
        let means: Vec<Option<f64>> = (0..K)
            .map(|i| (counts[i] > 0).then(|| sums[i] / counts[i] as f64))
            .collect();
        if cfg.granularity == Granularity::PerBatch {
            match cfg.mode {
                WeightMode::Adaptive => state.update(&means)?,
                WeightMode::Fixed => state.observe(&means)?,
            }
        }
        policy.learn(state.weights());
        if let Some(w) = writer.as_mut() {
            w.log(state, &means)?;
        }
        logs.push(StepLog {
            step,
            mean_rewards: means,
            weights: state.weights().to_vec(),
            mu: state.mu().to_vec(),
            competence: policy.competence,
            mean_total: total / cfg.batch as f64,
        });
    }
    if let Some(w) = writer.as_mut() {
        w.flush().map_err(csv::Error::from)?;
    }
    Ok(logs)
}
