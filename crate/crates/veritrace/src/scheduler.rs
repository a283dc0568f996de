//! Adaptive subtask weighting: EMA performance tracking, headroom-driven
//! temperature-scaled softmax, and a minimum-weight floor.
//!
//! The loop per batch: observed per-subtask mean rewards update an EMA
//! μ_k; headroom h_k = 1 − μ_k says how much is left to learn; weights are
//! softmax(h/T) pushed through a floor so no subtask is ever starved of
//! signal. Temperature is either fixed at T₀ or shrinks as headrooms
//! spread apart (T = T₀ / (1 + std(h))), sharpening the curriculum when
//! subtasks differentiate.

use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureMode {
    #[default]
    Fixed,
    Adaptive,
}

/// Scheduler hyperparameters. Defaults are the published setup: α = 0.001,
/// T₀ = 1.0, floor 0.05, EMA prior 0.5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerParams {
    pub alpha: f64,
    pub base_temperature: f64,
    pub w_min: f64,
    pub mu0: f64,
    pub mode: TemperatureMode,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        SchedulerParams {
            alpha: 0.001,
            base_temperature: 1.0,
            w_min: 0.05,
            mu0: 0.5,
            mode: TemperatureMode::Fixed,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error("need at least one subtask")]
    NoSubtasks,
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("base temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("floor {w_min} is infeasible for {k} subtasks (k·w_min > 1)")]
    InfeasibleFloor { w_min: f64, k: usize },
    #[error("mu0 must lie in [0, 1], got {0}")]
    BadPrior(f64),
    #[error("applicability mask selects no subtask")]
    EmptyMask,
    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// EMA estimates and the current weight simplex for K subtasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightState {
    step: u64,
    mu: Vec<f64>,
    w: Vec<f64>,
    /// Temperature used for the most recent reweighting.
    temperature: f64,
    params: SchedulerParams,
}

impl WeightState {
    pub fn init(k: usize, params: SchedulerParams) -> Result<WeightState, SchedulerError> {
        if k == 0 {
            return Err(SchedulerError::NoSubtasks);
        }
        if !(params.alpha > 0.0 && params.alpha < 1.0) {
            return Err(SchedulerError::BadAlpha(params.alpha));
        }
        if params.base_temperature <= 0.0 {
            return Err(SchedulerError::BadTemperature(params.base_temperature));
        }
        if params.w_min < 0.0 || params.w_min * k as f64 > 1.0 + 1e-12 {
            return Err(SchedulerError::InfeasibleFloor {
                w_min: params.w_min,
                k,
            });
        }
        if !(0.0..=1.0).contains(&params.mu0) {
            return Err(SchedulerError::BadPrior(params.mu0));
        }
        Ok(WeightState {
            step: 0,
            mu: vec![params.mu0; k],
            w: vec![1.0 / k as f64; k],
            temperature: params.base_temperature,
            params,
        })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn params(&self) -> &SchedulerParams {
        &self.params
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn headrooms(&self) -> Vec<f64> {
        self.mu.iter().map(|m| 1.0 - m).collect()
    }

    /// Temperature applied at the last reweighting.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Fold a batch of per-subtask mean rewards into the EMAs without
    /// touching the weights. `None` marks a subtask with no applicable
    /// sample in the batch; its EMA stays put. This is the whole update
    /// under a fixed (non-adaptive) weighting baseline.
    pub fn observe(&mut self, batch_means: &[Option<f64>]) -> Result<(), SchedulerError> {
        if batch_means.len() != self.k() {
            return Err(SchedulerError::WrongLength {
                expected: self.k(),
                got: batch_means.len(),
            });
        }
        let alpha = self.params.alpha;
        for (mu, mean) in self.mu.iter_mut().zip(batch_means) {
            if let Some(r) = mean {
                debug_assert!((0.0..=1.0).contains(r), "subtask means live in [0,1]");
                *mu = (1.0 - alpha) * *mu + alpha * r;
            }
        }
        self.step += 1;
        Ok(())
    }

    /// Full adaptive step: EMA update, then weights = floor(softmax(h/T)).
    pub fn update(&mut self, batch_means: &[Option<f64>]) -> Result<(), SchedulerError> {
        self.observe(batch_means)?;
        self.reweight();
        Ok(())
    }

    /// Recompute weights from current headrooms.
    pub fn reweight(&mut self) {
        let h = self.headrooms();
        let t = match self.params.mode {
            TemperatureMode::Fixed => self.params.base_temperature,
            TemperatureMode::Adaptive => {
                adaptive_temperature(self.params.base_temperature, &h)
            }
        };
        self.temperature = t;
        self.w = softmax_scaled(&h, t);
        apply_floor(&mut self.w, self.params.w_min);
    }

    /// Current weights restricted to the applicable subtasks and
    /// renormalized; inapplicable entries come back as zero.
    pub fn effective_weights(&self, applicable: &[bool]) -> Result<Vec<f64>, SchedulerError> {
        if applicable.len() != self.k() {
            return Err(SchedulerError::WrongLength {
                expected: self.k(),
                got: applicable.len(),
            });
        }
        let mass: f64 = self
            .w
            .iter()
            .zip(applicable)
            .filter_map(|(w, a)| a.then_some(*w))
            .sum();
        if mass <= 0.0 {
            return Err(SchedulerError::EmptyMask);
        }
        Ok(self
            .w
            .iter()
            .zip(applicable)
            .map(|(w, a)| if *a { w / mass } else { 0.0 })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state always serializes")
    }

    pub fn from_json(text: &str) -> Result<WeightState, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Temperature shrinking with headroom spread: T = T₀ / (1 + σ), σ the
/// population standard deviation.
pub fn adaptive_temperature(t0: f64, headrooms: &[f64]) -> f64 {
    assert!(t0 > 0.0);
    if headrooms.is_empty() {
        return t0;
    }
    let n = headrooms.len() as f64;
    let mean = headrooms.iter().sum::<f64>() / n;
    let var = headrooms.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
    t0 / (1.0 + var.sqrt())
}

/// Max-subtracted softmax of x/t.
fn softmax_scaled(x: &[f64], t: f64) -> Vec<f64> {
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| ((v - hi) / t).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Enforce the weight floor by waterfilling: pin everything below the
/// floor to exactly the floor, rescale the unpinned weights to the
/// remaining mass, and repeat until no new weight sinks below. Leaves the
/// input untouched when every weight already clears the floor.
fn apply_floor(w: &mut [f64], w_min: f64) {
    if w_min <= 0.0 {
        return;
    }
    let k = w.len();
    let mut pinned = vec![false; k];
    loop {
        let mut newly_pinned = false;
        for i in 0..k {
            if !pinned[i] && w[i] < w_min {
                pinned[i] = true;
                w[i] = w_min;
                newly_pinned = true;
            }
        }
        if !newly_pinned {
            return;
        }
        let pinned_count = pinned.iter().filter(|p| **p).count();
        if pinned_count == k {
            // Only reachable when k·w_min == 1: the floor is the simplex.
            for v in w.iter_mut() {
                *v = 1.0 / k as f64;
            }
            return;
        }
        let free_mass = 1.0 - pinned_count as f64 * w_min;
        let unpinned_sum: f64 = w
            .iter()
            .zip(&pinned)
            .filter_map(|(v, p)| (!p).then_some(*v))
            .sum();
        for (v, p) in w.iter_mut().zip(&pinned) {
            if !p {
                *v *= free_mass / unpinned_sum;
            }
        }
    }
}

/// CSV log of scheduler trajectories: one row per step with the EMAs, the
/// weights, and the observed batch means that produced them.
pub struct TrajectoryWriter<W: Write> {
    out: csv::Writer<W>,
    k: usize,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(sink: W, k: usize) -> Result<TrajectoryWriter<W>, csv::Error> {
        let mut out = csv::Writer::from_writer(sink);
        let mut header = vec!["step".to_string()];
        header.extend((1..=k).map(|i| format!("mu_{i}")));
        header.extend((1..=k).map(|i| format!("w_{i}")));
        header.extend((1..=k).map(|i| format!("r_{i}")));
        out.write_record(&header)?;
        Ok(TrajectoryWriter { out, k })
    }

    pub fn log(
        &mut self,
        state: &WeightState,
        batch_means: &[Option<f64>],
    ) -> Result<(), csv::Error> {
        assert_eq!(state.k(), self.k);
        assert_eq!(batch_means.len(), self.k);
        let mut row = vec![state.step().to_string()];
        row.extend(state.mu().iter().map(|v| v.to_string()));
        row.extend(state.weights().iter().map(|v| v.to_string()));
        row.extend(
            batch_means
                .iter()
                .map(|m| m.map(|v| v.to_string()).unwrap_or_default()),
        );
        self.out.write_record(&row)
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_state(k: usize) -> WeightState {
        WeightState::init(k, SchedulerParams::default()).unwrap()
    }

    #[test]
    fn init_gives_uniform_weights_and_validates() {
        let s = uniform_state(7);
        for w in s.weights() {
            assert!((w - 1.0 / 7.0).abs() < 1e-15);
        }
        assert_eq!(s.mu(), &[0.5; 7]);
        assert_eq!(s.step(), 0);
        let s3 = uniform_state(3);
        assert_eq!(s3.weights(), &[1.0 / 3.0; 3]);

        let bad = WeightState::init(
            7,
            SchedulerParams {
                w_min: 0.2,
                ..Default::default()
            },
        );
        assert_eq!(
            bad.unwrap_err(),
            SchedulerError::InfeasibleFloor { w_min: 0.2, k: 7 }
        );
        assert!(WeightState::init(0, SchedulerParams::default()).is_err());
        assert!(WeightState::init(
            3,
            SchedulerParams {
                alpha: 1.0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn ema_single_step_and_skip() {
        let mut s = uniform_state(3);
        s.observe(&[Some(1.0), Some(0.5), None]).unwrap();
        assert!((s.mu()[0] - 0.5005).abs() < 1e-15);
        assert_eq!(s.mu()[1], 0.5);
        assert_eq!(s.mu()[2], 0.5);
        assert_eq!(s.step(), 1);
        // observe leaves the weights alone.
        assert_eq!(s.weights(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn softmax_reference_values() {
        // Headrooms (0.9, 0.5, 0.1) at T = 1 without a floor.
        let mut s = WeightState::init(
            3,
            SchedulerParams {
                w_min: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        s.mu = vec![0.1, 0.5, 0.9];
        s.reweight();
        let w = s.weights();
        // exp(0.9)/Σ, exp(0.5)/Σ, exp(0.1)/Σ evaluated independently.
        assert!((w[0] - 0.471776).abs() < 1e-6, "got {}", w[0]);
        assert!((w[1] - 0.316241).abs() < 1e-6);
        assert!((w[2] - 0.211983).abs() < 1e-6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // Equal headrooms stay uniform at any temperature.
        let mut s = uniform_state(5);
        s.update(&[None; 5]).unwrap();
        for w in s.weights() {
            assert!((w - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn adaptive_temperature_reference_values() {
        assert_eq!(adaptive_temperature(1.0, &[0.4, 0.4, 0.4]), 1.0);
        assert!((adaptive_temperature(1.0, &[1.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let h: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
            let t = adaptive_temperature(0.7, &h);
            assert!(t <= 0.7 && t > 0.0);
        }
    }

    #[test]
    fn floor_waterfilling_reference() {
        let mut w = vec![0.02, 0.18, 0.80];
        apply_floor(&mut w, 0.05);
        assert!((w[0] - 0.05).abs() < 1e-15);
        assert!((w[1] - 0.18 * 0.95 / 0.98).abs() < 1e-12);
        assert!((w[2] - 0.80 * 0.95 / 0.98).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // Cascade: rescaling drags a second weight below the floor.
        let mut w = vec![0.01, 0.052, 0.938];
        apply_floor(&mut w, 0.05);
        assert!(w.iter().all(|v| *v >= 0.05 - 1e-12));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // Already clear of the floor: untouched.
        let mut w = vec![0.3, 0.3, 0.4];
        let before = w.clone();
        apply_floor(&mut w, 0.05);
        assert_eq!(w, before);

        // Floor is the whole simplex.
        let mut w = vec![0.1, 0.3, 0.6];
        apply_floor(&mut w, 1.0 / 3.0);
        for v in &w {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_and_order_survive_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut s = WeightState::init(
            7,
            SchedulerParams {
                alpha: 0.05,
                mode: TemperatureMode::Adaptive,
                ..Default::default()
            },
        )
        .unwrap();
        for _ in 0..500 {
            let means: Vec<Option<f64>> = (0..7)
                .map(|_| rng.gen_bool(0.9).then(|| rng.gen_range(0.0..=1.0)))
                .collect();
            s.update(&means).unwrap();
            let w = s.weights();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|v| *v >= s.params().w_min - 1e-12));
            let h = s.headrooms();
            for i in 0..7 {
                for j in 0..7 {
                    if h[i] > h[j] {
                        assert!(w[i] >= w[j] - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_rewards_converge_geometrically_to_fixed_point() {
        let mut s = WeightState::init(
            4,
            SchedulerParams {
                alpha: 0.1,
                ..Default::default()
            },
        )
        .unwrap();
        let c = 0.8;
        let mut gap = (0.5f64 - c).abs();
        for _ in 0..200 {
            s.update(&[Some(c); 4]).unwrap();
            let new_gap = (s.mu()[0] - c).abs();
            assert!(new_gap <= gap * 0.9 + 1e-15);
            gap = new_gap;
        }
        assert!(gap < 1e-8);
        for w in s.weights() {
            assert!((w - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn curriculum_moves_weight_toward_the_failing_subtask() {
        let mut s = WeightState::init(
            2,
            SchedulerParams {
                alpha: 0.05,
                w_min: 0.05,
                ..Default::default()
            },
        )
        .unwrap();
        let mut last_w2 = s.weights()[1];
        for _ in 0..300 {
            s.update(&[Some(1.0), Some(0.0)]).unwrap();
            let w2 = s.weights()[1];
            assert!(w2 >= last_w2 - 1e-12, "w2 must not decrease");
            last_w2 = w2;
        }
        assert!(last_w2 > 0.6);
        assert!(s.weights()[0] >= 0.05 - 1e-12);
    }

    #[test]
    fn effective_weights_masking() {
        let s = uniform_state(3);
        let all = s.effective_weights(&[true, true, true]).unwrap();
        assert_eq!(all, s.weights());
        let two = s.effective_weights(&[true, false, true]).unwrap();
        assert!((two[0] - 0.5).abs() < 1e-12);
        assert_eq!(two[1], 0.0);
        assert!((two[2] - 0.5).abs() < 1e-12);
        let one = s.effective_weights(&[false, true, false]).unwrap();
        assert_eq!(one[1], 1.0);
        assert_eq!(
            s.effective_weights(&[false, false, false]).unwrap_err(),
            SchedulerError::EmptyMask
        );
    }

    #[test]
    fn snapshot_round_trips_and_trajectory_logs() {
        let mut s = WeightState::init(3, SchedulerParams::default()).unwrap();
        s.update(&[Some(0.9), Some(0.2), None]).unwrap();
        let json = s.to_json();
        let back = WeightState::from_json(&json).unwrap();
        assert_eq!(back, s);
        for key in ["step", "mu", "w", "params"] {
            assert!(json.contains(key), "snapshot must carry {key}");
        }

        let mut buf = Vec::new();
        {
            let mut log = TrajectoryWriter::new(&mut buf, 3).unwrap();
            log.log(&s, &[Some(0.9), Some(0.2), None]).unwrap();
            log.flush().unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,mu_1,mu_2,mu_3,w_1,w_2,w_3,r_1,r_2,r_3"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("1,"));
        assert!(row.ends_with(",0.9,0.2,"));
    }
}
