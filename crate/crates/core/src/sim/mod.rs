//! Ground-truth simulation of a bandit instance under a policy.
//!
//! At each epoch the policy picks arms, the reward is the number of arms in
//! the good state, activated arms reveal that state, and then every arm moves
//! under the transition matrix of its action.

mod experiment;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{stationary_belief, ArmParams};
use crate::error::{Error, Result};
use crate::fairness::{audit, FairnessSpec, FairnessTracker, Violation};
use crate::policy::{Decision, Feedback, ObsState, Policy};

pub use experiment::{
    derive_seed, run_experiment, write_runs_csv, ExperimentResult, ExperimentSpec, Histogram, PolicySummary,
    HISTOGRAM_LABELS, RUNS_CSV_HEADER,
};

/// Default reward change per violated window.
pub const DEFAULT_PENALTY: f64 = -0.01;

/// True states of every arm plus the environment's random stream.
#[derive(Debug, Clone)]
pub struct World {
    states: Vec<usize>,
    rng: ChaCha8Rng,
}

impl World {
    /// Starts each arm as if it had been activated just before epoch 1: a prior
    /// state `s0 ~ Bernoulli(ω*)` is revealed and the epoch-1 state is drawn
    /// from `P^a_{s0,·}`. Returns the world and the matching observations.
    pub fn init(arms: &[ArmParams], seed: u64) -> (Self, ObsState) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut prior = Vec::with_capacity(arms.len());
        let mut states = Vec::with_capacity(arms.len());
        for arm in arms {
            let star = stationary_belief(arm).unwrap_or(0.5);
            let s0 = usize::from(rng.random::<f64>() < star);
            prior.push(s0);
            states.push(usize::from(rng.random::<f64>() < arm.active(s0)));
        }
        (Self { states, rng }, ObsState::new(prior))
    }

    pub fn from_states(states: Vec<usize>, seed: u64) -> Self {
        Self { states, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Collects the reward, reveals the activated arms and moves every arm.
    /// Returns `(reward, revealed)` with `revealed` in the order of `activated`.
    pub fn step(&mut self, arms: &[ArmParams], activated: &[usize]) -> (u32, Vec<usize>) {
        let reward = self.states.iter().filter(|&&s| s == 1).count() as u32;
        let revealed = activated.iter().map(|&i| self.states[i]).collect();
        let mut active = vec![false; arms.len()];
        activated.iter().for_each(|&i| active[i] = true);
        for (i, arm) in arms.iter().enumerate() {
            let s = self.states[i];
            let p_good = if active[i] { arm.active(s) } else { arm.passive(s) };
            // one draw per arm per epoch keeps the stream independent of the policy
            let draw: f64 = self.rng.random();
            self.states[i] = usize::from(draw < p_good);
        }
        (reward, revealed)
    }
}

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub n_arms: usize,
    /// Good-state count per epoch, before penalties.
    pub reward_series: Vec<f64>,
    /// Penalty charged at each epoch (closing epochs of violated windows).
    pub penalty_series: Vec<f64>,
    pub urgent_series: Vec<u32>,
    pub violations_closed_series: Vec<u32>,
    pub activation_counts: Vec<u32>,
    pub violation_count: u64,
    pub penalty_total: f64,
    /// Urgent units left unserved because they outnumbered the budget.
    pub dropped_urgent: u64,
    /// Mean reward per arm per epoch, penalties included.
    pub avg_reward: f64,
    /// Mean reward per arm per epoch, penalties excluded.
    pub avg_reward_unpenalized: f64,
    /// `Σ_t β^{t-1} (reward_t + penalty_t)`.
    pub discounted_return: f64,
}

impl RunMetrics {
    fn new(n_arms: usize, horizon: usize) -> Self {
        Self {
            n_arms,
            reward_series: Vec::with_capacity(horizon),
            penalty_series: vec![0.0; horizon],
            urgent_series: Vec::with_capacity(horizon),
            violations_closed_series: vec![0; horizon],
            activation_counts: vec![0; n_arms],
            violation_count: 0,
            penalty_total: 0.0,
            dropped_urgent: 0,
            avg_reward: 0.0,
            avg_reward_unpenalized: 0.0,
            discounted_return: 0.0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.reward_series.len()
    }

    /// Recomputes the averages and discounted return from the series.
    pub fn finalize(&mut self, beta: f64) {
        let denom = (self.n_arms * self.horizon()).max(1) as f64;
        let raw: f64 = self.reward_series.iter().sum();
        self.penalty_total = self.penalty_series.iter().sum();
        self.avg_reward_unpenalized = raw / denom;
        self.avg_reward = (raw + self.penalty_total) / denom;
        let mut weight = 1.0;
        self.discounted_return = 0.0;
        for (r, p) in self.reward_series.iter().zip(&self.penalty_series) {
            self.discounted_return += weight * (r + p);
            weight *= beta;
        }
    }

    pub fn zero_activation_fraction(&self) -> f64 {
        self.activation_counts.iter().filter(|&&c| c == 0).count() as f64 / self.n_arms.max(1) as f64
    }
}

/// Charges `penalty` once per violated window at its closing epoch.
pub fn apply_penalty(metrics: &mut RunMetrics, violations: &[Violation], window: u32, penalty: f64, beta: f64) {
    metrics.penalty_series.iter_mut().for_each(|p| *p = 0.0);
    metrics.violations_closed_series.iter_mut().for_each(|c| *c = 0);
    for v in violations {
        let e = (v.closing_epoch(window) - 1) as usize;
        metrics.penalty_series[e] += penalty;
        metrics.violations_closed_series[e] += 1;
    }
    metrics.violation_count = violations.len() as u64;
    metrics.finalize(beta);
}

/// `(R_method - R_none) / (R_oracle - R_none) * 100`.
pub fn benefit_ratio(method: f64, none: f64, oracle: f64) -> Result<f64> {
    if oracle - none <= 0.0 {
        return Err(Error::UndefinedRatio { oracle, none });
    }
    Ok((method - none) / (oracle - none) * 100.0)
}

/// Settings of one simulated run.
#[derive(Debug, Clone, Copy)]
pub struct RunSettings<'a> {
    pub budget: usize,
    pub horizon: u64,
    pub fairness: Option<&'a FairnessSpec>,
    pub penalty: f64,
    /// Discount for the reported discounted return.
    pub beta: f64,
    pub world_seed: u64,
}

/// Simulates one run and returns its metrics and activation log.
pub fn simulate(arms: &[ArmParams], policy: &mut dyn Policy, cfg: &RunSettings<'_>) -> Result<(RunMetrics, Vec<Vec<usize>>)> {
    let n = arms.len();
    let (mut world, mut obs) = World::init(arms, cfg.world_seed);
    let mut tracker = cfg.fairness.map(|f| FairnessTracker::new(f.clone(), n));
    let mut metrics = RunMetrics::new(n, cfg.horizon as usize);
    let mut log = Vec::with_capacity(cfg.horizon as usize);
    for t in 1..=cfg.horizon {
        let demand = tracker.as_ref().map(|tr| tr.demand(cfg.budget)).unwrap_or_default();
        let decision = Decision {
            t,
            horizon: cfg.horizon,
            budget: cfg.budget,
            obs: &obs,
            demand: &demand,
            fairness: cfg.fairness,
            true_states: policy.wants_true_state().then(|| world.states()),
        };
        let sel = policy.select(&decision);
        if sel.arms.len() > cfg.budget || sel.arms.windows(2).any(|w| w[0] >= w[1]) || sel.arms.last().is_some_and(|&i| i >= n) {
            return Err(Error::Config(format!("{} returned an invalid action set at t={t}", policy.kind())));
        }
        let (reward, revealed) = world.step(arms, &sel.arms);
        let before = obs.clone();
        obs.update(&sel.arms, &revealed);
        policy.observe(&Feedback { t, activated: &sel.arms, revealed: &revealed, before: &before, after: &obs });
        if let Some(tr) = tracker.as_mut() {
            tr.record(t, &sel.arms)?;
        }
        sel.arms.iter().for_each(|&i| metrics.activation_counts[i] += 1);
        metrics.reward_series.push(reward as f64);
        metrics.urgent_series.push(demand.urgent.len() as u32);
        metrics.dropped_urgent += sel.dropped_urgent as u64;
        log.push(sel.arms);
    }
    match cfg.fairness {
        Some(spec) => {
            let violations = audit(&log, spec, n);
            apply_penalty(&mut metrics, &violations, spec.window, cfg.penalty, cfg.beta);
        }
        None => metrics.finalize(cfg.beta),
    }
    Ok((metrics, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::NoIntervention;

    #[test]
    fn reward_counts_good_states() {
        let arm = ArmParams::from_good_probs(0.5, 0.9, 0.2, 0.6).unwrap();
        let mut w = World::from_states(vec![1; 4], 1);
        let (r, revealed) = w.step(&[arm; 4], &[2]);
        assert_eq!(r, 4);
        assert_eq!(revealed, vec![1]);
    }

    #[test]
    fn deterministic_matrices_are_predictable() {
        // active always good, passive always bad
        let arm = ArmParams::from_good_probs(1.0, 1.0, 0.0, 0.0).unwrap();
        let mut w = World::from_states(vec![0, 1, 0], 9);
        w.step(&[arm; 3], &[0]);
        assert_eq!(w.states(), &[1, 0, 0]);
        let (r, _) = w.step(&[arm; 3], &[]);
        assert_eq!(r, 1);
        assert_eq!(w.states(), &[0, 0, 0]);
    }

    #[test]
    fn benefit_ratio_examples() {
        assert!((benefit_ratio(0.6, 0.4, 0.8).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(benefit_ratio(0.8, 0.4, 0.8).unwrap(), 100.0);
        assert_eq!(benefit_ratio(0.4, 0.4, 0.8).unwrap(), 0.0);
        assert!(matches!(benefit_ratio(0.5, 0.4, 0.4), Err(Error::UndefinedRatio { .. })));
    }

    #[test]
    fn penalties_land_on_closing_epochs() {
        let arm = ArmParams::from_good_probs(0.5, 0.9, 0.2, 0.6).unwrap();
        let spec = FairnessSpec::per_arm(1, 4).unwrap();
        let cfg = RunSettings { budget: 1, horizon: 6, fairness: Some(&spec), penalty: -0.01, beta: 1.0, world_seed: 3 };
        let (m, _) = simulate(&[arm; 2], &mut NoIntervention, &cfg).unwrap();
        // windows [1,4], [2,5], [3,6] for both arms
        assert_eq!(m.violation_count, 6);
        assert_eq!(m.violations_closed_series, vec![0, 0, 0, 2, 2, 2]);
        let raw: f64 = m.reward_series.iter().sum();
        assert!((m.avg_reward - (raw - 0.06) / 12.0).abs() < 1e-12);
        let mut zero = m.clone();
        apply_penalty(&mut zero, &[], 4, -0.01, 1.0);
        assert_eq!(zero.avg_reward, zero.avg_reward_unpenalized);
    }
}
