use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arm::{belief_step, ArmParams};
use crate::error::{Error, Result};
use crate::fairness::Demand;
use crate::policy::select::{fair_top_k, Selection};
use crate::policy::{Decision, Policy, PolicyKind};

/// Uniform random `k`-subset each epoch.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn select(&mut self, d: &Decision<'_>) -> Selection {
        let n = d.n_arms();
        let mut arms = rand::seq::index::sample(&mut self.rng, n, d.budget.min(n)).into_vec();
        arms.sort_unstable();
        Selection { arms, dropped_urgent: 0 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoIntervention;

impl Policy for NoIntervention {
    fn kind(&self) -> PolicyKind {
        PolicyKind::NoIntervention
    }

    fn select(&mut self, _d: &Decision<'_>) -> Selection {
        Selection::default()
    }
}

/// Gain in next-epoch belief from acting: `(ω P^a_11 + (1-ω) P^a_01) - τ(ω)`.
pub fn myopic_gap(omega: f64, arm: &ArmParams) -> f64 {
    omega * arm.active(1) + (1.0 - omega) * arm.active(0) - belief_step(omega, arm)
}

/// Top-k by [`myopic_gap`]; the constrained variant serves urgent arms first.
#[derive(Debug, Clone)]
pub struct MyopicPolicy {
    arms: Arc<Vec<ArmParams>>,
    constrained: bool,
    scores: Vec<f64>,
}

impl MyopicPolicy {
    pub fn new(arms: Arc<Vec<ArmParams>>, constrained: bool) -> Self {
        let n = arms.len();
        Self { arms, constrained, scores: vec![0.0; n] }
    }
}

impl Policy for MyopicPolicy {
    fn kind(&self) -> PolicyKind {
        if self.constrained {
            PolicyKind::ConstrainedMyopic
        } else {
            PolicyKind::Myopic
        }
    }

    fn select(&mut self, d: &Decision<'_>) -> Selection {
        for (i, score) in self.scores.iter_mut().enumerate() {
            *score = myopic_gap(d.obs.belief(i, &self.arms[i]), &self.arms[i]);
        }
        if self.constrained {
            fair_top_k(&self.scores, d.demand, d.fairness, d.budget)
        } else {
            fair_top_k(&self.scores, &Demand::default(), None, d.budget)
        }
    }
}

/// Optimal discounted values `[V(0), V(1)]` of the fully observed arm with
/// reward 1 in state 1 and `subsidy` for passivity.
fn observed_values(arm: &ArmParams, beta: f64, subsidy: f64) -> [f64; 2] {
    let mut best = [f64::NEG_INFINITY; 2];
    for policy in 0..4usize {
        let act = [policy & 1 == 1, policy & 2 == 2];
        let row = |x: usize| if act[x] { arm.p_active[x] } else { arm.p_passive[x] };
        let r = [0usize, 1].map(|x| x as f64 + if act[x] { 0.0 } else { subsidy });
        // (I - βP) V = r, 2x2
        let (a, b) = (1.0 - beta * row(0)[0], -beta * row(0)[1]);
        let (c, d) = (-beta * row(1)[0], 1.0 - beta * row(1)[1]);
        let det = a * d - b * c;
        let v = [(r[0] * d - b * r[1]) / det, (a * r[1] - c * r[0]) / det];
        best = [best[0].max(v[0]), best[1].max(v[1])];
    }
    best
}

/// Whittle index of state `s` when the state is observed every epoch:
/// the least `λ` with `λ >= β (P^a_{s,1} - P^p_{s,1}) (V_λ(1) - V_λ(0))`.
pub fn fully_observable_index(arm: &ArmParams, s: usize, beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::UnsupportedDiscount(beta));
    }
    let lift = arm.active(s) - arm.passive(s);
    let advantage = |lambda: f64| {
        let v = observed_values(arm, beta, lambda);
        lambda - beta * lift * (v[1] - v[0])
    };
    let width = 1.0 / (1.0 - beta);
    let (mut lo, mut hi) = (-width, width);
    if !(advantage(lo) < 0.0 && advantage(hi) >= 0.0) {
        return Err(Error::NonIndexableSuspect { lo, hi });
    }
    while hi - lo > 1e-12 * width {
        let mid = 0.5 * (lo + hi);
        if advantage(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Top-k by the fully observable index of each arm's true state; ignores fairness.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    index: Arc<Vec<[f64; 2]>>,
    scores: Vec<f64>,
}

impl OraclePolicy {
    pub fn new(index: Arc<Vec<[f64; 2]>>) -> Self {
        let n = index.len();
        Self { index, scores: vec![0.0; n] }
    }
}

impl Policy for OraclePolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Oracle
    }

    fn wants_true_state(&self) -> bool {
        true
    }

    fn select(&mut self, d: &Decision<'_>) -> Selection {
        let states = d.true_states.expect("oracle needs the true states");
        for (i, score) in self.scores.iter_mut().enumerate() {
            *score = self.index[i][states[i]];
        }
        fair_top_k(&self.scores, &Demand::default(), None, d.budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn myopic_gap_at_certainty() {
        let arm = ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.7).unwrap();
        assert!((myopic_gap(1.0, &arm) - 0.2).abs() < 1e-15);
        let same = ArmParams::from_good_probs_unchecked(0.2, 0.7, 0.2, 0.7).unwrap();
        assert_eq!(myopic_gap(0.3, &same), 0.0);
    }

    #[test]
    fn observed_index_positive_and_solves_fixed_point() {
        let arm = ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.7).unwrap();
        for s in 0..2 {
            let l = fully_observable_index(&arm, s, 0.95).unwrap();
            assert!(l > 0.0);
            let v = observed_values(&arm, 0.95, l);
            let rhs = 0.95 * (arm.active(s) - arm.passive(s)) * (v[1] - v[0]);
            assert!((l - rhs).abs() < 1e-8, "{l} vs {rhs}");
        }
    }

    #[test]
    fn observed_values_zero_discount() {
        let arm = ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.7).unwrap();
        let v = observed_values(&arm, 0.0, 0.3);
        assert_eq!(v, [0.3, 1.3]);
    }
}
