//! FaWT-Q: tabular Q-learning over `(s, a, l)` per arm, ranking arms by
//! `λ(s, l) = Q(s, 1, l) - Q(s, 0, l)`.
//!
//! Passive epochs reveal nothing, so their reward is the arm's empirical
//! probability of being good in `(s, l)`, estimated from the states revealed
//! by past activations in the same `(s, l)` (prior mean 1/2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::policy::select::{fill, rank_desc, urgent_arms, Selection};
use crate::policy::whittle::PLAIN_WHITTLE_WINDOW;
use crate::policy::{Decision, Feedback, Policy, PolicyKind, PolicyParams};

/// Q-values of one arm over `s in {0,1}`, `a in {0,1}`, `l in 1..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    window: u32,
    q: Vec<f64>,
    /// Updates performed per triple, plus one.
    z: Vec<u32>,
    lambda: Vec<f64>,
}

impl QTable {
    pub fn new(window: u32) -> Self {
        let cells = 4 * window as usize;
        Self { window, q: vec![0.0; cells], z: vec![1; cells], lambda: vec![0.0; 2 * window as usize] }
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    fn cell(&self, s: usize, a: usize, l: u32) -> usize {
        debug_assert!(l >= 1 && l <= self.window);
        (s * 2 + a) * self.window as usize + (l - 1) as usize
    }

    pub fn q(&self, s: usize, a: usize, l: u32) -> f64 {
        self.q[self.cell(s, a, l)]
    }

    pub fn visits(&self, s: usize, a: usize, l: u32) -> u32 {
        self.z[self.cell(s, a, l)]
    }

    pub fn lambda(&self, s: usize, l: u32) -> f64 {
        self.lambda[s * self.window as usize + (l - 1) as usize]
    }

    /// `Q(s,a,l) += (R + γ max_a' Q(s',a',l') - Q(s,a,l)) / z`, then `z += 1`.
    pub fn update(&mut self, (s, a, l): (usize, usize, u32), reward: f64, (s2, l2): (usize, u32), gamma: f64) {
        let next = self.q(s2, 0, l2).max(self.q(s2, 1, l2));
        let c = self.cell(s, a, l);
        let alpha = 1.0 / self.z[c] as f64;
        self.q[c] += alpha * (reward + gamma * next - self.q[c]);
        self.z[c] += 1;
        let li = s * self.window as usize + (l - 1) as usize;
        self.lambda[li] = self.q(s, 1, l) - self.q(s, 0, l);
    }
}

#[derive(Debug, Clone)]
pub struct FawtQ {
    tables: Vec<QTable>,
    /// Per arm, `[good, total]` revelations in each `(s, l)`.
    revealed: Vec<Vec<[u32; 2]>>,
    window: u32,
    gamma: f64,
    epsilon: (f64, f64),
    rng: ChaCha8Rng,
    scores: Vec<f64>,
}

impl FawtQ {
    pub fn new(n_arms: usize, window: Option<u32>, params: &PolicyParams, seed: u64) -> Self {
        let window = window.unwrap_or(PLAIN_WHITTLE_WINDOW);
        Self {
            tables: vec![QTable::new(window); n_arms],
            revealed: vec![vec![[0, 0]; 2 * window as usize]; n_arms],
            window,
            gamma: params.gamma,
            epsilon: (params.epsilon, params.epsilon_end),
            rng: ChaCha8Rng::seed_from_u64(seed),
            scores: vec![0.0; n_arms],
        }
    }

    pub fn table(&self, arm: usize) -> &QTable {
        &self.tables[arm]
    }

    /// Exploration rate at epoch `t`, linear from start to end over the horizon.
    pub fn epsilon_at(&self, t: u64, horizon: u64) -> f64 {
        let (start, end) = self.epsilon;
        if horizon <= 1 {
            return start;
        }
        start + (end - start) * (t.saturating_sub(1)) as f64 / (horizon - 1) as f64
    }

    fn good_estimate(&self, arm: usize, s: usize, l: u32) -> f64 {
        let [good, total] = self.revealed[arm][s * self.window as usize + (l - 1) as usize];
        (good as f64 + 0.5) / (total as f64 + 1.0)
    }

    fn cap(&self, l: u32) -> u32 {
        l.clamp(1, self.window)
    }
}

impl Policy for FawtQ {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FawtQ
    }

    fn select(&mut self, d: &Decision<'_>) -> Selection {
        let n = d.n_arms();
        let k = d.budget.min(n);
        for i in 0..n {
            self.scores[i] = self.tables[i].lambda(d.obs.last_obs[i], self.cap(d.obs.steps[i]));
        }
        let order = rank_desc(&self.scores);
        let (forced, dropped) = urgent_arms(&order, d.demand, d.fairness, k);
        let explore = self.rng.random::<f64>() < self.epsilon_at(d.t, d.horizon);
        if explore {
            let rest: Vec<usize> = (0..n).filter(|i| !forced.contains(i)).collect();
            let picks = rand::seq::index::sample(&mut self.rng, rest.len(), k - forced.len());
            let random: Vec<usize> = picks.into_iter().map(|p| rest[p]).collect();
            fill(forced, random.into_iter(), n, k, dropped)
        } else {
            fill(forced, order.into_iter(), n, k, dropped)
        }
    }

    fn observe(&mut self, fb: &Feedback<'_>) {
        let n = fb.before.len();
        let mut active = vec![None; n];
        for (&i, &y) in fb.activated.iter().zip(fb.revealed) {
            active[i] = Some(y);
        }
        for (i, revealed) in active.into_iter().enumerate() {
            let s = fb.before.last_obs[i];
            let l = self.cap(fb.before.steps[i]);
            let next = (fb.after.last_obs[i], self.cap(fb.after.steps[i]));
            let (a, reward) = match revealed {
                Some(y) => {
                    let cell = &mut self.revealed[i][s * self.window as usize + (l - 1) as usize];
                    cell[0] += y as u32;
                    cell[1] += 1;
                    (1, y as f64)
                }
                None => (0, self.good_estimate(i, s, l)),
            };
            self.tables[i].update((s, a, l), reward, next, self.gamma);
        }
    }
}

/// Checks that activating the top-`k` arms by `Q(active) - Q(passive)`
/// attains the maximum of `Σ_i Q_i(a_i)` over all `k`-subsets.
/// `q[i] = [Q_i(passive), Q_i(active)]`.
pub fn topk_equals_argmax_check(q: &[[f64; 2]], k: usize) -> bool {
    let n = q.len();
    assert!(n <= 20 && k <= n, "exhaustive check needs N <= 20 and k <= N");
    let diffs: Vec<f64> = q.iter().map(|v| v[1] - v[0]).collect();
    let mut top = vec![false; n];
    rank_desc(&diffs).into_iter().take(k).for_each(|i| top[i] = true);
    let value = |active: &dyn Fn(usize) -> bool| (0..n).map(|i| q[i][active(i) as usize]).sum::<f64>();
    let greedy = value(&|i| top[i]);
    let best = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| value(&|i| m >> i & 1 == 1))
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = q.iter().flatten().fold(1.0f64, |acc, v| acc.max(v.abs()));
    greedy >= best - 1e-12 * scale * n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learning_rate_is_inverse_visits() {
        let mut t = QTable::new(3);
        t.update((0, 1, 2), 1.0, (1, 1), 0.0);
        assert_eq!(t.q(0, 1, 2), 1.0);
        assert_eq!(t.visits(0, 1, 2), 2);
        t.update((0, 1, 2), 0.0, (1, 1), 0.0);
        assert_eq!(t.q(0, 1, 2), 0.5);
        assert_eq!(t.lambda(0, 2), 0.5);
        assert_eq!(t.visits(0, 0, 2), 1);
    }

    #[test]
    fn topk_examples() {
        assert!(topk_equals_argmax_check(&[[0.0, 0.5], [0.0, 0.2], [0.0, 0.9]], 1));
        assert!(topk_equals_argmax_check(&[[1.0, 2.0]; 4], 2));
    }
}
