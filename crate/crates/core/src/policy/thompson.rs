//! FaWT-U: Thompson sampling over the four transition probabilities of each
//! arm, with Whittle indices computed from the sampled model.
//!
//! Between two activations of an arm at epochs `t1 < t2` the decision-maker
//! sees the revealed states `x` and `y`. With `t2 = t1 + 1` this is one direct
//! draw from `P^a_{x,·}`. Longer gaps hide one active and `t2 - t1 - 1`
//! passive transitions; their expected counts under the current posterior
//! means are added as fractional pseudo-counts (one forward-backward pass).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::arm::ArmParams;
use crate::planning::{one_step_index, ThresholdModel};
use crate::policy::select::{fair_top_k, Selection};
use crate::policy::whittle::PLAIN_WHITTLE_WINDOW;
use crate::policy::{Decision, Feedback, Policy, PolicyKind, PolicyParams};

/// Beta shape: `a` counts transitions into state 1, `b` into state 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape {
    pub a: f64,
    pub b: f64,
}

impl BetaShape {
    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    fn add(&mut self, to_good: f64, weight: f64) {
        self.a += weight * to_good;
        self.b += weight * (1.0 - to_good);
    }
}

/// Order of the four probabilities in [`PosteriorSet`].
const PA01: usize = 0;
const PA11: usize = 1;
const PP01: usize = 2;
const PP11: usize = 3;

/// Per arm, Beta posteriors over `[P^a_01, P^a_11, P^p_01, P^p_11]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSet {
    pub shapes: Vec<[BetaShape; 4]>,
}

impl PosteriorSet {
    pub fn new(n_arms: usize, prior: (f64, f64)) -> Self {
        Self { shapes: vec![[BetaShape { a: prior.0, b: prior.1 }; 4]; n_arms] }
    }

    /// Posterior centred on `arm` with `weight` pseudo-observations per probability.
    pub fn concentrated(arms: &[ArmParams], weight: f64) -> Self {
        let shapes = arms
            .iter()
            .map(|arm| {
                [arm.active(0), arm.active(1), arm.passive(0), arm.passive(1)]
                    .map(|p| BetaShape { a: 1.0 + weight * p, b: 1.0 + weight * (1.0 - p) })
            })
            .collect();
        Self { shapes }
    }

    pub fn sample(&self, arm: usize, rng: &mut ChaCha8Rng) -> ArmParams {
        let p = self.shapes[arm].map(|s| Beta::new(s.a, s.b).expect("shape parameters are positive").sample(rng));
        ArmParams::from_good_probs_unchecked(p[PA01], p[PA11], p[PP01], p[PP11]).expect("samples lie in [0, 1]")
    }

    pub fn mean_arm(&self, arm: usize) -> ArmParams {
        let p = self.shapes[arm].map(|s| s.mean());
        ArmParams::from_good_probs_unchecked(p[PA01], p[PA11], p[PP01], p[PP11]).expect("means lie in [0, 1]")
    }

    /// Credits the transitions between a revelation of `x` and, `gap` epochs
    /// later, a revelation of `y`; the first of them was active.
    pub fn update(&mut self, arm: usize, x: usize, y: usize, gap: u32) {
        assert!(gap >= 1);
        let active_row = if x == 1 { PA11 } else { PA01 };
        if gap == 1 {
            self.shapes[arm][active_row].add(y as f64, 1.0);
            return;
        }
        let est = self.mean_arm(arm);
        let pp = |z: usize, z2: usize| if z2 == 1 { est.passive(z) } else { 1.0 - est.passive(z) };
        let n = gap as usize;
        // z_1 after the active step, z_n = y
        let mut alpha = vec![[0.0; 2]; n];
        alpha[0] = [1.0 - est.active(x), est.active(x)];
        for j in 1..n {
            for z2 in 0..2 {
                alpha[j][z2] = (0..2).map(|z| alpha[j - 1][z] * pp(z, z2)).sum();
            }
        }
        let mut back = vec![[0.0; 2]; n];
        back[n - 1][y] = 1.0;
        for j in (0..n - 1).rev() {
            for z in 0..2 {
                back[j][z] = (0..2).map(|z2| pp(z, z2) * back[j + 1][z2]).sum();
            }
        }
        let likelihood = alpha[n - 1][y];
        if likelihood <= 0.0 {
            return;
        }
        let good_first = alpha[0][1] * back[0][1] / likelihood;
        self.shapes[arm][active_row].add(good_first, 1.0);
        for j in 0..n - 1 {
            for z in 0..2 {
                let row = if z == 1 { PP11 } else { PP01 };
                let to_good = alpha[j][z] * pp(z, 1) * back[j + 1][1] / likelihood;
                let to_bad = alpha[j][z] * pp(z, 0) * back[j + 1][0] / likelihood;
                let total = to_good + to_bad;
                if total > 0.0 {
                    self.shapes[arm][row].add(to_good / total, total);
                }
            }
        }
    }
}

/// Index source for one sampled arm, filled lazily per `(s, u)`.
#[derive(Debug, Clone)]
struct SampledIndex {
    arm: ArmParams,
    model: ThresholdModel,
    cache: [Vec<Option<f64>>; 2],
}

impl SampledIndex {
    fn new(arm: ArmParams, window: u32) -> Self {
        let empty = vec![None; window as usize + 1];
        Self { arm, model: ThresholdModel::new(&arm, window + 1), cache: [empty.clone(), empty] }
    }
}

#[derive(Debug, Clone)]
pub struct FawtU {
    posteriors: PosteriorSet,
    window: u32,
    beta: f64,
    rng: ChaCha8Rng,
    sampled: Vec<SampledIndex>,
    /// Epoch of the last revelation per arm; 0 is the initial observation.
    last_seen: Vec<u64>,
    scores: Vec<f64>,
    /// States whose sampled model had no index crossing.
    pub fallbacks: u64,
}

impl FawtU {
    pub fn new(n_arms: usize, window: Option<u32>, params: &PolicyParams, seed: u64) -> Self {
        Self::with_posteriors(PosteriorSet::new(n_arms, params.prior), window, params, seed)
    }

    pub fn with_posteriors(posteriors: PosteriorSet, window: Option<u32>, params: &PolicyParams, seed: u64) -> Self {
        let window = window.unwrap_or(PLAIN_WHITTLE_WINDOW);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = posteriors.shapes.len();
        let sampled = (0..n).map(|i| SampledIndex::new(posteriors.sample(i, &mut rng), window)).collect();
        Self {
            posteriors,
            window,
            beta: params.beta,
            rng,
            sampled,
            last_seen: vec![0; n],
            scores: vec![0.0; n],
            fallbacks: 0,
        }
    }

    pub fn posteriors(&self) -> &PosteriorSet {
        &self.posteriors
    }

    pub fn sampled_arm(&self, arm: usize) -> ArmParams {
        self.sampled[arm].arm
    }

    fn score(&mut self, i: usize, s: usize, u: u32, omega: impl Fn(&ArmParams) -> f64) -> f64 {
        let u = u.min(self.window);
        if let Some(v) = self.sampled[i].cache[s][u as usize] {
            return v;
        }
        let entry = &self.sampled[i];
        let v = match entry.model.index(s, u) {
            Some(v) => v,
            None => {
                let v = one_step_index(&entry.arm, omega(&entry.arm), self.beta);
                self.fallbacks += 1;
                v
            }
        };
        self.sampled[i].cache[s][u as usize] = Some(v);
        v
    }
}

impl Policy for FawtU {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FawtU
    }

    fn select(&mut self, d: &Decision<'_>) -> Selection {
        for i in 0..d.n_arms() {
            let (s, u) = (d.obs.last_obs[i], d.obs.steps[i]);
            let v = self.score(i, s, u, |arm| d.obs.belief(i, arm));
            self.scores[i] = v;
        }
        fair_top_k(&self.scores, d.demand, d.fairness, d.budget)
    }

    fn observe(&mut self, fb: &Feedback<'_>) {
        for (&i, &y) in fb.activated.iter().zip(fb.revealed) {
            let gap = (fb.t - self.last_seen[i]) as u32;
            self.posteriors.update(i, fb.before.last_obs[i], y, gap);
            self.last_seen[i] = fb.t;
            let arm = self.posteriors.sample(i, &mut self.rng);
            self.sampled[i] = SampledIndex::new(arm, self.window);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_prior_samples() {
        let post = PosteriorSet::new(1, (1.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut bins = [0usize; 4];
        for _ in 0..n {
            let p = post.sample(0, &mut rng).active(1);
            bins[((p * 4.0) as usize).min(3)] += 1;
        }
        let expected = n as f64 / 4.0;
        let chi2: f64 = bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum();
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.27, "{bins:?}");
    }

    #[test]
    fn unit_gap_is_exact_update() {
        let mut post = PosteriorSet::new(1, (1.0, 1.0));
        post.update(0, 1, 0, 1);
        assert_eq!(post.shapes[0][PA11], BetaShape { a: 1.0, b: 2.0 });
        assert_eq!(post.shapes[0][PP01], BetaShape { a: 1.0, b: 1.0 });
    }

    #[test]
    fn long_gap_adds_one_count_per_transition() {
        let mut post = PosteriorSet::new(1, (2.0, 3.0));
        let before: f64 = post.shapes[0].iter().map(|s| s.a + s.b).sum();
        post.update(0, 0, 1, 5);
        let after: f64 = post.shapes[0].iter().map(|s| s.a + s.b).sum();
        assert!((after - before - 5.0).abs() < 1e-12);
        for (new, old) in post.shapes[0].iter().zip(PosteriorSet::new(1, (2.0, 3.0)).shapes[0]) {
            assert!(new.a >= old.a && new.b >= old.b);
        }
    }

    #[test]
    fn e_step_matches_enumeration() {
        // gap 3: z1 (after active from x), z2, z3 = y; enumerate z1, z2
        let mut post = PosteriorSet::new(1, (1.0, 1.0));
        post.shapes[0] = [
            BetaShape { a: 3.0, b: 7.0 },
            BetaShape { a: 8.0, b: 2.0 },
            BetaShape { a: 2.0, b: 8.0 },
            BetaShape { a: 6.0, b: 4.0 },
        ];
        let est = post.mean_arm(0);
        let (x, y) = (0usize, 1usize);
        let p = |from: usize, to: usize, active: bool| {
            let g = if active { est.active(from) } else { est.passive(from) };
            if to == 1 {
                g
            } else {
                1.0 - g
            }
        };
        let mut w = [[0.0; 2]; 2];
        for z1 in 0..2 {
            for z2 in 0..2 {
                w[z1][z2] = p(x, z1, true) * p(z1, z2, false) * p(z2, y, false);
            }
        }
        let total: f64 = w.iter().flatten().sum();
        let good_first = (w[1][0] + w[1][1]) / total;
        // passive transitions out of state 1: z1 -> z2 when z1 = 1 plus z2 -> y when z2 = 1
        let from_good = (w[1][0] + w[1][1] + w[0][1] + w[1][1]) / total;
        let before = post.shapes[0];
        post.update(0, x, y, 3);
        let d = |k: usize| (post.shapes[0][k].a - before[k].a, post.shapes[0][k].a + post.shapes[0][k].b - before[k].a - before[k].b);
        assert!((d(PA01).0 - good_first).abs() < 1e-12);
        assert!((d(PP11).1 - from_good).abs() < 1e-12);
    }
}
