//! Closed-form infinite-horizon Whittle indices from threshold-policy
//! occupancy frequencies (average-reward criterion).
//!
//! A threshold policy `(B0, B1)` stays passive along chain `s` until the
//! elapsed count reaches `B_s` and acts there. Its stationary distribution puts
//! mass `a` on each of the `B0` visited states of chain 0 and `b` on each of the
//! `B1` visited states of chain 1:
//!
//! ```text
//! x = ω_0(B0)          (act in chain 0 -> observe good)
//! y = 1 - ω_1(B1)      (act in chain 1 -> observe bad)
//! a = y / (B0 y + B1 x),   b = x / (B0 y + B1 x)
//! R_λ = a Σ_{u<=B0} ω_0(u) + b Σ_{u<=B1} ω_1(u) + λ (1 - a - b)
//! ```
//!
//! Every stationary policy on the belief chains is such a pair, so the optimal
//! gain is a maximum over at most `L^2` pairs. The index of `(s, u)` is the
//! least subsidy at which waiting in `(s, u)` is worth as much as acting,
//! comparing relative values under the optimal pair; for states the optimal
//! pair visits this is the crossing of two adjacent threshold policies.

use serde::{Deserialize, Serialize};

use crate::arm::{belief_u_step, ArmParams};
use crate::error::Result;
use crate::planning::search::{whittle_binary_search, SearchOptions};
use crate::planning::table::{HorizonKind, IndexTable};
use crate::planning::value::Horizon;

/// Discount used as the average-reward proxy when the closed form does not apply.
pub const AVERAGE_REWARD_PROXY: f64 = 0.999;

/// Evaluation of one threshold policy at a fixed subsidy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicyEval {
    pub b0: u32,
    pub b1: u32,
    pub occupancy_a: f64,
    pub occupancy_b: f64,
    pub subsidy: f64,
    pub avg_reward: f64,
}

/// Average reward `reward + λ passive` of one threshold pair as a line in `λ`.
#[derive(Debug, Clone, Copy)]
struct PairLine {
    passive: f64,
    reward: f64,
    b0: u32,
    b1: u32,
}

impl PairLine {
    fn at(&self, subsidy: f64) -> f64 {
        self.reward + subsidy * self.passive
    }

    /// Subsidy where `self` and a steeper `other` are equal.
    fn meet(&self, other: &PairLine) -> f64 {
        (self.reward - other.reward) / (other.passive - self.passive)
    }
}

/// Precomputed beliefs, prefix sums and the upper envelope of all threshold
/// pairs for both chains up to `max_threshold`.
#[derive(Debug, Clone)]
pub struct ThresholdModel {
    max_threshold: u32,
    beliefs: [Vec<f64>; 2],
    prefix: [Vec<f64>; 2],
    /// Envelope lines by increasing slope; `breaks[i]` is where line `i + 1` takes over.
    hull: Vec<PairLine>,
    breaks: Vec<f64>,
}

impl ThresholdModel {
    pub fn new(arm: &ArmParams, max_threshold: u32) -> Self {
        let chain = |s: usize| -> Vec<f64> {
            std::iter::once(f64::NAN).chain((1..=max_threshold).map(|u| belief_u_step(s, u, arm))).collect()
        };
        let beliefs = [chain(0), chain(1)];
        let prefix = [0, 1].map(|s| {
            let mut acc = 0.0;
            std::iter::once(0.0)
                .chain(beliefs[s][1..].iter().map(|w| {
                    acc += w;
                    acc
                }))
                .collect::<Vec<_>>()
        });
        let mut model = Self { max_threshold, beliefs, prefix, hull: Vec::new(), breaks: Vec::new() };
        model.build_hull();
        model
    }

    fn build_hull(&mut self) {
        let mut lines = Vec::with_capacity((self.max_threshold * self.max_threshold) as usize);
        for b0 in 1..=self.max_threshold {
            for b1 in 1..=self.max_threshold {
                let (_, _, reward, passive) = self.components(b0, b1);
                lines.push(PairLine { passive, reward, b0, b1 });
            }
        }
        lines.sort_by(|x, y| x.passive.total_cmp(&y.passive).then(x.reward.total_cmp(&y.reward)));
        let mut hull: Vec<PairLine> = Vec::new();
        for line in lines {
            if hull.last().is_some_and(|top| top.passive == line.passive) {
                hull.pop();
            }
            while hull.len() >= 2 {
                let (a, b) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
                if a.meet(&line) <= a.meet(b) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(line);
        }
        self.breaks = hull.windows(2).map(|w| w[0].meet(&w[1])).collect();
        self.hull = hull;
    }

    pub fn max_threshold(&self) -> u32 {
        self.max_threshold
    }

    /// Occupancy `(a, b)`, state reward `Σ ω f` and passive fraction of `(B0, B1)`.
    fn components(&self, b0: u32, b1: u32) -> (f64, f64, f64, f64) {
        let x = self.beliefs[0][b0 as usize];
        let y = 1.0 - self.beliefs[1][b1 as usize];
        let denom = b0 as f64 * y + b1 as f64 * x;
        let (a, b) = if denom > 0.0 {
            (y / denom, x / denom)
        } else {
            // both chains absorbing into themselves; treat as split evenly
            (0.5 / b0 as f64, 0.5 / b1 as f64)
        };
        let reward = a * self.prefix[0][b0 as usize] + b * self.prefix[1][b1 as usize];
        (a, b, reward, 1.0 - a - b)
    }

    pub fn evaluate(&self, b0: u32, b1: u32, subsidy: f64) -> ThresholdPolicyEval {
        let (a, b, reward, passive) = self.components(b0, b1);
        ThresholdPolicyEval { b0, b1, occupancy_a: a, occupancy_b: b, subsidy, avg_reward: reward + subsidy * passive }
    }

    /// Optimal gain over all threshold pairs and the pair attaining it.
    pub fn optimal_gain(&self, subsidy: f64) -> (f64, u32, u32) {
        let line = &self.hull[self.breaks.partition_point(|&x| x < subsidy)];
        (line.at(subsidy), line.b0, line.b1)
    }

    /// [`Self::optimal_gain`] by scanning every pair.
    pub fn optimal_gain_scan(&self, subsidy: f64) -> (f64, u32, u32) {
        let mut best = (f64::NEG_INFINITY, 1, 1);
        for b0 in 1..=self.max_threshold {
            for b1 in 1..=self.max_threshold {
                let (_, _, reward, passive) = self.components(b0, b1);
                let g = reward + subsidy * passive;
                if g > best.0 {
                    best = (g, b0, b1);
                }
            }
        }
        best
    }

    /// Excess reward `Σ_{v in from..to} (ω_s(v) + λ - g)` of waiting along chain `s`.
    fn wait_excess(&self, s: usize, from: u32, to: u32, subsidy: f64, gain: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        self.prefix[s][to as usize - 1] - self.prefix[s][from as usize - 1] + (to - from) as f64 * (subsidy - gain)
    }

    /// Passive minus active relative value in `(s, u)` at `subsidy`, both
    /// continuing optimally. The chain acts at `max_threshold` at the latest.
    pub fn advantage(&self, s: usize, u: u32, subsidy: f64) -> f64 {
        let (gain, _, b1) = self.optimal_gain(subsidy);
        // h(1,1) from the renewal equation of chain 1 under the optimal pair
        let x1 = self.beliefs[1][b1 as usize];
        let c1 = self.wait_excess(1, 1, b1, subsidy, gain) + x1 - gain;
        let h11 = if x1 < 1.0 { c1 / (1.0 - x1) } else { 0.0 };
        // acting restarts chain 1 with probability ω; relative values pin h(0,1) = 0
        let act_at = |v: u32| {
            let w = self.beliefs[s][v as usize];
            w - gain + w * h11
        };
        let wait = (u + 1..=self.max_threshold)
            .map(|b| self.wait_excess(s, u + 1, b, subsidy, gain) + act_at(b))
            .fold(f64::NEG_INFINITY, f64::max);
        (self.beliefs[s][u as usize] + subsidy - gain + wait) - act_at(u)
    }

    /// Index of `(s, u)` for `u < max_threshold`, or `None` when passive never
    /// overtakes active within the search range.
    pub fn index(&self, s: usize, u: u32) -> Option<f64> {
        assert!(u >= 1 && u < self.max_threshold, "state must leave room for the next threshold");
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut grow = 0;
        while self.advantage(s, u, hi) < 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 40 {
                return None;
            }
        }
        grow = 0;
        while self.advantage(s, u, lo) >= 0.0 {
            lo *= 2.0;
            grow += 1;
            if grow > 40 {
                return None;
            }
        }
        for _ in 0..200 {
            if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.advantage(s, u, mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Output of [`fast_whittle_infinite`].
#[derive(Debug, Clone, PartialEq)]
pub struct FastIndex {
    pub table: IndexTable,
    /// Set when the arm is not positively correlated (or a state had no
    /// crossing) and the bisection oracle supplied some of the values.
    pub fallback: bool,
}

/// Infinite-horizon index table for `u in 1..=L` from threshold occupancy
/// frequencies. Thresholds range over `1..=L+1` so the tail state `u = L` is
/// compared against waiting one more epoch.
pub fn fast_whittle_infinite(arm: &ArmParams, window: u32) -> Result<FastIndex> {
    assert!(window >= 1);
    let mut fallback = false;
    let model = arm.is_positively_correlated().then(|| ThresholdModel::new(arm, window + 1));
    let mut values = Vec::with_capacity(2 * window as usize);
    for s in 0..2 {
        for u in 1..=window {
            let closed = model.as_ref().and_then(|m| m.index(s, u));
            let v = match closed {
                Some(v) => v,
                None => {
                    fallback = true;
                    let opts = SearchOptions::windowed(window);
                    whittle_binary_search(arm, s, u, AVERAGE_REWARD_PROXY, Horizon::infinite(), opts)?
                }
            };
            values.push(v);
        }
    }
    Ok(FastIndex { table: IndexTable::new(HorizonKind::Infinite, window, values), fallback })
}

/// Index of a single state through the closed form, without fallback.
pub fn fast_whittle_state(model: &ThresholdModel, s: usize, u: u32) -> Option<f64> {
    model.index(s, u.min(model.max_threshold() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupancy_sums_to_one() {
        let arm = ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.8).unwrap();
        let m = ThresholdModel::new(&arm, 12);
        for b0 in 1..=12 {
            for b1 in 1..=12 {
                let e = m.evaluate(b0, b1, 0.3);
                let total = b0 as f64 * e.occupancy_a + b1 as f64 * e.occupancy_b;
                assert!((total - 1.0).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&e.occupancy_a) && (0.0..=1.0).contains(&e.occupancy_b));
            }
        }
    }

    #[test]
    fn occupancy_matches_textbook_form() {
        // a = (B1 ω0(B0)/(1-ω1(B1)) + B0)^-1 and b = a ω0(B0)/(1-ω1(B1))
        let arm = ArmParams::from_good_probs(0.35, 0.85, 0.1, 0.7).unwrap();
        let m = ThresholdModel::new(&arm, 8);
        let (b0, b1) = (3u32, 5u32);
        let x = belief_u_step(0, b0, &arm);
        let y = 1.0 - belief_u_step(1, b1, &arm);
        let a = 1.0 / (b1 as f64 * x / y + b0 as f64);
        let b = a * x / y;
        let e = m.evaluate(b0, b1, 0.0);
        assert!((e.occupancy_a - a).abs() < 1e-14);
        assert!((e.occupancy_b - b).abs() < 1e-14);
    }

    #[test]
    fn envelope_matches_scan() {
        let arm = ArmParams::from_good_probs(0.3, 0.95, 0.15, 0.75).unwrap();
        let m = ThresholdModel::new(&arm, 20);
        for i in -200..=200 {
            let lambda = i as f64 * 0.013;
            let (g, _, _) = m.optimal_gain(lambda);
            let (g_scan, _, _) = m.optimal_gain_scan(lambda);
            assert!((g - g_scan).abs() < 1e-12, "λ={lambda}: {g} vs {g_scan}");
        }
    }

    #[test]
    fn table_values_are_finite() {
        let arm = ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.8).unwrap();
        let fast = fast_whittle_infinite(&arm, 15).unwrap();
        assert!(!fast.fallback);
        assert!(fast.table.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn negatively_correlated_arm_falls_back() {
        let arm = ArmParams::from_good_probs(0.9, 0.4, 0.7, 0.2).unwrap();
        let fast = fast_whittle_infinite(&arm, 4).unwrap();
        assert!(fast.fallback);
        assert!(fast.table.values().iter().all(|v| v.is_finite()));
    }
}
