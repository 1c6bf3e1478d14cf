//! Value iteration over the truncated belief chain of a single subsidised arm.
//!
//! States are `(s, u)` with `s` the last observed state and `1 <= u <= chain_len`
//! the epochs since that observation. Passive moves `(s, u) -> (s, min(u+1, U))`,
//! so the last state of each chain is a self-loop. Active moves to `(1, 1)` with
//! probability `ω_s(u)` and to `(0, 1)` otherwise. Both actions earn the expected
//! reward `ω_s(u)`; the passive action additionally earns the subsidy `λ`.

use serde::{Deserialize, Serialize};

use crate::arm::{belief_u_step, ArmParams};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Passive,
    Active,
}

/// Planning horizon for the single-arm problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Exactly this many reward stages (backward induction from `V = 0`).
    Stages(u32),
    /// Discounted infinite horizon solved to a Bellman residual of `tol`.
    Infinite { tol: f64 },
}

impl Horizon {
    pub fn infinite() -> Self {
        Horizon::Infinite { tol: DEFAULT_TOL }
    }
}

/// What happens at the last state `(s, U)` of each chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailRule {
    /// Passive keeps the arm at `(s, U)`; belief held at `ω_s(U)`.
    #[default]
    SelfLoop,
    /// The arm must be activated at `(s, U)`, as under a window of length `U`.
    ForcedActive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefChainMdp {
    pub arm: ArmParams,
    pub chain_len: u32,
    pub discount: f64,
    pub subsidy: f64,
    pub tail: TailRule,
    beliefs: Vec<f64>,
}

impl BeliefChainMdp {
    pub fn new(arm: ArmParams, chain_len: u32, discount: f64, subsidy: f64) -> Self {
        assert!(chain_len >= 1, "chain length must be at least 1");
        let beliefs = (0..2)
            .flat_map(|s| (1..=chain_len).map(move |u| (s, u)))
            .map(|(s, u)| belief_u_step(s, u, &arm))
            .collect();
        Self { arm, chain_len, discount, subsidy, tail: TailRule::SelfLoop, beliefs }
    }

    pub fn with_tail(mut self, tail: TailRule) -> Self {
        self.tail = tail;
        self
    }

    /// Same chain and discount with a different subsidy.
    pub fn with_subsidy(&self, subsidy: f64) -> Self {
        Self { subsidy, ..self.clone() }
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        2 * self.chain_len as usize
    }

    /// Flat index of `(s, u)`; `u` beyond the chain maps to the tail.
    #[inline]
    pub fn index(&self, s: usize, u: u32) -> usize {
        s * self.chain_len as usize + (u.clamp(1, self.chain_len) - 1) as usize
    }

    #[inline]
    pub fn belief(&self, idx: usize) -> f64 {
        self.beliefs[idx]
    }

    #[inline]
    fn passive_next(&self, idx: usize) -> usize {
        let u = idx % self.chain_len as usize;
        if u + 1 < self.chain_len as usize {
            idx + 1
        } else {
            idx
        }
    }

    #[inline]
    fn heads(&self) -> (usize, usize) {
        (self.index(0, 1), self.index(1, 1))
    }

    #[inline]
    fn is_tail(&self, idx: usize) -> bool {
        idx % self.chain_len as usize + 1 == self.chain_len as usize
    }

    #[inline]
    fn passive_allowed(&self, idx: usize) -> bool {
        self.tail == TailRule::SelfLoop || !self.is_tail(idx)
    }

    fn q_values(&self, v: &[f64], idx: usize) -> (f64, f64) {
        let w = self.beliefs[idx];
        let (h0, h1) = self.heads();
        let passive = if self.passive_allowed(idx) {
            self.subsidy + w + self.discount * v[self.passive_next(idx)]
        } else {
            f64::NEG_INFINITY
        };
        let active = w + self.discount * (w * v[h1] + (1.0 - w) * v[h0]);
        (passive, active)
    }

    fn backup(&self, v: &[f64], q_passive: &mut [f64], q_active: &mut [f64], out: &mut [f64]) {
        for idx in 0..self.n_states() {
            let (p, a) = self.q_values(v, idx);
            q_passive[idx] = p;
            q_active[idx] = a;
            out[idx] = p.max(a);
        }
    }
}

/// Value function with the per-state action values it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution {
    pub chain_len: u32,
    pub values: Vec<f64>,
    pub q_passive: Vec<f64>,
    pub q_active: Vec<f64>,
    /// Bellman residual of `values` (zero for finite horizons).
    pub residual: f64,
}

impl ValueSolution {
    fn idx(&self, s: usize, u: u32) -> usize {
        s * self.chain_len as usize + (u.clamp(1, self.chain_len) - 1) as usize
    }

    pub fn value(&self, s: usize, u: u32) -> f64 {
        self.values[self.idx(s, u)]
    }

    /// `Q(passive) - Q(active)` at `(s, u)`.
    pub fn advantage(&self, s: usize, u: u32) -> f64 {
        let i = self.idx(s, u);
        self.q_passive[i] - self.q_active[i]
    }

    /// Optimal action; exact ties go to passive.
    pub fn action(&self, s: usize, u: u32) -> Action {
        if self.advantage(s, u) >= 0.0 {
            Action::Passive
        } else {
            Action::Active
        }
    }

    pub fn actions(&self) -> Vec<Action> {
        (0..self.values.len())
            .map(|i| if self.q_passive[i] >= self.q_active[i] { Action::Passive } else { Action::Active })
            .collect()
    }
}

/// Solves the subsidised single-arm problem.
///
/// Finite horizons run exact backward induction. The infinite horizon uses
/// policy iteration (exact evaluation by Gaussian elimination) and is then
/// polished with plain value-iteration sweeps until the Bellman residual is at
/// most `tol * max(1, |V|_inf)`.
pub fn value_iteration(mdp: &BeliefChainMdp, horizon: Horizon) -> Result<ValueSolution> {
    let n = mdp.n_states();
    let mut q_passive = vec![0.0; n];
    let mut q_active = vec![0.0; n];
    match horizon {
        Horizon::Stages(stages) => {
            let mut v = vec![0.0; n];
            let mut next = vec![0.0; n];
            if stages == 0 {
                return Ok(ValueSolution { chain_len: mdp.chain_len, values: v, q_passive, q_active, residual: 0.0 });
            }
            for _ in 0..stages {
                mdp.backup(&v, &mut q_passive, &mut q_active, &mut next);
                std::mem::swap(&mut v, &mut next);
            }
            Ok(ValueSolution { chain_len: mdp.chain_len, values: v, q_passive, q_active, residual: 0.0 })
        }
        Horizon::Infinite { tol } => {
            if !(mdp.discount < 1.0) {
                return Err(Error::UnsupportedDiscount(mdp.discount));
            }
            let mut v = policy_iteration(mdp);
            let mut next = vec![0.0; n];
            let max_sweeps = 1_000_000usize;
            for sweep in 0..=max_sweeps {
                mdp.backup(&v, &mut q_passive, &mut q_active, &mut next);
                let residual = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                if residual <= tol * scale {
                    return Ok(ValueSolution { chain_len: mdp.chain_len, values: v, q_passive, q_active, residual });
                }
                if sweep == max_sweeps {
                    return Err(Error::NoConvergence { residual, iterations: sweep });
                }
                std::mem::swap(&mut v, &mut next);
            }
            unreachable!()
        }
    }
}

fn policy_iteration(mdp: &BeliefChainMdp) -> Vec<f64> {
    let n = mdp.n_states();
    let mut active: Vec<bool> = (0..n).map(|i| !mdp.passive_allowed(i)).collect();
    let mut v = evaluate_policy(mdp, &active);
    for _ in 0..200 {
        let mut changed = false;
        for (idx, act) in active.iter_mut().enumerate() {
            let (p, a) = mdp.q_values(&v, idx);
            // switch only on a strict improvement so the loop cannot cycle on ties
            let margin = 1e-12 * (1.0 + p.abs().max(a.abs()));
            let want = if !p.is_finite() {
                true
            } else if *act {
                !(p > a + margin)
            } else {
                a > p + margin
            };
            if want != *act {
                *act = want;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        v = evaluate_policy(mdp, &active);
    }
    v
}

/// Solves `(I - βP_π) V = r_π` for a fixed stationary policy.
fn evaluate_policy(mdp: &BeliefChainMdp, active: &[bool]) -> Vec<f64> {
    let n = mdp.n_states();
    let (h0, h1) = mdp.heads();
    let mut m = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for idx in 0..n {
        let w = mdp.beliefs[idx];
        let row = &mut m[idx * n..(idx + 1) * n];
        row[idx] += 1.0;
        if active[idx] {
            row[h1] -= mdp.discount * w;
            row[h0] -= mdp.discount * (1.0 - w);
            rhs[idx] = w;
        } else {
            row[mdp.passive_next(idx)] -= mdp.discount;
            rhs[idx] = w + mdp.subsidy;
        }
    }
    solve_dense(&mut m, &mut rhs, n);
    rhs
}

/// Gaussian elimination with partial pivoting; the solution replaces `b`.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("non-empty range");
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm() -> ArmParams {
        ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.8).unwrap()
    }

    #[test]
    fn huge_subsidy_is_passive_everywhere() {
        let mdp = BeliefChainMdp::new(arm(), 10, 0.95, 1e6);
        let sol = value_iteration(&mdp, Horizon::infinite()).unwrap();
        assert!(sol.actions().iter().all(|a| *a == Action::Passive));
        let fin = value_iteration(&mdp, Horizon::Stages(5)).unwrap();
        assert!(fin.actions().iter().all(|a| *a == Action::Passive));
    }

    #[test]
    fn very_negative_subsidy_is_active_everywhere() {
        let mdp = BeliefChainMdp::new(arm(), 10, 0.95, -1e6);
        let sol = value_iteration(&mdp, Horizon::infinite()).unwrap();
        assert!(sol.actions().iter().all(|a| *a == Action::Active));
    }

    #[test]
    fn one_stage_advantage_is_the_subsidy() {
        for lambda in [-0.7, 0.0, 0.3, 2.5] {
            let mdp = BeliefChainMdp::new(arm(), 6, 0.9, lambda);
            let sol = value_iteration(&mdp, Horizon::Stages(1)).unwrap();
            for s in 0..2 {
                for u in 1..=6 {
                    assert!((sol.advantage(s, u) - lambda).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn infinite_solution_is_a_fixed_point() {
        let mdp = BeliefChainMdp::new(arm(), 20, 0.999, 0.12);
        let sol = value_iteration(&mdp, Horizon::infinite()).unwrap();
        let scale = sol.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        assert!(sol.residual <= DEFAULT_TOL * scale);
        // plain value iteration from zero converges to the same function
        let slow = BeliefChainMdp::new(arm(), 20, 0.9, 0.12);
        let pi = value_iteration(&slow, Horizon::infinite()).unwrap();
        let vi = value_iteration(&slow, Horizon::Stages(600)).unwrap();
        for (a, b) in pi.values.iter().zip(&vi.values) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn infinite_horizon_rejects_undiscounted() {
        let mdp = BeliefChainMdp::new(arm(), 4, 1.0, 0.0);
        assert_eq!(value_iteration(&mdp, Horizon::infinite()), Err(Error::UnsupportedDiscount(1.0)));
        assert!(value_iteration(&mdp, Horizon::Stages(3)).is_ok());
    }

    #[test]
    fn tail_state_self_loops() {
        let mdp = BeliefChainMdp::new(arm(), 3, 0.9, 0.0);
        assert_eq!(mdp.index(1, 3), mdp.index(1, 99));
        assert_eq!(mdp.passive_next(mdp.index(0, 3)), mdp.index(0, 3));
        assert_eq!(mdp.passive_next(mdp.index(0, 2)), mdp.index(0, 3));
    }
}
