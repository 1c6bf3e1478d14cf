//! Executable checkers for the structural properties the fairness policies
//! rely on: indexability, the sufficient conditions for activating a
//! fairness-critical arm as late as possible, value-difference bounds and the
//! two-arm exchange condition.

use serde::{Deserialize, Serialize};

use crate::arm::{passive_propagate, stationary_belief, ArmParams};
use crate::error::Result;
use crate::planning::value::{value_iteration, Action, BeliefChainMdp, Horizon};

/// Horizon for the theorem and bound checkers. `Finite(T)` is the residual
/// horizon length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremHorizon {
    Infinite,
    Finite(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexabilityViolation {
    pub s: usize,
    pub u: u32,
    /// First grid subsidy at which the state switched back to active.
    pub subsidy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexabilityReport {
    pub pass: bool,
    pub states_checked: usize,
    pub first_violation: Option<IndexabilityViolation>,
}

/// Checks that along the (ascending) subsidy grid every state's optimal action
/// switches from active to passive at most once and never back.
pub fn check_indexability(arm: &ArmParams, grid: &[f64], discount: f64, chain_len: u32) -> Result<IndexabilityReport> {
    debug_assert!(grid.windows(2).all(|w| w[0] <= w[1]), "grid must be ascending");
    let base = BeliefChainMdp::new(*arm, chain_len, discount, 0.0);
    let n = base.n_states();
    let mut seen_passive = vec![false; n];
    let mut first_violation = None;
    for &lambda in grid {
        let actions = value_iteration(&base.with_subsidy(lambda), Horizon::infinite())?.actions();
        for (idx, action) in actions.iter().enumerate() {
            match action {
                Action::Passive => seen_passive[idx] = true,
                Action::Active if seen_passive[idx] && first_violation.is_none() => {
                    first_violation = Some(IndexabilityViolation {
                        s: idx / chain_len as usize,
                        u: (idx % chain_len as usize) as u32 + 1,
                        subsidy: lambda,
                    });
                }
                Action::Active => {}
            }
        }
    }
    Ok(IndexabilityReport { pass: first_violation.is_none(), states_checked: n, first_violation })
}

/// Truth values of the two late-activation sufficient conditions together
/// with every intermediate quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub horizon: TheoremHorizon,
    pub cond_increasing: bool,
    pub cond_nonincreasing: bool,
    pub increasing_lhs: f64,
    pub increasing_rhs: f64,
    pub nonincreasing_lhs: f64,
    pub nonincreasing_rhs: f64,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub delta3: Option<f64>,
    pub delta4: Option<f64>,
}

fn geometric(q: f64, terms: u32) -> f64 {
    if (1.0 - q).abs() < 1e-15 {
        terms as f64
    } else {
        (1.0 - q.powi(terms as i32)) / (1.0 - q)
    }
}

/// Evaluates the late-activation conditions exactly as stated, with geometric
/// sums in closed form (infinite) or as partial sums over `t = 0..=T-2`.
pub fn check_theorem_conditions(arm: &ArmParams, discount: f64, horizon: TheoremHorizon) -> TheoremReport {
    let dp = arm.passive_gap();
    let da = arm.active_gap();
    let b = discount;
    let dmin = dp.min(da);
    match horizon {
        TheoremHorizon::Infinite => {
            let delta1 = 1.0f64.min(1.0 + b * dp - b * da);
            let increasing_lhs = dp * (1.0 + b * dmin / (1.0 - b)) * (1.0 - b * da);
            let increasing_rhs = da;
            let nonincreasing_lhs = dp * (1.0 - b) * delta1;
            let nonincreasing_rhs = da * (1.0 - b * da);
            TheoremReport {
                horizon,
                cond_increasing: increasing_lhs <= increasing_rhs,
                cond_nonincreasing: nonincreasing_lhs >= nonincreasing_rhs,
                increasing_lhs,
                increasing_rhs,
                nonincreasing_lhs,
                nonincreasing_rhs,
                delta1: Some(delta1),
                delta2: None,
                delta3: Some(dmin),
                delta4: None,
            }
        }
        TheoremHorizon::Finite(t) => {
            let terms = t.saturating_sub(1);
            let plain = geometric(b, terms);
            let damped = geometric(b * da, terms);
            let increasing_lhs = dp * (dmin * b * plain + 1.0);
            let increasing_rhs = da * damped;
            let nonincreasing_lhs = dp * (dmin * b * damped + 1.0);
            let nonincreasing_rhs = da * plain;
            TheoremReport {
                horizon,
                cond_increasing: increasing_lhs <= increasing_rhs,
                cond_nonincreasing: nonincreasing_lhs >= nonincreasing_rhs,
                increasing_lhs,
                increasing_rhs,
                nonincreasing_lhs,
                nonincreasing_rhs,
                delta1: None,
                delta2: Some(dmin),
                delta3: None,
                delta4: Some(dmin),
            }
        }
    }
}

/// Value function of the subsidised arm at an arbitrary belief.
///
/// Along a passive stretch the belief path is deterministic, so the optimal
/// value is the best "wait `j` epochs then act" plan (or never act), where
/// acting continues from `V(P^a_{0,1})` / `V(P^a_{1,1})`. Those two head values
/// are computed by backward induction (finite) or fixed-point iteration
/// (infinite).
#[derive(Debug, Clone)]
pub struct BeliefValueFn {
    arm: ArmParams,
    discount: f64,
    subsidy: f64,
    stages: Option<u32>,
    /// `heads[m] = (V_m(P^a_01), V_m(P^a_11))`; a single entry when infinite.
    heads: Vec<(f64, f64)>,
    wait_cap: u32,
}

impl BeliefValueFn {
    pub fn finite(arm: &ArmParams, discount: f64, subsidy: f64, stages: u32) -> Self {
        let mut f = Self { arm: *arm, discount, subsidy, stages: Some(stages), heads: vec![(0.0, 0.0)], wait_cap: 0 };
        for m in 1..stages {
            let h = (f.value_with(arm.active(0), m), f.value_with(arm.active(1), m));
            f.heads.push(h);
        }
        f
    }

    /// Infinite horizon; requires `discount < 1`.
    pub fn infinite(arm: &ArmParams, discount: f64, subsidy: f64) -> Self {
        assert!(discount < 1.0, "infinite horizon needs discounting");
        let reach = (1.0 + subsidy.abs()) / (1.0 - discount);
        let wait_cap = ((1e-15 / reach).ln() / discount.ln()).ceil().clamp(1.0, 1e6) as u32;
        let mut f = Self { arm: *arm, discount, subsidy, stages: None, heads: vec![(0.0, 0.0)], wait_cap };
        for _ in 0..1_000_000 {
            let next = (f.value(arm.active(0)), f.value(arm.active(1)));
            let change = (next.0 - f.heads[0].0).abs().max((next.1 - f.heads[0].1).abs());
            f.heads[0] = next;
            if change <= 1e-14 * (1.0 + next.0.abs().max(next.1.abs())) {
                break;
            }
        }
        f
    }

    fn head(&self, remaining_after: u32) -> (f64, f64) {
        match self.stages {
            Some(_) => self.heads[remaining_after as usize],
            None => self.heads[0],
        }
    }

    fn act(&self, x: f64, remaining_after: u32) -> f64 {
        let (v0, v1) = self.head(remaining_after);
        x + self.discount * (x * v1 + (1.0 - x) * v0)
    }

    /// Discounted sum of `λ + τ^i(x)` over `i >= 0` for the passive forever plan.
    fn passive_forever(&self, x: f64) -> f64 {
        let b = self.discount;
        let r = self.arm.passive_gap();
        let star = stationary_belief(&self.arm).unwrap_or(x);
        self.subsidy / (1.0 - b) + star / (1.0 - b) + (x - star) / (1.0 - b * r)
    }

    fn value_with(&self, omega: f64, stages: u32) -> f64 {
        if stages == 0 {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        let mut acc = 0.0;
        let mut scale = 1.0;
        let mut x = omega;
        for j in 0..stages {
            best = best.max(acc + scale * self.act(x, stages - j - 1));
            acc += scale * (self.subsidy + x);
            scale *= self.discount;
            x = passive_propagate(x, 1, &self.arm);
        }
        best.max(acc)
    }

    pub fn value(&self, omega: f64) -> f64 {
        match self.stages {
            Some(n) => self.value_with(omega, n),
            None => {
                let mut best = self.passive_forever(omega);
                let mut acc = 0.0;
                let mut scale = 1.0;
                let mut x = omega;
                for _ in 0..self.wait_cap {
                    best = best.max(acc + scale * self.act(x, 0));
                    acc += scale * (self.subsidy + x);
                    scale *= self.discount;
                    x = passive_propagate(x, 1, &self.arm);
                }
                best
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueBoundsReport {
    pub pairs_checked: usize,
    pub lower_factor: f64,
    pub upper_factor: f64,
    /// Largest amount by which either bound was exceeded (0 when none).
    pub max_violation: f64,
    /// Pairs exceeding a bound by more than `1e-8`.
    pub violations: usize,
}

pub const VALUE_BOUND_TOL: f64 = 1e-8;

/// Checks `(ω1-ω2) Σ_{t<T} β^t d_a^t <= V(ω1) - V(ω2) <= (ω1-ω2) Σ_{t<T} β^t`
/// (`d_a = P^a_11 - P^a_01`; infinite sums when the horizon is infinite) for
/// each pair with `ω1 >= ω2`.
pub fn check_value_bounds(
    arm: &ArmParams,
    discount: f64,
    horizon: TheoremHorizon,
    subsidy: f64,
    pairs: &[(f64, f64)],
) -> ValueBoundsReport {
    let da = arm.active_gap();
    let (value_fn, lower_factor, upper_factor) = match horizon {
        TheoremHorizon::Finite(t) => (
            BeliefValueFn::finite(arm, discount, subsidy, t),
            geometric(discount * da, t),
            geometric(discount, t),
        ),
        TheoremHorizon::Infinite => (
            BeliefValueFn::infinite(arm, discount, subsidy),
            1.0 / (1.0 - discount * da),
            1.0 / (1.0 - discount),
        ),
    };
    let mut max_violation = 0.0f64;
    let mut violations = 0;
    for &(w1, w2) in pairs {
        debug_assert!(w1 >= w2, "pairs must be ordered");
        let diff = value_fn.value(w1) - value_fn.value(w2);
        let gap = w1 - w2;
        let excess = (gap * lower_factor - diff).max(diff - gap * upper_factor).max(0.0);
        if excess > VALUE_BOUND_TOL {
            violations += 1;
        }
        max_violation = max_violation.max(excess);
    }
    ValueBoundsReport { pairs_checked: pairs.len(), lower_factor, upper_factor, max_violation, violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralConditionReport {
    pub change_a: f64,
    pub change_b: f64,
    pub sum: f64,
    pub holds: bool,
}

/// Two-arm exchange condition: the change in value for the fairness-critical
/// arm `A` (belief `ω_i`, index `λ_i`) when its activation moves one epoch
/// earlier, plus the change for the displaced arm `B` (`ω_j`, `λ_j`). Values
/// at beliefs 0 and 1 come from the infinite-horizon belief value function.
pub fn check_general_condition(
    arm_a: &ArmParams,
    arm_b: &ArmParams,
    beliefs: (f64, f64),
    subsidies: (f64, f64),
    discount: f64,
) -> GeneralConditionReport {
    let (wi, wj) = beliefs;
    let (li, lj) = subsidies;
    let b = discount;
    let change = |arm: &ArmParams, lambda: f64| -> (f64, f64) {
        let v = BeliefValueFn::infinite(arm, discount, lambda);
        (v.value(1.0), v.value(0.0))
    };
    let (vi1, vi0) = change(arm_a, li);
    let (vj1, vj0) = change(arm_b, lj);
    let a = arm_a;
    let change_a = li * (1.0 - b)
        + b * (wi * (a.passive(1) - a.active(1)) + (1.0 - wi) * (a.passive(0) - a.active(0)))
        + b * b * ((a.active(0) - a.passive(0)) * vi1 + (a.passive(0) - a.active(0)) * vi0);
    let c = arm_b;
    let change_b = lj * (b - 1.0)
        - b * (wj * (c.passive(1) - c.active(1)) - (1.0 - wj) * (c.passive(0) - c.active(0)))
        + b * b * ((c.active(0) - c.passive(0)) * vj1 + (c.passive(0) - c.active(0)) * vj0);
    let sum = change_a + change_b;
    GeneralConditionReport { change_a, change_b, sum, holds: sum >= 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm() -> ArmParams {
        ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.8).unwrap()
    }

    #[test]
    fn theorem_conditions_symmetric_case() {
        let a = ArmParams::from_good_probs_unchecked(0.2, 0.8, 0.2, 0.8).unwrap();
        let r = check_theorem_conditions(&a, 0.9, TheoremHorizon::Infinite);
        assert!((r.delta3.unwrap() - 0.6).abs() < 1e-15);
        assert!((r.increasing_rhs - 0.6).abs() < 1e-15);
    }

    #[test]
    fn theorem_conditions_at_zero_discount() {
        for (pa01, pa11, pp01, pp11) in [(0.4, 0.9, 0.2, 0.8), (0.5, 0.95, 0.1, 0.9), (0.3, 0.95, 0.2, 0.3)] {
            let a = ArmParams::from_good_probs(pa01, pa11, pp01, pp11).unwrap();
            let r = check_theorem_conditions(&a, 0.0, TheoremHorizon::Infinite);
            assert_eq!(r.cond_increasing, a.passive_gap() <= a.active_gap());
        }
    }

    #[test]
    fn theorem_delta3_is_min_gap() {
        let a = arm();
        let r = check_theorem_conditions(&a, 0.95, TheoremHorizon::Infinite);
        assert_eq!(r.delta3, Some(a.passive_gap().min(a.active_gap())));
        let f = check_theorem_conditions(&a, 0.95, TheoremHorizon::Finite(5));
        assert_eq!(f.delta2, f.delta4);
        assert!(f.delta1.is_none());
    }

    #[test]
    fn belief_value_matches_chain_value_iteration() {
        let a = arm();
        for lambda in [-0.2, 0.1, 0.4] {
            let stages = 6;
            let vf = BeliefValueFn::finite(&a, 0.9, lambda, stages);
            let mdp = BeliefChainMdp::new(a, stages + 2, 0.9, lambda);
            let sol = value_iteration(&mdp, Horizon::Stages(stages)).unwrap();
            for s in 0..2 {
                for u in 1..=3 {
                    let w = crate::arm::belief_u_step(s, u, &a);
                    assert!((vf.value(w) - sol.value(s, u)).abs() < 1e-12);
                }
            }
            let vi = BeliefValueFn::infinite(&a, 0.9, lambda);
            let mdp = BeliefChainMdp::new(a, 400, 0.9, lambda);
            let sol = value_iteration(&mdp, Horizon::infinite()).unwrap();
            for s in 0..2 {
                let w = crate::arm::belief_u_step(s, 2, &a);
                assert!((vi.value(w) - sol.value(s, 2)).abs() < 1e-8, "{} {}", vi.value(w), sol.value(s, 2));
            }
        }
    }

    #[test]
    fn value_bounds_trivial_cases() {
        let a = arm();
        let r = check_value_bounds(&a, 0.9, TheoremHorizon::Finite(4), 0.2, &[(0.3, 0.3)]);
        assert_eq!(r.max_violation, 0.0);
        let vf = BeliefValueFn::finite(&a, 0.9, 0.2, 1);
        assert!(((vf.value(0.8) - vf.value(0.3)) - 0.5).abs() < 1e-15);
        let r = check_value_bounds(&a, 0.9, TheoremHorizon::Finite(1), 0.2, &[(0.8, 0.3)]);
        assert_eq!(r.lower_factor, 1.0);
        assert_eq!(r.upper_factor, 1.0);
        assert!(r.max_violation < 1e-15);
    }

    #[test]
    fn general_condition_at_zero_discount() {
        let a = arm();
        let b = ArmParams::from_good_probs(0.5, 0.7, 0.1, 0.6).unwrap();
        let r = check_general_condition(&a, &b, (0.3, 0.6), (0.25, 0.4), 0.0);
        assert!((r.change_a - 0.25).abs() < 1e-15);
        assert!((r.change_b + 0.4).abs() < 1e-15);
        assert!(!r.holds);
        let r = check_general_condition(&a, &b, (0.3, 0.6), (0.5, 0.4), 0.0);
        assert!(r.holds);
        let again = check_general_condition(&a, &b, (0.3, 0.6), (0.5, 0.4), 0.0);
        assert_eq!(r, again);
    }

    #[test]
    fn indexability_extremes() {
        let a = arm();
        let r = check_indexability(&a, &[-50.0, -10.0, 0.0, 0.2, 10.0, 50.0], 0.95, 8).unwrap();
        assert!(r.pass);
        let base = BeliefChainMdp::new(a, 8, 0.95, -50.0);
        assert!(value_iteration(&base, Horizon::infinite()).unwrap().actions().iter().all(|x| *x == Action::Active));
    }
}
