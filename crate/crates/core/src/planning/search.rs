//! Reference Whittle index solver: bisection on the subsidy, each probe solved
//! by [`value_iteration`]. Structure-free and slow; anchors the tests.

use crate::arm::ArmParams;
use crate::error::{Error, Result};
use crate::planning::value::{value_iteration, BeliefChainMdp, Horizon, TailRule};

pub const BISECTION_TOL: f64 = 1e-8;
pub const BISECTION_MAX_ITER: usize = 200;
/// Largest residual horizon accepted by [`exact_finite_whittle`].
pub const EXACT_FINITE_CAP: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub chain_len: u32,
    pub tol: f64,
    pub max_iter: usize,
    pub tail: TailRule,
}

impl SearchOptions {
    pub fn with_chain(chain_len: u32) -> Self {
        Self { chain_len, tol: BISECTION_TOL, max_iter: BISECTION_MAX_ITER, tail: TailRule::SelfLoop }
    }

    /// Chain of `window + 1` states whose last state must act: the arm is
    /// activated at the latest one epoch after a full window.
    pub fn windowed(window: u32) -> Self {
        Self { tail: TailRule::ForcedActive, ..Self::with_chain(window + 1) }
    }
}

fn bracket(discount: f64, horizon: Horizon) -> f64 {
    if discount < 1.0 {
        1.0 / (1.0 - discount)
    } else {
        match horizon {
            Horizon::Stages(n) => n.max(1) as f64,
            Horizon::Infinite { .. } => f64::INFINITY,
        }
    }
}

/// Least subsidy at which passive is weakly preferred in `(s, u)`.
pub fn whittle_binary_search(
    arm: &ArmParams,
    s: usize,
    u: u32,
    discount: f64,
    horizon: Horizon,
    opts: SearchOptions,
) -> Result<f64> {
    let base = BeliefChainMdp::new(*arm, opts.chain_len, discount, 0.0).with_tail(opts.tail);
    let advantage = |lambda: f64| -> Result<f64> {
        let sol = value_iteration(&base.with_subsidy(lambda), horizon)?;
        Ok(sol.advantage(s, u))
    };
    let width = bracket(discount, horizon);
    let (mut lo, mut hi) = (-width, width);
    if !(advantage(lo)? < 0.0 && advantage(hi)? >= 0.0) {
        return Err(Error::NonIndexableSuspect { lo, hi });
    }
    for _ in 0..opts.max_iter {
        if hi - lo <= opts.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if advantage(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact finite-horizon index with `residual` epochs remaining after the
/// current one (so `residual = 0` is a single reward stage and gives 0).
pub fn exact_finite_whittle(arm: &ArmParams, s: usize, u: u32, discount: f64, residual: u32) -> Result<f64> {
    if residual > EXACT_FINITE_CAP {
        return Err(Error::HorizonTooLong { cap: EXACT_FINITE_CAP, got: residual });
    }
    // long enough that no reachable state hits the truncated tail
    let opts = SearchOptions::with_chain(u + residual + 2);
    whittle_binary_search(arm, s, u, discount, Horizon::Stages(residual + 1), opts)
}

/// Closed-form one-step index `β(ω(P^a_11 - P^p_11) + (1-ω)(P^a_01 - P^p_01))`.
pub fn one_step_index(arm: &ArmParams, omega: f64, discount: f64) -> f64 {
    discount * (omega * (arm.active(1) - arm.passive(1)) + (1.0 - omega) * (arm.active(0) - arm.passive(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::belief_u_step;

    #[test]
    fn zero_residual_index_is_zero() {
        let arm = ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.8).unwrap();
        for u in 1..4 {
            let l = exact_finite_whittle(&arm, 0, u, 0.9, 0).unwrap();
            assert!(l.abs() < 1e-8, "{l}");
        }
    }

    #[test]
    fn one_residual_matches_closed_form() {
        let arm = ArmParams::from_good_probs(0.5, 0.9, 0.2, 0.6).unwrap();
        // (β=0.9, ω=1): 0.9 * (0.9 - 0.6) = 0.27
        assert!((one_step_index(&arm, 1.0, 0.9) - 0.27).abs() < 1e-15);
        for s in 0..2 {
            for u in 1..5 {
                let w = belief_u_step(s, u, &arm);
                let exact = exact_finite_whittle(&arm, s, u, 0.9, 1).unwrap();
                assert!((exact - one_step_index(&arm, w, 0.9)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn residual_cap_enforced() {
        let arm = ArmParams::from_good_probs(0.5, 0.9, 0.2, 0.6).unwrap();
        assert!(matches!(exact_finite_whittle(&arm, 0, 1, 0.9, 9), Err(Error::HorizonTooLong { .. })));
    }

    #[test]
    fn infinite_index_separates_actions() {
        let arm = ArmParams::from_good_probs(0.4, 0.9, 0.2, 0.8).unwrap();
        let opts = SearchOptions::with_chain(10);
        let l = whittle_binary_search(&arm, 0, 3, 0.95, Horizon::infinite(), opts).unwrap();
        let mdp = BeliefChainMdp::new(arm, 10, 0.95, l + 1e-6);
        assert!(value_iteration(&mdp, Horizon::infinite()).unwrap().advantage(0, 3) >= 0.0);
        let mdp = mdp.with_subsidy(l - 1e-6);
        assert!(value_iteration(&mdp, Horizon::infinite()).unwrap().advantage(0, 3) < 0.0);
    }
}
