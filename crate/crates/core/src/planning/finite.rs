//! Finite-horizon index by logistic interpolation between the one-step index
//! and the infinite-horizon index.
//!
//! `W_T = A / (1 + e^{-kT}) + C` with `A = 2 TW`, `C = -TW` and `k` chosen so
//! that `W_1` equals the closed-form one-step index. This pins `W_0 = 0` and
//! `W_T -> TW`.

use serde::{Deserialize, Serialize};

use crate::arm::ArmParams;
use crate::planning::search::one_step_index;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteIndex {
    pub value: f64,
    /// The logistic fit is undefined for this `(TW, W_1)` pair; `value` came
    /// from the fallback rule.
    pub degenerate: bool,
}

/// Logistic growth rate, or `None` when `TW <= W_1` or either is non-positive.
pub fn logistic_rate(tw: f64, w1: f64) -> Option<f64> {
    if tw <= 0.0 || w1 <= 0.0 || tw <= w1 {
        return None;
    }
    Some(-(2.0 * tw / (w1 + tw) - 1.0).ln())
}

/// `W_T(ω)` for residual horizon `residual`, given `tw = TW(ω)`.
///
/// When the fit is undefined the value is `0` if `TW` or `W_1` is not
/// positive, otherwise the capped line `min(W_1 T, TW)`.
pub fn finite_whittle(arm: &ArmParams, omega: f64, discount: f64, residual: u64, tw: f64) -> FiniteIndex {
    if residual == 0 {
        return FiniteIndex { value: 0.0, degenerate: false };
    }
    let w1 = one_step_index(arm, omega, discount);
    match logistic_rate(tw, w1) {
        Some(k) => {
            let value = 2.0 * tw / (1.0 + (-k * residual as f64).exp()) - tw;
            FiniteIndex { value, degenerate: false }
        }
        None if tw <= 0.0 || w1 <= 0.0 => FiniteIndex { value: 0.0, degenerate: true },
        None => FiniteIndex { value: (w1 * residual as f64).min(tw), degenerate: true },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm() -> ArmParams {
        ArmParams::from_good_probs(0.5, 0.9, 0.2, 0.6).unwrap()
    }

    #[test]
    fn anchors() {
        let a = arm();
        let w = 0.7;
        let w1 = one_step_index(&a, w, 0.9);
        let tw = 0.8;
        assert_eq!(finite_whittle(&a, w, 0.9, 0, tw).value, 0.0);
        let one = finite_whittle(&a, w, 0.9, 1, tw);
        assert!(!one.degenerate);
        assert!((one.value - w1).abs() < 1e-12);
        assert!((finite_whittle(&a, w, 0.9, 1_000_000, tw).value - tw).abs() < 1e-6);
    }

    #[test]
    fn monotone_and_bounded() {
        let a = arm();
        let mut prev = 0.0;
        for t in 0..200 {
            let v = finite_whittle(&a, 0.4, 0.95, t, 0.6).value;
            assert!(v >= prev - 1e-15 && v <= 0.6 + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn degenerate_regimes() {
        let a = arm();
        let w1 = one_step_index(&a, 0.5, 0.9);
        let r = finite_whittle(&a, 0.5, 0.9, 3, -0.1);
        assert!(r.degenerate);
        assert_eq!(r.value, 0.0);
        let r = finite_whittle(&a, 0.5, 0.9, 1, w1 * 0.5);
        assert!(r.degenerate);
        assert_eq!(r.value, w1 * 0.5);
        assert!(logistic_rate(w1, w1).is_none());
    }
}
