//! Batch runs of the planning checkers over random instances, as driven by
//! `fair-rmab verify`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{belief_u_step, generate_instance, ArmParams, Correlation, InstanceSpec};
use crate::error::{Error, Result};
use crate::planning::{
    check_indexability, check_theorem_conditions, check_value_bounds, exact_finite_whittle, fast_whittle_infinite,
    finite_whittle, one_step_index, whittle_binary_search, Horizon, SearchOptions, TheoremHorizon,
    AVERAGE_REWARD_PROXY,
};
use crate::policy::topk_equals_argmax_check;

pub const DEFAULT_INSTANCES: usize = 200;
/// Discount used by the indexability, decay and bound suites.
pub const CHECK_DISCOUNT: f64 = 0.95;
/// Belief-chain length for the indexability sweep.
pub const INDEXABILITY_CHAIN: u32 = 20;
/// Largest `u` probed by the decay suite.
pub const DECAY_MAX_U: u32 = 5;
/// Decay is checked for `λ_{T+1} > λ_T` with `T in 1..=DECAY_MAX_T`.
pub const DECAY_MAX_T: u32 = 6;
/// Chain length for the infinite-horizon subsidy of the bound suite.
pub const BOUND_CHAIN: u32 = 200;
pub const ORACLE_TOL: f64 = 1e-3;
pub const ORACLE_WINDOW: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Indexability,
    Decay,
    Bounds,
    Thm4,
    Anchors,
    Oracle,
    Conditions,
}

impl Check {
    pub const ALL: [Check; 7] =
        [Check::Indexability, Check::Decay, Check::Bounds, Check::Thm4, Check::Anchors, Check::Oracle, Check::Conditions];

    pub fn name(self) -> &'static str {
        match self {
            Check::Indexability => "indexability",
            Check::Decay => "decay",
            Check::Bounds => "bounds",
            Check::Thm4 => "thm4",
            Check::Anchors => "anchors",
            Check::Oracle => "oracle",
            Check::Conditions => "conditions",
        }
    }

    /// Hard checks assert invariants; the others report rates of
    /// sufficient conditions or approximations.
    pub fn is_hard(self) -> bool {
        matches!(self, Check::Decay | Check::Bounds | Check::Thm4 | Check::Anchors)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub checked: usize,
    pub failures: usize,
    pub detail: String,
}

impl CheckOutcome {
    pub fn pass_rate(&self) -> f64 {
        if self.checked == 0 {
            return 1.0;
        }
        1.0 - self.failures as f64 / self.checked as f64
    }

    /// A hard check with any failure.
    pub fn is_violation(&self) -> bool {
        self.check.is_hard() && self.failures > 0
    }
}

/// Positively correlated generator arms for the suites.
pub fn suite_arms(instances: usize, seed: u64) -> Result<Vec<ArmParams>> {
    let spec = InstanceSpec {
        n_arms: instances.max(1),
        budget: 1,
        horizon: 1,
        discount: CHECK_DISCOUNT,
        seed,
        correlation: Correlation::Positive,
    };
    let mut arms = generate_instance(&spec)?;
    arms.truncate(instances);
    Ok(arms)
}

/// 200 evenly spaced subsidies in `[-2, 2]`.
pub fn indexability_grid() -> Vec<f64> {
    (0..200).map(|i| -2.0 + 4.0 * i as f64 / 199.0).collect()
}

pub fn run_check(check: Check, instances: usize, seed: u64) -> Result<CheckOutcome> {
    let arms = suite_arms(instances, seed)?;
    match check {
        Check::Indexability => {
            let grid = indexability_grid();
            let mut failures = 0;
            for arm in &arms {
                failures += usize::from(!check_indexability(arm, &grid, CHECK_DISCOUNT, INDEXABILITY_CHAIN)?.pass);
            }
            Ok(CheckOutcome { check, checked: arms.len(), failures, detail: "arms failing the subsidy sweep".into() })
        }
        Check::Decay => {
            let grid = indexability_grid();
            let (mut checked, mut failures) = (0, 0);
            for arm in &arms {
                if !check_indexability(arm, &grid, CHECK_DISCOUNT, INDEXABILITY_CHAIN)?.pass {
                    continue;
                }
                for s in 0..2 {
                    for u in 1..=DECAY_MAX_U {
                        let lambdas = (1..=DECAY_MAX_T + 1)
                            .map(|t| exact_finite_whittle(arm, s, u, CHECK_DISCOUNT, t))
                            .collect::<Result<Vec<_>>>()?;
                        checked += 1;
                        let ok = lambdas[0] > 0.0 && lambdas.windows(2).all(|w| w[1] > w[0]);
                        failures += usize::from(!ok);
                    }
                }
            }
            Ok(CheckOutcome { check, checked, failures, detail: "(arm, s, u) with a non-decaying index".into() })
        }
        Check::Bounds => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB0);
            let (mut checked, mut failures, mut worst) = (0, 0, 0.0f64);
            for arm in &arms {
                let pairs = belief_pairs(&mut rng, 100);
                let horizons = (2..=6).map(TheoremHorizon::Finite).chain([TheoremHorizon::Infinite]);
                for h in horizons {
                    let r = check_value_bounds(arm, CHECK_DISCOUNT, h, bound_subsidy(arm, h)?, &pairs);
                    checked += r.pairs_checked;
                    failures += r.violations;
                    worst = worst.max(r.max_violation);
                }
            }
            Ok(CheckOutcome { check, checked, failures, detail: format!("belief pairs at the index subsidy; max excess {worst:.3e}") })
        }
        Check::Thm4 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x74);
            let trials = 500;
            let mut failures = 0;
            for _ in 0..trials {
                let n = rng.random_range(1..=8);
                let k = rng.random_range(0..=n);
                let q: Vec<[f64; 2]> =
                    (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
                failures += usize::from(!topk_equals_argmax_check(&q, k));
            }
            Ok(CheckOutcome { check, checked: trials, failures, detail: "random Q-tables, N <= 8".into() })
        }
        Check::Anchors => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA7);
            let (mut checked, mut failures) = (0, 0);
            for arm in &arms {
                let table = fast_whittle_infinite(arm, ORACLE_WINDOW)?.table;
                for _ in 0..5 {
                    let s = rng.random_range(0..2);
                    let u = rng.random_range(1..=ORACLE_WINDOW);
                    let omega = belief_u_step(s, u, arm);
                    let tw = table.get(s, u);
                    let w1 = one_step_index(arm, omega, CHECK_DISCOUNT);
                    let at = |t: u64| finite_whittle(arm, omega, CHECK_DISCOUNT, t, tw).value;
                    let fit = finite_whittle(arm, omega, CHECK_DISCOUNT, 1, tw);
                    let ok = at(0) == 0.0
                        && (fit.degenerate || (fit.value - w1).abs() <= 1e-12)
                        && (fit.degenerate || (at(1_000_000) - tw).abs() <= 1e-6);
                    checked += 1;
                    failures += usize::from(!ok);
                }
            }
            Ok(CheckOutcome { check, checked, failures, detail: "(arm, belief) anchor triples".into() })
        }
        Check::Oracle => {
            let (mut checked, mut failures) = (0, 0);
            for arm in &arms {
                let table = fast_whittle_infinite(arm, ORACLE_WINDOW)?.table;
                for s in 0..2 {
                    for u in 1..=ORACLE_WINDOW {
                        let opts = SearchOptions::windowed(ORACLE_WINDOW);
                        let oracle =
                            whittle_binary_search(arm, s, u, AVERAGE_REWARD_PROXY, Horizon::infinite(), opts)?;
                        checked += 1;
                        failures += usize::from((table.get(s, u) - oracle).abs() > ORACLE_TOL);
                    }
                }
            }
            Ok(CheckOutcome {
                check,
                checked,
                failures,
                detail: format!("states off the discounted oracle by more than {ORACLE_TOL}"),
            })
        }
        Check::Conditions => {
            let mut holds = 0;
            for arm in &arms {
                let r = check_theorem_conditions(arm, CHECK_DISCOUNT, TheoremHorizon::Infinite);
                holds += usize::from(r.cond_increasing || r.cond_nonincreasing);
            }
            Ok(CheckOutcome {
                check,
                checked: arms.len(),
                failures: arms.len() - holds,
                detail: "arms meeting neither late-activation condition".into(),
            })
        }
    }
}

/// Subsidy at which the value bounds are checked: the index of state
/// `(0, 1)` for the same horizon (`T` stages, or infinite).
pub fn bound_subsidy(arm: &ArmParams, horizon: TheoremHorizon) -> Result<f64> {
    match horizon {
        TheoremHorizon::Finite(t) => exact_finite_whittle(arm, 0, 1, CHECK_DISCOUNT, t.saturating_sub(1)),
        TheoremHorizon::Infinite => {
            let opts = SearchOptions::with_chain(BOUND_CHAIN);
            whittle_binary_search(arm, 0, 1, CHECK_DISCOUNT, Horizon::infinite(), opts)
        }
    }
}

/// Ordered pairs `(ω1, ω2)` with `ω1 >= ω2`.
pub fn belief_pairs<R: Rng>(rng: &mut R, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            (a.max(b), a.min(b))
        })
        .collect()
}
