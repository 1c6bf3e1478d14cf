//! Action-selection policies.
//!
//! The simulator owns the observation state `(s, u)` of every arm and the
//! fairness tracker; a policy sees them through [`Decision`] and reports the
//! arms to activate. Only policies that ask for it receive the true states.

mod baseline;
mod qlearn;
mod select;
mod thompson;
mod whittle;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arm::{belief_u_step, ArmParams};
use crate::error::{Error, Result};
use crate::fairness::{Demand, FairnessSpec};
use crate::planning::IndexTable;

pub use baseline::{fully_observable_index, myopic_gap, MyopicPolicy, NoIntervention, OraclePolicy, RandomPolicy};
pub use qlearn::{topk_equals_argmax_check, FawtQ, QTable};
pub use select::{fair_top_k, rank_desc, urgent_arms, Selection};
pub use thompson::{BetaShape, FawtU, PosteriorSet};
pub use whittle::{IndexSource, WhittlePolicy, PLAIN_WHITTLE_WINDOW};

/// What the decision-maker knows about each arm: last revealed state and
/// epochs since that revelation (1 right after activation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsState {
    pub last_obs: Vec<usize>,
    pub steps: Vec<u32>,
}

impl ObsState {
    pub fn new(last_obs: Vec<usize>) -> Self {
        let steps = vec![1; last_obs.len()];
        Self { last_obs, steps }
    }

    pub fn len(&self) -> usize {
        self.last_obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last_obs.is_empty()
    }

    pub fn belief(&self, arm: usize, params: &ArmParams) -> f64 {
        belief_u_step(self.last_obs[arm], self.steps[arm], params)
    }

    /// Activated arms restart at `(revealed, 1)`, the rest age by one epoch.
    pub fn update(&mut self, activated: &[usize], revealed: &[usize]) {
        self.steps.iter_mut().for_each(|u| *u = u.saturating_add(1));
        for (&i, &s) in activated.iter().zip(revealed) {
            self.last_obs[i] = s;
            self.steps[i] = 1;
        }
    }
}

/// Everything a policy may look at when choosing the arms for epoch `t`.
#[derive(Debug, Clone, Copy)]
pub struct Decision<'a> {
    /// Current epoch, from 1.
    pub t: u64,
    pub horizon: u64,
    pub budget: usize,
    pub obs: &'a ObsState,
    /// Fairness units due now and the budget-aware look-ahead.
    pub demand: &'a Demand,
    pub fairness: Option<&'a FairnessSpec>,
    /// Present only for policies with [`Policy::wants_true_state`].
    pub true_states: Option<&'a [usize]>,
}

impl Decision<'_> {
    pub fn n_arms(&self) -> usize {
        self.obs.len()
    }

    /// Epochs left after the current one.
    pub fn residual(&self) -> u64 {
        self.horizon.saturating_sub(self.t)
    }
}

/// What the policy learns after acting at epoch `t`.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub t: u64,
    pub activated: &'a [usize],
    /// State revealed by each activated arm, in the order of `activated`.
    pub revealed: &'a [usize],
    pub before: &'a ObsState,
    pub after: &'a ObsState,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn wants_true_state(&self) -> bool {
        false
    }

    fn select(&mut self, d: &Decision<'_>) -> Selection;

    fn observe(&mut self, _fb: &Feedback<'_>) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Whittle top-k without fairness.
    #[serde(rename = "whittle")]
    Whittle,
    #[serde(rename = "fawt")]
    Fawt,
    #[serde(rename = "fawt-u")]
    FawtU,
    #[serde(rename = "fawt-q")]
    FawtQ,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "myopic")]
    Myopic,
    #[serde(rename = "cmyopic")]
    ConstrainedMyopic,
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "none")]
    NoIntervention,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 9] = [
        PolicyKind::Whittle,
        PolicyKind::Fawt,
        PolicyKind::FawtU,
        PolicyKind::FawtQ,
        PolicyKind::Random,
        PolicyKind::Myopic,
        PolicyKind::ConstrainedMyopic,
        PolicyKind::Oracle,
        PolicyKind::NoIntervention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Whittle => "whittle",
            PolicyKind::Fawt => "fawt",
            PolicyKind::FawtU => "fawt-u",
            PolicyKind::FawtQ => "fawt-q",
            PolicyKind::Random => "random",
            PolicyKind::Myopic => "myopic",
            PolicyKind::ConstrainedMyopic => "cmyopic",
            PolicyKind::Oracle => "oracle",
            PolicyKind::NoIntervention => "none",
        }
    }

    /// Whether the policy is expected to keep every fairness window.
    pub fn is_fair(self) -> bool {
        matches!(self, PolicyKind::Fawt | PolicyKind::FawtU | PolicyKind::FawtQ | PolicyKind::ConstrainedMyopic)
    }

    /// Whether the policy reads the Whittle index tables.
    pub fn uses_index_tables(self) -> bool {
        matches!(self, PolicyKind::Whittle | PolicyKind::Fawt)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

/// Hyperparameters shared by all policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Planning discount.
    pub beta: f64,
    /// Q-learning discount.
    pub gamma: f64,
    /// Exploration rate at the first epoch.
    pub epsilon: f64,
    /// Exploration rate at the last epoch; equal to `epsilon` for a constant rate.
    pub epsilon_end: f64,
    /// Beta prior shape used for every transition probability.
    pub prior: (f64, f64),
    pub index_source: IndexSource,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            beta: 0.95,
            gamma: 0.95,
            epsilon: 0.1,
            epsilon_end: 0.1,
            prior: (1.0, 1.0),
            index_source: IndexSource::Infinite,
        }
    }
}

/// Read-only planning inputs shared by every run of one experiment.
#[derive(Debug, Clone)]
pub struct Planning {
    pub arms: Arc<Vec<ArmParams>>,
    /// Whittle tables per arm, built with the fairness window (or
    /// [`PLAIN_WHITTLE_WINDOW`] without fairness).
    pub tables: Option<Arc<Vec<IndexTable>>>,
    /// Fully observable index per arm and state.
    pub oracle: Option<Arc<Vec<[f64; 2]>>>,
}

impl Planning {
    /// Precomputes whatever `kinds` need.
    pub fn prepare(arms: Vec<ArmParams>, kinds: &[PolicyKind], fairness: Option<&FairnessSpec>, beta: f64) -> Result<Self> {
        let arms = Arc::new(arms);
        let tables = if kinds.iter().any(|k| k.uses_index_tables()) {
            Some(Arc::new(whittle::index_tables(&arms, fairness)?))
        } else {
            None
        };
        let oracle = if kinds.contains(&PolicyKind::Oracle) {
            let index = arms
                .iter()
                .map(|a| Ok([fully_observable_index(a, 0, beta)?, fully_observable_index(a, 1, beta)?]))
                .collect::<Result<Vec<_>>>()?;
            Some(Arc::new(index))
        } else {
            None
        };
        Ok(Self { arms, tables, oracle })
    }
}

/// Builds a fresh policy instance for one run.
pub fn build_policy(
    kind: PolicyKind,
    planning: &Planning,
    fairness: Option<&FairnessSpec>,
    params: &PolicyParams,
    seed: u64,
) -> Result<Box<dyn Policy>> {
    let missing = || Error::Config(format!("planning inputs for {kind} were not prepared"));
    let window = fairness.map(|f| f.window);
    Ok(match kind {
        PolicyKind::Whittle | PolicyKind::Fawt => {
            let tables = planning.tables.clone().ok_or_else(missing)?;
            let fair = kind == PolicyKind::Fawt;
            Box::new(WhittlePolicy::new(planning.arms.clone(), tables, fair, params.index_source, params.beta))
        }
        PolicyKind::FawtU => Box::new(FawtU::new(planning.arms.len(), window, params, seed)),
        PolicyKind::FawtQ => Box::new(FawtQ::new(planning.arms.len(), window, params, seed)),
        PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
        PolicyKind::Myopic => Box::new(MyopicPolicy::new(planning.arms.clone(), false)),
        PolicyKind::ConstrainedMyopic => Box::new(MyopicPolicy::new(planning.arms.clone(), true)),
        PolicyKind::Oracle => Box::new(OraclePolicy::new(planning.oracle.clone().ok_or_else(missing)?)),
        PolicyKind::NoIntervention => Box::new(NoIntervention),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!(matches!("ucb".parse::<PolicyKind>(), Err(Error::UnknownPolicy(_))));
        assert_eq!(serde_json::to_string(&PolicyKind::FawtU).unwrap(), "\"fawt-u\"");
    }

    #[test]
    fn obs_update() {
        let mut obs = ObsState::new(vec![0, 1, 1]);
        obs.update(&[2], &[0]);
        assert_eq!(obs.steps, vec![2, 2, 1]);
        assert_eq!(obs.last_obs, vec![0, 1, 0]);
    }
}
