use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arm::ArmParams;
use crate::error::Result;
use crate::fairness::{Demand, FairnessSpec};
use crate::planning::{fast_whittle_infinite, finite_whittle, IndexTable};
use crate::policy::select::{fair_top_k, Selection};
use crate::policy::{Decision, Policy, PolicyKind};

/// Chain length of the index tables when no fairness window bounds it.
pub const PLAIN_WHITTLE_WINDOW: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSource {
    /// Infinite-horizon index `TW(ω)`.
    Infinite,
    /// Logistic finite-horizon index `W_T(ω)` with the residual horizon.
    Finite,
}

pub(crate) fn index_tables(arms: &[ArmParams], fairness: Option<&FairnessSpec>) -> Result<Vec<IndexTable>> {
    let window = fairness.map_or(PLAIN_WHITTLE_WINDOW, |f| f.window);
    arms.iter().map(|a| fast_whittle_infinite(a, window).map(|f| f.table)).collect()
}

/// Whittle top-k, optionally with urgent arms forced in first (FaWT).
#[derive(Debug, Clone)]
pub struct WhittlePolicy {
    arms: Arc<Vec<ArmParams>>,
    tables: Arc<Vec<IndexTable>>,
    fair: bool,
    source: IndexSource,
    beta: f64,
    scores: Vec<f64>,
}

impl WhittlePolicy {
    pub fn new(arms: Arc<Vec<ArmParams>>, tables: Arc<Vec<IndexTable>>, fair: bool, source: IndexSource, beta: f64) -> Self {
        let n = arms.len();
        Self { arms, tables, fair, source, beta, scores: vec![0.0; n] }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl Policy for WhittlePolicy {
    fn kind(&self) -> PolicyKind {
        if self.fair {
            PolicyKind::Fawt
        } else {
            PolicyKind::Whittle
        }
    }

    fn select(&mut self, d: &Decision<'_>) -> Selection {
        for (i, score) in self.scores.iter_mut().enumerate() {
            let tw = self.tables[i].get(d.obs.last_obs[i], d.obs.steps[i]);
            *score = match self.source {
                IndexSource::Infinite => tw,
                IndexSource::Finite => {
                    let omega = d.obs.belief(i, &self.arms[i]);
                    finite_whittle(&self.arms[i], omega, self.beta, d.residual(), tw).value
                }
            };
        }
        if self.fair {
            fair_top_k(&self.scores, d.demand, d.fairness, d.budget)
        } else {
            fair_top_k(&self.scores, &Demand::default(), None, d.budget)
        }
    }
}
