use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arm::ArmParams;
use crate::error::{Error, Result};
use crate::fairness::FairnessSpec;
use crate::policy::{build_policy, Planning, PolicyKind, PolicyParams};
use crate::sim::{benefit_ratio, simulate, RunMetrics, RunSettings};

/// One multi-policy, multi-run experiment on a fixed instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub arms: Vec<ArmParams>,
    pub budget: usize,
    pub horizon: u64,
    pub fairness: Option<FairnessSpec>,
    pub policies: Vec<PolicyKind>,
    pub params: PolicyParams,
    pub penalty: f64,
    pub runs: usize,
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `seed XOR splitmix64(stream)`: the seed of run `stream` (or of a
/// sub-stream of a run).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ splitmix64(stream)
}

pub const HISTOGRAM_LABELS: [&str; 5] = ["0", "1-10", "11-50", "51-100", ">100"];

/// Mean number of arms per activation-count bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub labels: Vec<String>,
    pub mean_arms: Vec<f64>,
}

fn bucket(count: u32) -> usize {
    match count {
        0 => 0,
        1..=10 => 1,
        11..=50 => 2,
        51..=100 => 3,
        _ => 4,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub runs: usize,
    pub mean_avg_reward: f64,
    pub stderr_avg_reward: f64,
    pub mean_avg_reward_unpenalized: f64,
    pub stderr_avg_reward_unpenalized: f64,
    pub mean_discounted_return: f64,
    pub mean_violations: f64,
    pub stderr_violations: f64,
    pub mean_zero_activation_fraction: f64,
    /// Fewest activations of any arm in any run.
    pub min_activations: u32,
    pub dropped_urgent_total: u64,
    pub histogram: Histogram,
    /// Needs `none` and `oracle` in the same experiment.
    pub benefit_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub summaries: Vec<PolicySummary>,
    /// Per policy (in `ExperimentSpec::policies` order), one record per run.
    pub runs: Vec<Vec<RunRecord>>,
}

impl ExperimentResult {
    pub fn summary(&self, kind: PolicyKind) -> Option<&PolicySummary> {
        self.summaries.iter().find(|s| s.policy == kind.name())
    }
}

fn mean_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn summarize(kind: PolicyKind, records: &[RunRecord]) -> PolicySummary {
    let reward = mean_stderr(records.iter().map(|r| r.metrics.avg_reward));
    let raw = mean_stderr(records.iter().map(|r| r.metrics.avg_reward_unpenalized));
    let viol = mean_stderr(records.iter().map(|r| r.metrics.violation_count as f64));
    let mut hist = [0.0; 5];
    for r in records {
        r.metrics.activation_counts.iter().for_each(|&c| hist[bucket(c)] += 1.0);
    }
    let n = records.len().max(1) as f64;
    PolicySummary {
        policy: kind.name().to_string(),
        runs: records.len(),
        mean_avg_reward: reward.0,
        stderr_avg_reward: reward.1,
        mean_avg_reward_unpenalized: raw.0,
        stderr_avg_reward_unpenalized: raw.1,
        mean_discounted_return: mean_stderr(records.iter().map(|r| r.metrics.discounted_return)).0,
        mean_violations: viol.0,
        stderr_violations: viol.1,
        mean_zero_activation_fraction: mean_stderr(records.iter().map(|r| r.metrics.zero_activation_fraction())).0,
        min_activations: records.iter().flat_map(|r| r.metrics.activation_counts.iter().copied()).min().unwrap_or(0),
        dropped_urgent_total: records.iter().map(|r| r.metrics.dropped_urgent).sum(),
        histogram: Histogram {
            labels: HISTOGRAM_LABELS.iter().map(|s| s.to_string()).collect(),
            mean_arms: hist.iter().map(|h| h / n).collect(),
        },
        benefit_ratio: None,
    }
}

/// Runs every policy `runs` times. Run `r` uses world seed
/// `derive_seed(derive_seed(seed, r), 0)` for all policies, so policies face
/// the same random environment; policy randomness uses sub-streams `1..`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.runs == 0 || spec.horizon == 0 || spec.policies.is_empty() {
        return Err(Error::Config("runs, horizon and the policy list must be non-empty".into()));
    }
    let planning = Planning::prepare(spec.arms.clone(), &spec.policies, spec.fairness.as_ref(), spec.params.beta)?;
    let one_run = |run: usize| -> Result<Vec<RunRecord>> {
        let run_seed = derive_seed(spec.seed, run as u64);
        let settings = RunSettings {
            budget: spec.budget,
            horizon: spec.horizon,
            fairness: spec.fairness.as_ref(),
            penalty: spec.penalty,
            beta: spec.params.beta,
            world_seed: derive_seed(run_seed, 0),
        };
        spec.policies
            .iter()
            .enumerate()
            .map(|(p, &kind)| {
                let policy_seed = derive_seed(run_seed, 1 + p as u64);
                let mut policy = build_policy(kind, &planning, spec.fairness.as_ref(), &spec.params, policy_seed)?;
                let (metrics, _) = simulate(&planning.arms, policy.as_mut(), &settings)?;
                Ok(RunRecord { run, seed: run_seed, metrics })
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let by_run: Vec<Vec<RunRecord>> = pool.install(|| (0..spec.runs).into_par_iter().map(one_run).collect::<Result<_>>())?;
    let mut runs: Vec<Vec<RunRecord>> = vec![Vec::with_capacity(spec.runs); spec.policies.len()];
    for records in by_run {
        for (p, rec) in records.into_iter().enumerate() {
            runs[p].push(rec);
        }
    }
    let mut summaries: Vec<PolicySummary> = spec.policies.iter().zip(&runs).map(|(&k, r)| summarize(k, r)).collect();
    let find = |kind: PolicyKind| spec.policies.iter().position(|&k| k == kind).map(|p| summaries[p].mean_avg_reward);
    if let (Some(none), Some(oracle)) = (find(PolicyKind::NoIntervention), find(PolicyKind::Oracle)) {
        for s in &mut summaries {
            s.benefit_ratio = benefit_ratio(s.mean_avg_reward, none, oracle).ok();
        }
    }
    Ok(ExperimentResult { summaries, runs })
}

pub const RUNS_CSV_HEADER: &str = "run,seed,policy,t,reward,penalty,n_urgent,n_violations_closed";

/// One row per policy, run and epoch.
pub fn write_runs_csv<W: Write>(mut w: W, spec: &ExperimentSpec, result: &ExperimentResult) -> Result<()> {
    writeln!(w, "{RUNS_CSV_HEADER}")?;
    for (kind, records) in spec.policies.iter().zip(&result.runs) {
        for rec in records {
            let m = &rec.metrics;
            for t in 0..m.horizon() {
                writeln!(
                    w,
                    "{},{},{},{},{},{:.6},{},{}",
                    rec.run,
                    rec.seed,
                    kind,
                    t + 1,
                    m.reward_series[t],
                    m.penalty_series[t],
                    m.urgent_series[t],
                    m.violations_closed_series[t]
                )?;
            }
        }
    }
    Ok(())
}
