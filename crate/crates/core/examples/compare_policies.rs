//! Every policy on one generated instance, with the intervention benefit ratio.
use fair_rmab::arm::{generate_instance, Correlation, InstanceSpec};
use fair_rmab::fairness::FairnessSpec;
use fair_rmab::policy::{PolicyKind, PolicyParams};
use fair_rmab::sim::{run_experiment, ExperimentSpec, DEFAULT_PENALTY};

fn main() -> fair_rmab::Result<()> {
    let inst = InstanceSpec { n_arms: 50, budget: 5, horizon: 500, discount: 0.95, seed: 1, correlation: Correlation::Positive };
    let spec = ExperimentSpec {
        arms: generate_instance(&inst)?,
        budget: 5,
        horizon: 500,
        fairness: Some(FairnessSpec::per_arm(2, 30)?),
        policies: PolicyKind::ALL.to_vec(),
        params: PolicyParams::default(),
        penalty: DEFAULT_PENALTY,
        runs: 10,
        seed: 0,
        jobs: 4,
    };
    let result = run_experiment(&spec)?;
    println!("{:<8} {:>8} {:>8} {:>10} {:>9}", "policy", "reward", "stderr", "violations", "benefit%");
    for s in &result.summaries {
        let ratio = s.benefit_ratio.map_or("-".into(), |r| format!("{r:.1}"));
        println!("{:<8} {:>8.4} {:>8.4} {:>10.1} {:>9}", s.policy, s.mean_avg_reward, s.stderr_avg_reward, s.mean_violations, ratio);
    }
    Ok(())
}
