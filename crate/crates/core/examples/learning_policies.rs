//! Policies that learn the transitions (Thompson sampling) or the index
//! (Q-learning) online, against the planner that knows them.
use fair_rmab::arm::{generate_instance, Correlation, InstanceSpec};
use fair_rmab::fairness::FairnessSpec;
use fair_rmab::policy::{PolicyKind, PolicyParams};
use fair_rmab::sim::{run_experiment, ExperimentSpec};

fn main() -> fair_rmab::Result<()> {
    let inst = InstanceSpec { n_arms: 30, budget: 3, horizon: 1000, discount: 0.95, seed: 2, correlation: Correlation::Positive };
    let arms = generate_instance(&inst)?;
    for (eps, eps_end) in [(0.1, 0.1), (0.3, 0.01)] {
        let spec = ExperimentSpec {
            arms: arms.clone(),
            budget: 3,
            horizon: 1000,
            fairness: Some(FairnessSpec::per_arm(1, 20)?),
            policies: vec![PolicyKind::NoIntervention, PolicyKind::Oracle, PolicyKind::Fawt, PolicyKind::FawtU, PolicyKind::FawtQ],
            params: PolicyParams { epsilon: eps, epsilon_end: eps_end, ..PolicyParams::default() },
            penalty: 0.0,
            runs: 8,
            seed: 3,
            jobs: 4,
        };
        println!("epsilon {eps} -> {eps_end}");
        for s in &run_experiment(&spec)?.summaries {
            println!("  {:<7} {:.4}  benefit {:.1}%", s.policy, s.mean_avg_reward, s.benefit_ratio.unwrap_or(f64::NAN));
        }
    }
    Ok(())
}
