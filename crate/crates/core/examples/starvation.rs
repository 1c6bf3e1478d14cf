//! Plain Whittle ranking starves a large share of arms; adding the
//! activation constraint spreads the budget.
use fair_rmab::cli::{preset_configs, Preset};
use fair_rmab::sim::{run_experiment, HISTOGRAM_LABELS};

fn main() -> fair_rmab::Result<()> {
    let mut cfg = preset_configs(Preset::Fig1)?.remove(0);
    cfg.runs = 10;
    let result = run_experiment(&cfg.experiment_spec()?)?;
    println!("activations  {}", HISTOGRAM_LABELS.map(|l| format!("{l:>7}")).join(""));
    for s in &result.summaries {
        let bars: String = s.histogram.mean_arms.iter().map(|m| format!("{m:>7.1}")).collect();
        println!("{:<11}  {bars}   never activated {:.0}%", s.policy, 100.0 * s.mean_zero_activation_fraction);
    }
    Ok(())
}
