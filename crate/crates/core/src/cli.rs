//! The `fair-rmab` command line: `run` executes experiments (optionally from a
//! figure preset), `verify` runs the planning checker suites.
//!
//! Settings resolve in order: built-in defaults, preset, config file, flags.
//! The config file is flat `key = value` text using the flag names as keys;
//! `#` starts a comment and unknown keys are rejected.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arm::{generate_instance, myopic_trap_instance, write_arms_csv, ArmParams, Correlation, InstanceSpec};
use crate::error::{Error, Result};
use crate::fairness::{check_feasibility, FairnessSpec, FeasibilityReport};
use crate::policy::{IndexSource, PolicyKind, PolicyParams};
use crate::sim::{run_experiment, write_runs_csv, ExperimentResult, ExperimentSpec, PolicySummary};
use crate::verify::{run_check, Check, CheckOutcome, DEFAULT_INSTANCES};

pub const DEFAULT_OUT: &str = "results";

#[derive(Debug, Parser)]
#[command(name = "fair-rmab", version, about = "Fairness-constrained restless bandit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate policies and write runs.csv, summary.json and timing.json.
    Run(RunArgs),
    /// Run the planning checker suites over random instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig4,
    Fig5,
    Sensitivity,
    Klevel,
}

/// Arm distribution for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Independent uniform draws, see [`crate::arm::GENERATOR_DESCRIPTION`].
    Uniform,
    /// [`myopic_trap_instance`].
    Trap,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat key = value settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Comma-separated policy names.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "k")]
    pub k: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<u64>,
    #[arg(long = "L")]
    pub l: Option<u32>,
    /// Minimum activations per window; 0 disables the fairness constraint.
    #[arg(long)]
    pub eta: Option<u32>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Exploration rate of fawt-q.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Final exploration rate (linear decay); defaults to `--eps`.
    #[arg(long = "eps-end")]
    pub eps_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub penalty: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed of the instance generator; defaults to `--seed`.
    #[arg(long = "instance-seed")]
    pub instance_seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, env = "FAIR_RMAB_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub domain: Option<Domain>,
    /// positive, negative or mixed.
    #[arg(long)]
    pub correlation: Option<String>,
    /// infinite or finite.
    #[arg(long = "index-source")]
    pub index_source: Option<String>,
    /// Read arms from this CSV instead of generating them.
    #[arg(long)]
    pub arms: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// One suite; all suites when omitted.
    #[arg(long)]
    pub check: Option<String>,
    #[arg(long = "M", default_value_t = DEFAULT_INSTANCES)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Fully resolved settings of one experiment. `jobs` and `out` only affect
/// execution, so they are not echoed into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    /// Sub-directory name within a preset sweep.
    pub label: String,
    #[serde(rename = "N")]
    pub n_arms: usize,
    #[serde(rename = "k")]
    pub budget: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub eta: u32,
    #[serde(rename = "L")]
    pub window: u32,
    pub policies: Vec<PolicyKind>,
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub eps_end: f64,
    pub penalty: f64,
    pub runs: usize,
    pub seed: u64,
    pub instance_seed: u64,
    pub domain: Domain,
    pub correlation: Correlation,
    pub index_source: IndexSource,
    pub arms: Option<PathBuf>,
    #[serde(skip)]
    pub jobs: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = PolicyParams::default();
        Self {
            preset: None,
            label: String::new(),
            n_arms: 100,
            budget: 10,
            horizon: 1000,
            eta: 2,
            window: 50,
            policies: vec![PolicyKind::Fawt],
            beta: p.beta,
            gamma: p.gamma,
            eps: p.epsilon,
            eps_end: p.epsilon_end,
            penalty: crate::sim::DEFAULT_PENALTY,
            runs: 50,
            seed: 0,
            instance_seed: 0,
            domain: Domain::Uniform,
            correlation: Correlation::Positive,
            index_source: IndexSource::Infinite,
            arms: None,
            jobs: 1,
            out: PathBuf::from(DEFAULT_OUT),
        }
    }
}

impl ExperimentConfig {
    pub fn fairness(&self) -> Result<Option<FairnessSpec>> {
        if self.eta == 0 {
            return Ok(None);
        }
        FairnessSpec::per_arm(self.eta, self.window).map(Some)
    }

    pub fn params(&self) -> PolicyParams {
        PolicyParams {
            beta: self.beta,
            gamma: self.gamma,
            epsilon: self.eps,
            epsilon_end: self.eps_end,
            index_source: self.index_source,
            ..PolicyParams::default()
        }
    }

    pub fn instance(&self) -> Result<Vec<ArmParams>> {
        if let Some(path) = &self.arms {
            let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let arms = crate::arm::read_arms_csv(std::io::BufReader::new(file))?;
            if arms.len() != self.n_arms {
                return Err(Error::Config(format!("{} holds {} arms but N = {}", path.display(), arms.len(), self.n_arms)));
            }
            return Ok(arms);
        }
        match self.domain {
            Domain::Trap => myopic_trap_instance(self.n_arms, self.instance_seed),
            Domain::Uniform => generate_instance(&InstanceSpec {
                n_arms: self.n_arms,
                budget: self.budget,
                horizon: self.horizon.min(u32::MAX as u64) as u32,
                discount: self.beta,
                seed: self.instance_seed,
                correlation: self.correlation,
            }),
        }
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            arms: self.instance()?,
            budget: self.budget,
            horizon: self.horizon,
            fairness: self.fairness()?,
            policies: self.policies.clone(),
            params: self.params(),
            penalty: self.penalty,
            runs: self.runs,
            seed: self.seed,
            jobs: self.jobs,
        })
    }

    /// Validates the numbers and the fairness constraint. Returns the
    /// feasibility report when a constraint is set.
    pub fn validate(&self) -> Result<Option<FeasibilityReport>> {
        if self.n_arms == 0 || self.budget == 0 || self.budget > self.n_arms {
            return Err(Error::Config(format!("need 1 <= k <= N, got k = {}, N = {}", self.budget, self.n_arms)));
        }
        if self.horizon == 0 || self.runs == 0 || self.policies.is_empty() {
            return Err(Error::Config("T, runs and the policy list must be non-empty".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::UnsupportedDiscount(self.beta));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.eps) || !(0.0..=1.0).contains(&self.eps_end) {
            return Err(Error::Config("gamma, eps and eps-end must lie in [0, 1]".into()));
        }
        match self.fairness()? {
            Some(spec) => check_feasibility(&spec, self.budget, self.n_arms).map(Some),
            None => Ok(None),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
        }
        match key {
            "policy" => self.policies = parse_policies(value)?,
            "N" => self.n_arms = parse(key, value)?,
            "k" => self.budget = parse(key, value)?,
            "T" => self.horizon = parse(key, value)?,
            "L" => self.window = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "eps" => {
                self.eps = parse(key, value)?;
                self.eps_end = self.eps;
            }
            "eps-end" => self.eps_end = parse(key, value)?,
            "penalty" => self.penalty = parse(key, value)?,
            "runs" => self.runs = parse(key, value)?,
            "seed" => {
                self.seed = parse(key, value)?;
                self.instance_seed = self.seed;
            }
            "instance-seed" => self.instance_seed = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "domain" => self.domain = Domain::from_str(value, true).map_err(Error::Config)?,
            "correlation" => self.correlation = parse_correlation(value)?,
            "index-source" => self.index_source = parse_index_source(value)?,
            "arms" => self.arms = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }
}

fn parse_preset(value: &str) -> Result<Preset> {
    Preset::from_str(value, true).map_err(|_| Error::Config(format!("unknown preset `{value}`")))
}

pub fn parse_policies(value: &str) -> Result<Vec<PolicyKind>> {
    value.split(',').map(|s| s.trim().parse()).collect()
}

fn parse_correlation(value: &str) -> Result<Correlation> {
    match value {
        "positive" => Ok(Correlation::Positive),
        "negative" => Ok(Correlation::Negative),
        "mixed" => Ok(Correlation::Mixed),
        other => Err(Error::Config(format!("unknown correlation `{other}`"))),
    }
}

fn parse_index_source(value: &str) -> Result<IndexSource> {
    match value {
        "infinite" => Ok(IndexSource::Infinite),
        "finite" => Ok(IndexSource::Finite),
        other => Err(Error::Config(format!("unknown index source `{other}`"))),
    }
}

/// Parses the flat config format into `(key, value)` pairs.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

const FIG_POLICIES: [PolicyKind; 6] = [
    PolicyKind::Oracle,
    PolicyKind::Fawt,
    PolicyKind::FawtU,
    PolicyKind::FawtQ,
    PolicyKind::Random,
    PolicyKind::Myopic,
];

/// The experiment sweep of a preset, one config per figure panel point.
pub fn preset_configs(preset: Preset) -> Result<Vec<ExperimentConfig>> {
    let base = ExperimentConfig { preset: Some(preset), ..ExperimentConfig::default() };
    let configs = match preset {
        Preset::Fig1 => vec![ExperimentConfig {
            label: "fig1".into(),
            window: 50,
            policies: vec![PolicyKind::Whittle, PolicyKind::Fawt],
            ..base
        }],
        Preset::Fig4 => [50, 100, 200, 500]
            .into_iter()
            .map(|n| ExperimentConfig {
                label: format!("N{n}"),
                n_arms: n,
                budget: n / 10,
                window: 20,
                domain: Domain::Trap,
                policies: FIG_POLICIES.to_vec(),
                ..base.clone()
            })
            .collect(),
        Preset::Fig5 => [15, 30, 50]
            .into_iter()
            .map(|l| ExperimentConfig {
                label: format!("L{l}"),
                window: l,
                penalty: 0.0,
                policies: vec![
                    PolicyKind::NoIntervention,
                    PolicyKind::Oracle,
                    PolicyKind::Fawt,
                    PolicyKind::FawtU,
                    PolicyKind::FawtQ,
                    PolicyKind::Random,
                    PolicyKind::Myopic,
                    PolicyKind::ConstrainedMyopic,
                ],
                ..base.clone()
            })
            .collect(),
        // kL/N in {1.3, 2, 3}
        Preset::Sensitivity => [13, 20, 30]
            .into_iter()
            .map(|l| ExperimentConfig { label: format!("L{l}"), window: l, policies: FIG_POLICIES.to_vec(), ..base.clone() })
            .collect(),
        // k/N in {5, 10, 20, 30}%
        Preset::Klevel => [5, 10, 20, 30]
            .into_iter()
            .map(|k| ExperimentConfig {
                label: format!("k{k}"),
                budget: k,
                window: 30,
                policies: FIG_POLICIES.to_vec(),
                ..base.clone()
            })
            .collect(),
    };
    Ok(configs)
}

/// Builds the experiment configs: defaults or preset sweep, then the config
/// file, then flags.
pub fn resolve(args: &RunArgs) -> Result<Vec<ExperimentConfig>> {
    let file_pairs = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    let preset = match args.preset {
        Some(p) => Some(p),
        None => file_pairs.iter().find(|(k, _)| k == "preset").map(|(_, v)| parse_preset(v)).transpose()?,
    };
    let mut configs = match preset {
        Some(p) => preset_configs(p)?,
        None => vec![ExperimentConfig::default()],
    };
    let flags = flag_pairs(args);
    for cfg in &mut configs {
        for (key, value) in file_pairs.iter().chain(&flags).filter(|(k, _)| k != "preset") {
            cfg.set(key, value)?;
        }
    }
    Ok(configs)
}

fn flag_pairs(a: &RunArgs) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut push = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            out.push((key.to_string(), v));
        }
    };
    push("policy", a.policy.clone());
    push("N", a.n.map(|v| v.to_string()));
    push("k", a.k.map(|v| v.to_string()));
    push("T", a.t.map(|v| v.to_string()));
    push("L", a.l.map(|v| v.to_string()));
    push("eta", a.eta.map(|v| v.to_string()));
    push("beta", a.beta.map(|v| v.to_string()));
    push("gamma", a.gamma.map(|v| v.to_string()));
    push("eps", a.eps.map(|v| v.to_string()));
    push("eps-end", a.eps_end.map(|v| v.to_string()));
    push("penalty", a.penalty.map(|v| v.to_string()));
    push("runs", a.runs.map(|v| v.to_string()));
    push("seed", a.seed.map(|v| v.to_string()));
    push("instance-seed", a.instance_seed.map(|v| v.to_string()));
    push("jobs", a.jobs.map(|v| v.to_string()));
    push("out", a.out.as_ref().map(|p| p.display().to_string()));
    push("domain", a.domain.map(|d| d.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()));
    push("correlation", a.correlation.clone());
    push("index-source", a.index_source.clone());
    push("arms", a.arms.as_ref().map(|p| p.display().to_string()));
    out
}

#[derive(Debug, Serialize)]
struct SummaryFile<'a> {
    config: &'a ExperimentConfig,
    feasibility: Option<FeasibilityReport>,
    summaries: &'a [PolicySummary],
}

#[derive(Debug, Serialize)]
struct TimingFile<'a> {
    label: &'a str,
    jobs: usize,
    out: String,
    wall_seconds: f64,
}

/// Runs one resolved experiment and writes its artifacts into `dir`.
pub fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentResult> {
    let feasibility = cfg.validate()?;
    if let Some(report) = feasibility.filter(|r| !r.schedulable) {
        eprintln!(
            "warning: {}: k = {} cannot serve N = {} arms {} times per window of {}; violations are unavoidable (kL/N = {:.2})",
            cfg.label, cfg.budget, cfg.n_arms, cfg.eta, cfg.window, report.strength_ratio
        );
    }
    let spec = cfg.experiment_spec()?;
    let start = Instant::now();
    let result = run_experiment(&spec)?;
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    let create = |name: &str| {
        let path = dir.join(name);
        fs::File::create(&path)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
    };
    write_arms_csv(create("arms.csv")?, &spec.arms)?;
    write_runs_csv(create("runs.csv")?, &spec, &result)?;
    let summary = SummaryFile { config: cfg, feasibility, summaries: &result.summaries };
    let mut f = create("summary.json")?;
    serde_json::to_writer_pretty(&mut f, &summary).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(f)?;
    let timing = TimingFile { label: &cfg.label, jobs: cfg.jobs, out: dir.display().to_string(), wall_seconds: wall };
    let mut f = create("timing.json")?;
    serde_json::to_writer_pretty(&mut f, &timing).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(f)?;
    Ok(result)
}

/// Plain-text summary table.
pub fn format_table(cfg: &ExperimentConfig, result: &ExperimentResult) -> String {
    let mut s = format!(
        "{} N={} k={} T={} eta={} L={} runs={}\n{:<8} {:>18} {:>10} {:>11} {:>6} {:>6} {:>8}\n",
        if cfg.label.is_empty() { "experiment" } else { &cfg.label },
        cfg.n_arms,
        cfg.budget,
        cfg.horizon,
        cfg.eta,
        cfg.window,
        cfg.runs,
        "policy",
        "reward",
        "raw",
        "violations",
        "zero%",
        "min",
        "benefit%"
    );
    for p in &result.summaries {
        let ratio = p.benefit_ratio.map(|b| format!("{b:.1}")).unwrap_or_else(|| "-".into());
        s += &format!(
            "{:<8} {:>9.5}±{:<8.5} {:>10.5} {:>11.1} {:>6.1} {:>6} {:>8}\n",
            p.policy,
            p.mean_avg_reward,
            p.stderr_avg_reward,
            p.mean_avg_reward_unpenalized,
            p.mean_violations,
            100.0 * p.mean_zero_activation_fraction,
            p.min_activations,
            ratio
        );
    }
    if cfg.preset == Some(Preset::Fig1) {
        for p in &result.summaries {
            let cells: Vec<String> = p
                .histogram
                .labels
                .iter()
                .zip(&p.histogram.mean_arms)
                .map(|(l, m)| format!("{l}: {m:.1}"))
                .collect();
            s += &format!("{:<8} activations per arm  {}\n", p.policy, cells.join("  "));
        }
    }
    s
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let configs = resolve(args)?;
    // fail before any simulation if one point of the sweep is invalid
    for cfg in &configs {
        cfg.validate()?;
    }
    let single = configs.len() == 1;
    for cfg in &configs {
        let dir = if single { cfg.out.clone() } else { cfg.out.join(&cfg.label) };
        let result = execute(cfg, &dir)?;
        println!("{}", format_table(cfg, &result));
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let checks = match &args.check {
        Some(c) => vec![c.parse::<Check>()?],
        None => Check::ALL.to_vec(),
    };
    let mut clean = true;
    for check in checks {
        let outcome: CheckOutcome = run_check(check, args.instances, args.seed)?;
        clean &= !outcome.is_violation();
        println!(
            "{:<13} {:>7.2}% pass  ({} of {} failing: {}){}",
            check.name(),
            100.0 * outcome.pass_rate(),
            outcome.failures,
            outcome.checked,
            outcome.detail,
            if outcome.is_violation() { "  VIOLATION" } else { "" }
        );
    }
    Ok(clean)
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> RunArgs {
        let mut full = vec!["fair-rmab", "run"];
        full.extend_from_slice(list);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Run(a) => a,
            Command::Verify(_) => unreachable!(),
        }
    }

    #[test]
    fn fig1_preset_matches_caption() {
        let c = &resolve(&args(&["--preset", "fig1"])).unwrap()[0];
        assert_eq!((c.n_arms, c.budget, c.horizon, c.window, c.eta), (100, 10, 1000, 50, 2));
        assert_eq!(c.policies, vec![PolicyKind::Whittle, PolicyKind::Fawt]);
    }

    #[test]
    fn sweep_presets() {
        let fig4 = preset_configs(Preset::Fig4).unwrap();
        assert_eq!(fig4.iter().map(|c| (c.n_arms, c.budget)).collect::<Vec<_>>(), [(50, 5), (100, 10), (200, 20), (500, 50)]);
        assert!(fig4.iter().all(|c| c.window == 20 && c.eta == 2 && c.penalty == -0.01));
        let fig5 = preset_configs(Preset::Fig5).unwrap();
        assert_eq!(fig5.iter().map(|c| c.window).collect::<Vec<_>>(), [15, 30, 50]);
        assert!(fig5.iter().all(|c| c.penalty == 0.0 && c.n_arms == 100 && c.budget == 10));
        let ratios: Vec<f64> = preset_configs(Preset::Sensitivity)
            .unwrap()
            .iter()
            .map(|c| (c.budget as f64 * c.window as f64) / c.n_arms as f64)
            .collect();
        assert_eq!(ratios, [1.3, 2.0, 3.0]);
        let k: Vec<usize> = preset_configs(Preset::Klevel).unwrap().iter().map(|c| c.budget).collect();
        assert_eq!(k, [5, 10, 20, 30]);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        fs::write(&path, "# demo\nN = 40\nk = 4\nruns = 3 # few\npolicy = fawt,random\n").unwrap();
        let c = &resolve(&args(&["--config", path.to_str().unwrap(), "--k", "5", "--penalty", "-0.5"])).unwrap()[0];
        assert_eq!((c.n_arms, c.budget, c.runs, c.penalty), (40, 5, 3, -0.5));
        assert_eq!(c.policies, vec![PolicyKind::Fawt, PolicyKind::Random]);
    }

    #[test]
    fn unknown_keys_and_policies_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        fs::write(&path, "N = 10\nbudgett = 3\n").unwrap();
        let err = resolve(&args(&["--config", path.to_str().unwrap()])).unwrap_err();
        assert!(err.to_string().contains("budgett"));
        assert!(matches!(resolve(&args(&["--policy", "ucb"])), Err(Error::UnknownPolicy(_))));
    }

    #[test]
    fn infeasible_config_is_a_named_error() {
        let c = &resolve(&args(&["--N", "100", "--k", "2", "--L", "10", "--eta", "2"])).unwrap()[0];
        assert!(matches!(c.validate(), Err(Error::Infeasible(_))));
        let code = main_with_args(["fair-rmab", "run", "--N", "100", "--k", "2", "--L", "10", "--eta", "2", "--runs", "1"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn config_text_errors_name_the_line() {
        assert!(parse_config_text("N 10").unwrap_err().to_string().contains("line 1"));
        assert_eq!(parse_config_text(" a = b \n\n# c\n").unwrap(), vec![("a".to_string(), "b".to_string())]);
    }
}
