//! Two-state arm model, belief dynamics and synthetic instance generation.
//!
//! An arm is a two-state Markov chain (0 = bad, 1 = good) with one transition
//! matrix per action. Passive arms are unobserved; activating an arm reveals
//! its current state. The decision-maker's sufficient statistic is the last
//! observed state `s` together with the number of epochs `u` since that
//! observation, from which the belief `ω_s(u)` follows in closed form.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Transition model of a single arm.
///
/// `p_active[s][s']` and `p_passive[s][s']` are row-stochastic 2x2 matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmParams {
    pub p_active: [[f64; 2]; 2],
    pub p_passive: [[f64; 2]; 2],
}

impl ArmParams {
    /// Builds an arm and validates both stochasticity and the "acting helps"
    /// structure `P^a_{s,1} > P^p_{s,1}`.
    pub fn new(p_active: [[f64; 2]; 2], p_passive: [[f64; 2]; 2]) -> Result<Self> {
        let arm = Self::with_structure_waived(p_active, p_passive)?;
        for s in 0..2 {
            if arm.active(s) <= arm.passive(s) {
                return Err(Error::InvalidArm(format!(
                    "acting must help: P^a_{s}1 = {} <= P^p_{s}1 = {}",
                    arm.active(s),
                    arm.passive(s)
                )));
            }
        }
        Ok(arm)
    }

    /// Builds an arm checking only that both matrices are row-stochastic.
    pub fn with_structure_waived(p_active: [[f64; 2]; 2], p_passive: [[f64; 2]; 2]) -> Result<Self> {
        for (name, m) in [("active", &p_active), ("passive", &p_passive)] {
            for (s, row) in m.iter().enumerate() {
                if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    return Err(Error::InvalidArm(format!("{name} row {s} has entries outside [0,1]: {row:?}")));
                }
                if ((row[0] + row[1]) - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::InvalidArm(format!("{name} row {s} does not sum to 1: {row:?}")));
                }
            }
        }
        Ok(Self { p_active, p_passive })
    }

    /// Builds an arm from the four "probability of moving to the good state"
    /// entries, validating the acting-helps structure.
    pub fn from_good_probs(pa01: f64, pa11: f64, pp01: f64, pp11: f64) -> Result<Self> {
        Self::new(rows(pa01, pa11), rows(pp01, pp11))
    }

    /// As [`ArmParams::from_good_probs`] without the structural check.
    pub fn from_good_probs_unchecked(pa01: f64, pa11: f64, pp01: f64, pp11: f64) -> Result<Self> {
        Self::with_structure_waived(rows(pa01, pa11), rows(pp01, pp11))
    }

    /// `P^a_{s,1}`.
    #[inline]
    pub fn active(&self, s: usize) -> f64 {
        self.p_active[s][1]
    }

    /// `P^p_{s,1}`.
    #[inline]
    pub fn passive(&self, s: usize) -> f64 {
        self.p_passive[s][1]
    }

    /// `P^p_{1,1} - P^p_{0,1}`: the passive chain's contraction factor.
    #[inline]
    pub fn passive_gap(&self) -> f64 {
        self.passive(1) - self.passive(0)
    }

    /// `P^a_{1,1} - P^a_{0,1}`.
    #[inline]
    pub fn active_gap(&self) -> f64 {
        self.active(1) - self.active(0)
    }

    pub fn is_positively_correlated(&self) -> bool {
        self.passive(1) >= self.passive(0)
    }
}

fn rows(p01: f64, p11: f64) -> [[f64; 2]; 2] {
    [[1.0 - p01, p01], [1.0 - p11, p11]]
}

/// One passive step of the belief: `ω P^p_{1,1} + (1-ω) P^p_{0,1}`.
#[inline]
pub fn belief_step(omega: f64, arm: &ArmParams) -> f64 {
    omega * arm.passive(1) + (1.0 - omega) * arm.passive(0)
}

/// `n` passive steps applied to `omega`, in closed form.
pub fn passive_propagate(omega: f64, n: u32, arm: &ArmParams) -> f64 {
    let r = arm.passive_gap();
    let denom = 1.0 - r;
    if denom.abs() < f64::EPSILON {
        // identity chain: P^p_11 = 1, P^p_01 = 0
        return omega;
    }
    let fixed = arm.passive(0) / denom;
    (fixed + (omega - fixed) * r.powi(n as i32)).clamp(0.0, 1.0)
}

/// Belief `ω_s(u)` of an arm observed in state `s` exactly `u` epochs ago.
///
/// `u = 1` is the belief right after activation, `P^a_{s,1}`.
pub fn belief_u_step(s: usize, u: u32, arm: &ArmParams) -> f64 {
    debug_assert!(u >= 1, "steps since activation start at 1");
    passive_propagate(arm.active(s), u.saturating_sub(1), arm)
}

/// Stationary belief `ω* = P^p_{0,1} / (1 + P^p_{0,1} - P^p_{1,1})`.
pub fn stationary_belief(arm: &ArmParams) -> Result<f64> {
    let denom = 1.0 + arm.passive(0) - arm.passive(1);
    if denom.abs() < f64::EPSILON {
        return Err(Error::AbsorbingChain);
    }
    Ok(arm.passive(0) / denom)
}

/// Shape of the passive belief trajectory started from a given belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainClass {
    Increasing,
    NonIncreasing,
    NegativelyCorrelated,
}

pub fn classify_chain(arm: &ArmParams, omega0: f64) -> ChainClass {
    if !arm.is_positively_correlated() {
        return ChainClass::NegativelyCorrelated;
    }
    match stationary_belief(arm) {
        Ok(star) if omega0 < star => ChainClass::Increasing,
        // an absorbing chain keeps every belief where it is
        _ => ChainClass::NonIncreasing,
    }
}

/// Decision-maker's view of one arm: last observation plus elapsed epochs.
///
/// `(last_obs, steps_since)` is the ground truth; `belief` is cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub last_obs: usize,
    pub steps_since: u32,
    pub belief: f64,
}

impl BeliefState {
    pub fn new(last_obs: usize, steps_since: u32, arm: &ArmParams) -> Self {
        assert!(last_obs < 2, "state must be 0 or 1");
        assert!(steps_since >= 1, "steps since activation start at 1");
        Self { last_obs, steps_since, belief: belief_u_step(last_obs, steps_since, arm) }
    }

    /// One more passive epoch.
    pub fn advance(&mut self, arm: &ArmParams) {
        self.steps_since += 1;
        self.belief = belief_u_step(self.last_obs, self.steps_since, arm);
    }

    /// The arm was activated and revealed state `s`.
    pub fn observe(&mut self, s: usize, arm: &ArmParams) {
        *self = Self::new(s, 1, arm);
    }

    /// Elapsed epochs clamped to a table length.
    pub fn capped_steps(&self, cap: u32) -> u32 {
        self.steps_since.min(cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    Positive,
    Negative,
    Mixed,
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correlation::Positive => "positive",
            Correlation::Negative => "negative",
            Correlation::Mixed => "mixed",
        })
    }
}

impl std::str::FromStr for Correlation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Correlation::Positive),
            "negative" => Ok(Correlation::Negative),
            "mixed" => Ok(Correlation::Mixed),
            other => Err(Error::Parse(format!("unknown correlation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n_arms: usize,
    pub budget: usize,
    pub horizon: u32,
    pub discount: f64,
    pub seed: u64,
    pub correlation: Correlation,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 || self.budget > self.n_arms {
            return Err(Error::InvalidInstance(format!(
                "budget must satisfy 1 <= k <= N (k = {}, N = {})",
                self.budget, self.n_arms
            )));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::InvalidInstance(format!("discount must lie in (0, 1], got {}", self.discount)));
        }
        Ok(())
    }
}

/// Human-readable description of the generator distribution, embedded in
/// experiment metadata.
pub const GENERATOR_DESCRIPTION: &str = "P^p_01~U(0.05,0.45); P^p_11~U(P^p_01+0.05,0.95); \
P^a_s1=P^p_s1+U(0.05,0.95-P^p_s1), redrawn until P^a_11>=P^a_01 and the increment range is non-empty; \
negative chains swap the roles of P^p_01 and P^p_11";

/// Draws `spec.n_arms` arms; a deterministic function of `spec.seed`.
pub fn generate_instance(spec: &InstanceSpec) -> Result<Vec<ArmParams>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.n_arms)
        .map(|_| {
            let positive = match spec.correlation {
                Correlation::Positive => true,
                Correlation::Negative => false,
                Correlation::Mixed => rng.random_bool(0.5),
            };
            draw_arm(&mut rng, positive)
        })
        .collect()
}

/// A two-type instance on which the one-step gain misleads: even arms mix
/// fast and gain a lot for a single epoch when acted on, odd arms are sticky
/// and gain less at once but stay good for long. Parameters are jittered by
/// up to 0.03; every arm is positively correlated.
pub fn myopic_trap_instance(n_arms: usize, seed: u64) -> Result<Vec<ArmParams>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_arms)
        .map(|i| {
            let mut j = || rng.random_range(-0.03..0.03);
            if i % 2 == 0 {
                ArmParams::from_good_probs(0.75 + j(), 0.9 + j(), 0.3 + j(), 0.45 + j())
            } else {
                ArmParams::from_good_probs(0.25 + j(), 0.96 + j() / 2.0, 0.03 + j().abs(), 0.9 + j())
            }
        })
        .collect()
}

fn draw_arm<R: Rng>(rng: &mut R, positive: bool) -> Result<ArmParams> {
    const MIN_LIFT: f64 = 0.05;
    loop {
        let low = rng.random_range(0.05..0.45);
        let high = rng.random_range(low + 0.05..0.95);
        let (pp01, pp11) = if positive { (low, high) } else { (high, low) };
        let lift = |rng: &mut R, p: f64| -> Option<f64> {
            let top = 0.95 - p;
            (top > MIN_LIFT).then(|| p + rng.random_range(MIN_LIFT..top))
        };
        let (Some(pa01), Some(pa11)) = (lift(rng, pp01), lift(rng, pp11)) else {
            continue;
        };
        if positive && pa11 < pa01 {
            continue;
        }
        return ArmParams::from_good_probs(pa01, pa11, pp01, pp11);
    }
}

pub const ARM_CSV_HEADER: &str = "arm_id,p_a_01,p_a_11,p_p_01,p_p_11";

/// Writes arms as `arm_id,p_a_01,p_a_11,p_p_01,p_p_11` with six decimals.
pub fn write_arms_csv<W: Write>(mut w: W, arms: &[ArmParams]) -> Result<()> {
    writeln!(w, "{ARM_CSV_HEADER}")?;
    for (i, a) in arms.iter().enumerate() {
        writeln!(w, "{i},{:.6},{:.6},{:.6},{:.6}", a.active(0), a.active(1), a.passive(0), a.passive(1))?;
    }
    Ok(())
}

/// Reads the arm CSV format. Only stochasticity is validated, so files written
/// by other tools with arbitrary structure still load.
pub fn read_arms_csv<R: BufRead>(r: R) -> Result<Vec<ArmParams>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == ARM_CSV_HEADER => {}
        Some(Ok(h)) => return Err(Error::Parse(format!("unexpected arm csv header `{h}`"))),
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::Parse("empty arm csv".into())),
    }
    let mut arms = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("line {}: expected 5 fields, got {}", lineno + 2, fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|e| Error::Parse(format!("line {}: arm id: {e}", lineno + 2)))?;
        if id != arms.len() {
            return Err(Error::Parse(format!("line {}: arm ids must be 0..N in order", lineno + 2)));
        }
        let p: Vec<f64> = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2))))
            .collect::<Result<_>>()?;
        arms.push(ArmParams::from_good_probs_unchecked(p[0], p[1], p[2], p[3])?);
    }
    Ok(arms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm(pa01: f64, pa11: f64, pp01: f64, pp11: f64) -> ArmParams {
        ArmParams::from_good_probs(pa01, pa11, pp01, pp11).unwrap()
    }

    #[test]
    fn belief_step_examples() {
        let a = arm(0.4, 0.9, 0.2, 0.8);
        assert!((belief_step(0.5, &a) - 0.5).abs() < 1e-15);
        assert_eq!(belief_step(0.0, &a), 0.2);
        let b = arm(0.4, 0.9, 0.2, 0.7);
        assert!((belief_step(1.0, &b) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn belief_u_step_examples() {
        let a = arm(0.4, 0.9, 0.2, 0.8);
        assert_eq!(belief_u_step(0, 1, &a), 0.4);
        // two passive steps from 0: 0 -> 0.2 -> 0.32
        let two = belief_step(belief_step(0.0, &a), &a);
        assert!((two - 0.32).abs() < 1e-12);
        assert!((passive_propagate(0.0, 2, &a) - 0.32).abs() < 1e-12);
        let star = stationary_belief(&a).unwrap();
        for s in 0..2 {
            assert!((belief_u_step(s, 200, &a) - star).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_examples() {
        let a = arm(0.4, 0.9, 0.2, 0.8);
        assert!((stationary_belief(&a).unwrap() - 0.5).abs() < 1e-15);
        let absorbing_bad = arm(0.3, 0.9, 0.0, 0.6);
        assert_eq!(stationary_belief(&absorbing_bad).unwrap(), 0.0);
        let identity = ArmParams::from_good_probs_unchecked(0.3, 0.9, 0.0, 1.0).unwrap();
        assert_eq!(stationary_belief(&identity), Err(Error::AbsorbingChain));
        assert_eq!(passive_propagate(0.37, 50, &identity), 0.37);
    }

    #[test]
    fn classify_examples() {
        let a = arm(0.4, 0.9, 0.2, 0.8);
        assert_eq!(classify_chain(&a, 0.1), ChainClass::Increasing);
        assert_eq!(classify_chain(&a, 0.9), ChainClass::NonIncreasing);
        assert_eq!(classify_chain(&a, 1.0), ChainClass::NonIncreasing);
        let neg = arm(0.9, 0.3, 0.8, 0.2);
        assert_eq!(classify_chain(&neg, 0.1), ChainClass::NegativelyCorrelated);
    }

    #[test]
    fn validation_rejects_bad_rows() {
        assert!(ArmParams::with_structure_waived([[0.5, 0.6], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]).is_err());
        assert!(ArmParams::with_structure_waived([[1.2, -0.2], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]).is_err());
        // acting does not help in state 0
        assert!(ArmParams::from_good_probs(0.1, 0.9, 0.2, 0.8).is_err());
        assert!(ArmParams::from_good_probs_unchecked(0.1, 0.9, 0.2, 0.8).is_ok());
    }

    #[test]
    fn belief_state_transitions() {
        let a = arm(0.4, 0.9, 0.2, 0.8);
        let mut b = BeliefState::new(1, 1, &a);
        assert_eq!(b.belief, 0.9);
        b.advance(&a);
        assert_eq!(b.steps_since, 2);
        assert!((b.belief - belief_step(0.9, &a)).abs() < 1e-15);
        b.observe(0, &a);
        assert_eq!((b.last_obs, b.steps_since, b.belief), (0, 1, 0.4));
    }

    fn spec(n: usize, seed: u64, correlation: Correlation) -> InstanceSpec {
        InstanceSpec { n_arms: n, budget: 1, horizon: 10, discount: 0.95, seed, correlation }
    }

    #[test]
    fn generator_contract() {
        let s = spec(100, 7, Correlation::Positive);
        let a = generate_instance(&s).unwrap();
        assert_eq!(a, generate_instance(&s).unwrap());
        assert_eq!(a.len(), 100);
        for arm in &a {
            assert!(arm.is_positively_correlated());
            assert!(arm.active(1) >= arm.active(0));
            assert!(arm.active(0) > arm.passive(0) && arm.active(1) > arm.passive(1));
        }
        assert_eq!(generate_instance(&spec(50, 1, Correlation::Mixed)).unwrap().len(), 50);
        let neg = generate_instance(&spec(20, 3, Correlation::Negative)).unwrap();
        assert!(neg.iter().all(|a| !a.is_positively_correlated()));
    }

    #[test]
    fn trap_instance_is_deterministic_and_positive() {
        let a = myopic_trap_instance(40, 3).unwrap();
        assert_eq!(a, myopic_trap_instance(40, 3).unwrap());
        assert!(a.iter().all(|arm| arm.is_positively_correlated() && arm.active(1) >= arm.active(0)));
    }

    #[test]
    fn instance_spec_validation() {
        let mut s = spec(10, 0, Correlation::Positive);
        s.budget = 0;
        assert!(generate_instance(&s).is_err());
        s.budget = 11;
        assert!(s.validate().is_err());
        s.budget = 3;
        s.discount = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn arms_csv_roundtrip_at_six_decimals() {
        let arms = generate_instance(&spec(5, 11, Correlation::Positive)).unwrap();
        let mut buf = Vec::new();
        write_arms_csv(&mut buf, &arms).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("arm_id,p_a_01,p_a_11,p_p_01,p_p_11\n0,"));
        let back = read_arms_csv(&buf[..]).unwrap();
        for (a, b) in arms.iter().zip(&back) {
            for s in 0..2 {
                assert!((a.active(s) - b.active(s)).abs() <= 5e-7);
                assert!((a.passive(s) - b.passive(s)).abs() <= 5e-7);
            }
        }
        assert!(read_arms_csv("bogus\n".as_bytes()).is_err());
    }
}
