//! Sliding-window fairness: every arm (or group of arms) must be activated at
//! least `eta` times in every `window` consecutive epochs.
//!
//! Epochs are numbered from 1. A window is `[u, u + L - 1]` with `u >= 1`; only
//! windows that lie entirely inside the horizon are audited.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "groups")]
pub enum Scope {
    PerArm,
    /// `groups[i]` is the group of arm `i`; ids must cover `0..G` densely.
    PerGroup(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessSpec {
    pub eta: u32,
    pub window: u32,
    pub scope: Scope,
}

impl FairnessSpec {
    pub fn per_arm(eta: u32, window: u32) -> Result<Self> {
        Self::new(eta, window, Scope::PerArm)
    }

    pub fn new(eta: u32, window: u32, scope: Scope) -> Result<Self> {
        if eta == 0 || window == 0 || eta > window {
            return Err(Error::InvalidFairness(format!("need 1 <= eta <= L, got eta={eta}, L={window}")));
        }
        if let Scope::PerGroup(groups) = &scope {
            let g = groups.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; g];
            groups.iter().for_each(|&id| seen[id] = true);
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidFairness("group ids must be dense 0..G".into()));
            }
        }
        Ok(Self { eta, window, scope })
    }

    /// Number of constrained units for `n_arms` arms.
    pub fn n_units(&self, n_arms: usize) -> usize {
        match &self.scope {
            Scope::PerArm => n_arms,
            Scope::PerGroup(groups) => groups.iter().max().map_or(0, |m| m + 1),
        }
    }

    pub fn unit_of(&self, arm: usize) -> usize {
        match &self.scope {
            Scope::PerArm => arm,
            Scope::PerGroup(groups) => groups[arm],
        }
    }

    /// Arms belonging to `unit`, in ascending id order.
    pub fn members(&self, unit: usize, n_arms: usize) -> Vec<usize> {
        (0..n_arms).filter(|&i| self.unit_of(i) == unit).collect()
    }
}

/// Result of a successful [`check_feasibility`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `kL / ((eta - 1) N)`; infinite when `eta = 1`.
    pub strength_ratio: f64,
    /// `ceil(N eta / L) <= k`: a staggered schedule meets every window.
    pub schedulable: bool,
}

/// Rejects specs with `k L <= N (eta - 1)`. Specs that pass but have
/// `ceil(N eta / L) > k` are reported as not schedulable: the budget cannot
/// cover `N eta` activations per `L` epochs, so some windows must fail eventually.
pub fn check_feasibility(spec: &FairnessSpec, k: usize, n_arms: usize) -> Result<FeasibilityReport> {
    let n = spec.n_units(n_arms) as u64;
    let (k, l, eta) = (k as u64, spec.window as u64, spec.eta as u64);
    if k * l <= n * (eta - 1) {
        return Err(Error::Infeasible(format!(
            "k*L > N*(eta-1) fails: {k}*{l} = {} <= {n}*({eta}-1) = {}",
            k * l,
            n * (eta - 1)
        )));
    }
    let strength_ratio = if eta == 1 { f64::INFINITY } else { (k * l) as f64 / ((eta - 1) * n) as f64 };
    Ok(FeasibilityReport { strength_ratio, schedulable: (n * eta).div_ceil(l) <= k })
}

/// Fairness pressure at one epoch, from [`FairnessTracker::demand`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demand {
    /// Units whose next deadline is now; equals [`FairnessTracker::urgent_set`].
    pub urgent: Vec<usize>,
    /// Minimum number of units to serve now, at least `urgent.len()` unless overdue.
    pub must_serve: usize,
    /// `(first deadline, unit)` for every unit, earliest first.
    pub queue: Vec<(u64, usize)>,
}

/// Incremental window bookkeeping for one simulation.
#[derive(Debug, Clone)]
pub struct FairnessTracker {
    spec: FairnessSpec,
    n_arms: usize,
    /// Last recorded epoch; 0 before the first record.
    now: u64,
    /// Per unit, activation epochs in `(now - L, now]`, oldest first.
    history: Vec<VecDeque<u64>>,
    last_arm_record: Vec<u64>,
}

impl FairnessTracker {
    pub fn new(spec: FairnessSpec, n_arms: usize) -> Self {
        let units = spec.n_units(n_arms);
        Self { spec, n_arms, now: 0, history: vec![VecDeque::new(); units], last_arm_record: vec![0; n_arms] }
    }

    pub fn spec(&self) -> &FairnessSpec {
        &self.spec
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn n_units(&self) -> usize {
        self.history.len()
    }

    /// Activations of `unit` in the window ending at `now`.
    pub fn count(&self, unit: usize) -> u32 {
        self.history[unit].len() as u32
    }

    pub fn deficit(&self, unit: usize) -> u32 {
        self.spec.eta.saturating_sub(self.count(unit))
    }

    /// Activations of `unit` at epochs `>= from`.
    fn count_since(&self, unit: usize, from: u64) -> u32 {
        self.history[unit].iter().rev().take_while(|&&t| t >= from).count() as u32
    }

    /// Units that must be activated at the next epoch `t = now + 1`.
    ///
    /// The earliest open window `[w, w + L - 1]` with `w = max(1, t - L + 1)` is
    /// the most binding; the unit is urgent when its remaining deficit there is
    /// at least the number of slots left, `w + L - t`.
    pub fn urgent_set(&self) -> Vec<usize> {
        let t = self.now + 1;
        let l = self.spec.window as u64;
        let w = if t >= l { t - l + 1 } else { 1 };
        let slack = w + l - t;
        (0..self.n_units())
            .filter(|&unit| {
                let deficit = self.spec.eta.saturating_sub(self.count_since(unit, w)) as u64;
                deficit >= slack
            })
            .collect()
    }

    /// Deadlines of the next `eta` activations `unit` needs, ascending.
    ///
    /// Missing activations in the earliest open window are due one per epoch
    /// up to its end; each activation already in it is replaced `L` epochs
    /// after it happened, when it leaves the window.
    pub fn deadlines(&self, unit: usize) -> Vec<u64> {
        let t = self.now + 1;
        let l = self.spec.window as u64;
        let w = if t >= l { t - l + 1 } else { 1 };
        let eta = self.spec.eta as usize;
        let recent: Vec<u64> = self.history[unit].iter().copied().filter(|&a| a >= w).collect();
        let keep = &recent[recent.len().saturating_sub(eta)..];
        let missing = (eta - keep.len()) as u64;
        let end = w + l - 1;
        (1..=missing).map(|i| end - (missing - i)).chain(keep.iter().map(|&a| a + l)).collect()
    }

    /// Budget-aware demand at the next epoch: how many units must be served
    /// so that every visible deadline stays reachable with `budget`
    /// activations per epoch, and the units in earliest-deadline order.
    pub fn demand(&self, budget: usize) -> Demand {
        let t = self.now + 1;
        let mut all: Vec<u64> = Vec::new();
        let mut queue = Vec::new();
        for unit in 0..self.n_units() {
            let d = self.deadlines(unit);
            if let Some(&first) = d.first() {
                queue.push((first, unit));
            }
            all.extend(d);
        }
        all.sort_unstable();
        queue.sort_unstable();
        // jobs due by t + h - 1 minus what later epochs can absorb
        let mut must = 0usize;
        for (j, &due) in all.iter().enumerate() {
            if all.get(j + 1) == Some(&due) {
                continue;
            }
            let later = due.saturating_sub(t) as usize * budget;
            must = must.max((j + 1).saturating_sub(later));
        }
        let urgent = queue.iter().take_while(|(due, _)| *due <= t).map(|&(_, u)| u).collect();
        Demand { urgent, must_serve: must.min(queue.len()), queue }
    }

    /// Records the arms activated at epoch `t`. `t` must be `now + 1`, or `now`
    /// for arms not yet recorded at `now`.
    pub fn record(&mut self, t: u64, arms: &[usize]) -> Result<()> {
        let same_epoch = t == self.now && t > 0;
        if t != self.now + 1 && !same_epoch {
            return Err(Error::NonMonotoneEpoch { now: self.now, got: t });
        }
        if arms.iter().any(|&i| i >= self.n_arms || (same_epoch && self.last_arm_record[i] == t)) {
            return Err(Error::InvalidFairness(format!("arm recorded twice or out of range at epoch {t}")));
        }
        self.now = t;
        let l = self.spec.window as u64;
        for &i in arms {
            self.last_arm_record[i] = t;
            self.history[self.spec.unit_of(i)].push_back(t);
        }
        for h in &mut self.history {
            while h.front().is_some_and(|&old| old + l <= t) {
                h.pop_front();
            }
        }
        Ok(())
    }

    /// Deficits recomputed from an explicit activation log (epoch `e` at index `e - 1`).
    pub fn deficits_from_log(spec: &FairnessSpec, n_arms: usize, log: &[Vec<usize>]) -> Vec<u32> {
        let now = log.len() as u64;
        let from = (now + 1).saturating_sub(spec.window as u64).max(1);
        let mut counts = vec![0u32; spec.n_units(n_arms)];
        for (e, arms) in log.iter().enumerate() {
            if e as u64 + 1 >= from {
                arms.iter().for_each(|&i| counts[spec.unit_of(i)] += 1);
            }
        }
        counts.iter().map(|&c| spec.eta.saturating_sub(c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub unit: usize,
    /// First epoch of the window.
    pub start: u64,
}

impl Violation {
    pub fn closing_epoch(&self, window: u32) -> u64 {
        self.start + window as u64 - 1
    }
}

/// Every window of `L` epochs inside `[1, T]` with fewer than `eta`
/// activations, where `log[e - 1]` lists the arms activated at epoch `e`.
/// Sorted by closing epoch, then unit.
pub fn audit(log: &[Vec<usize>], spec: &FairnessSpec, n_arms: usize) -> Vec<Violation> {
    let horizon = log.len();
    let l = spec.window as usize;
    let units = spec.n_units(n_arms);
    let mut out = Vec::new();
    if horizon < l {
        return out;
    }
    let mut per_epoch = vec![vec![0u32; units]; horizon];
    for (e, arms) in log.iter().enumerate() {
        arms.iter().for_each(|&i| per_epoch[e][spec.unit_of(i)] += 1);
    }
    let mut window = vec![0u32; units];
    for (e, counts) in per_epoch.iter().enumerate() {
        window.iter_mut().zip(counts).for_each(|(w, c)| *w += c);
        if e >= l {
            window.iter_mut().zip(&per_epoch[e - l]).for_each(|(w, c)| *w -= c);
        }
        if e + 1 >= l {
            let start = (e + 2 - l) as u64;
            out.extend(window.iter().enumerate().filter(|(_, &c)| c < spec.eta).map(|(unit, _)| Violation { unit, start }));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tracker_with(eta: u32, l: u32, n: usize, log: &[Vec<usize>]) -> FairnessTracker {
        let mut tr = FairnessTracker::new(FairnessSpec::per_arm(eta, l).unwrap(), n);
        for (e, arms) in log.iter().enumerate() {
            tr.record(e as u64 + 1, arms).unwrap();
        }
        tr
    }

    #[test]
    fn urgency_examples() {
        // last activation at t=3
        let mut log = vec![vec![], vec![], vec![0]];
        let tr = tracker_with(1, 5, 1, &[log.clone(), vec![vec![]; 3]].concat());
        assert_eq!(tr.now(), 6);
        assert!(tr.urgent_set().is_empty(), "deciding t=7");
        log.extend(vec![vec![]; 4]);
        let tr = tracker_with(1, 5, 1, &log);
        assert_eq!(tr.urgent_set(), vec![0], "deciding t=8");
    }

    #[test]
    fn fresh_tracker_has_no_urgent_units() {
        let tr = FairnessTracker::new(FairnessSpec::per_arm(2, 5).unwrap(), 4);
        assert!(tr.urgent_set().is_empty());
    }

    #[test]
    fn record_counts_and_evicts() {
        let mut tr = FairnessTracker::new(FairnessSpec::per_arm(2, 3).unwrap(), 5);
        tr.record(1, &[3]).unwrap();
        assert_eq!(tr.count(3), 1);
        tr.record(2, &[]).unwrap();
        tr.record(3, &[]).unwrap();
        assert_eq!(tr.count(3), 1);
        tr.record(4, &[]).unwrap();
        assert_eq!(tr.count(3), 0, "activation at t-L no longer counts");
        assert!(matches!(tr.record(6, &[]), Err(Error::NonMonotoneEpoch { .. })));
        assert!(tr.record(4, &[1]).is_ok());
        assert!(tr.record(4, &[1]).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let spec = FairnessSpec::per_arm(2, 50).unwrap();
        let r = check_feasibility(&spec, 10, 100).unwrap();
        assert!(r.schedulable);
        assert!(matches!(check_feasibility(&FairnessSpec::per_arm(2, 2).unwrap(), 1, 100), Err(Error::Infeasible(_))));
        let r = check_feasibility(&FairnessSpec::per_arm(2, 15).unwrap(), 10, 100).unwrap();
        assert!((r.strength_ratio - 1.5).abs() < 1e-12);
        assert!(!r.schedulable);
    }

    #[test]
    fn audit_examples() {
        let spec = FairnessSpec::per_arm(1, 3).unwrap();
        let all = vec![vec![0, 1]; 7];
        assert!(audit(&all, &spec, 2).is_empty());
        let log = vec![vec![0], vec![1], vec![], vec![], vec![0]];
        let v = audit(&log, &spec, 2);
        assert_eq!(v, vec![Violation { unit: 0, start: 2 }, Violation { unit: 1, start: 3 }]);
        assert_eq!(v[0].closing_epoch(3), 4);
    }

    #[test]
    fn group_scope_counts_members() {
        let spec = FairnessSpec::new(2, 3, Scope::PerGroup(vec![0, 0, 1])).unwrap();
        let log = vec![vec![0, 1], vec![2], vec![2]];
        assert!(audit(&log, &spec, 3).is_empty());
        assert!(FairnessSpec::new(1, 3, Scope::PerGroup(vec![0, 2])).is_err());
    }
}
