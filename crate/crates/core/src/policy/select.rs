use serde::{Deserialize, Serialize};

use crate::fairness::{Demand, FairnessSpec};

/// Arms chosen for one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Selection {
    /// Activated arms in ascending id order.
    pub arms: Vec<usize>,
    /// Urgent units left unserved because they outnumbered the budget.
    pub dropped_urgent: usize,
}

/// Arm ids sorted by descending score, ties by ascending id.
pub fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order
}

/// Arms forced in by the fairness demand, one per unit, capped at `k`, and
/// the number of urgent units that did not fit.
///
/// Urgent units come first, represented by their best-scoring member; if
/// they exceed `k` the best-scoring ones win. Remaining forced slots up to
/// `demand.must_serve` go to the earliest deadlines, ties by score.
pub fn urgent_arms(order: &[usize], demand: &Demand, fairness: Option<&FairnessSpec>, k: usize) -> (Vec<usize>, usize) {
    let Some(spec) = fairness.filter(|_| demand.must_serve > 0 || !demand.urgent.is_empty()) else {
        return (Vec::new(), 0);
    };
    let n_units = spec.n_units(order.len());
    // best member of each unit and its rank
    let mut rep = vec![None; n_units];
    for (rank, &i) in order.iter().enumerate() {
        rep[spec.unit_of(i)].get_or_insert((rank, i));
    }
    let mut urgent: Vec<(usize, usize)> = demand.urgent.iter().filter_map(|&u| rep[u]).collect();
    urgent.sort_unstable();
    let dropped = urgent.len().saturating_sub(k);
    urgent.truncate(k);
    let mut is_urgent = vec![false; n_units];
    demand.urgent.iter().for_each(|&u| is_urgent[u] = true);
    let extra = demand.must_serve.min(k).saturating_sub(urgent.len());
    let mut ahead: Vec<(u64, usize, usize)> = demand
        .queue
        .iter()
        .filter(|&&(_, u)| !is_urgent[u])
        .filter_map(|&(due, u)| rep[u].map(|(rank, i)| (due, rank, i)))
        .collect();
    ahead.sort_unstable();
    let forced = urgent.into_iter().map(|(_, i)| i).chain(ahead.into_iter().take(extra).map(|(_, _, i)| i)).collect();
    (forced, dropped)
}

/// Top-`k` by score after the arms forced by [`urgent_arms`].
pub fn fair_top_k(scores: &[f64], demand: &Demand, fairness: Option<&FairnessSpec>, k: usize) -> Selection {
    let k = k.min(scores.len());
    let order = rank_desc(scores);
    let (forced, dropped_urgent) = urgent_arms(&order, demand, fairness, k);
    fill(forced, order.into_iter(), scores.len(), k, dropped_urgent)
}

/// Completes `forced` to `k` arms taking candidates in the given order.
pub(crate) fn fill(forced: Vec<usize>, candidates: impl Iterator<Item = usize>, n: usize, k: usize, dropped_urgent: usize) -> Selection {
    let mut chosen = vec![false; n];
    forced.iter().for_each(|&i| chosen[i] = true);
    let mut arms = forced;
    let need = k - arms.len();
    arms.extend(candidates.filter(|&i| !chosen[i]).take(need));
    arms.sort_unstable();
    Selection { arms, dropped_urgent }
}
