use fair_rmab::arm::{belief_step, belief_u_step, generate_instance, ArmParams, Correlation, InstanceSpec};
use fair_rmab::fairness::{audit, check_feasibility, FairnessSpec, FairnessTracker, Scope};
use fair_rmab::policy::{build_policy, fair_top_k, topk_equals_argmax_check, Planning, PolicyKind, PolicyParams};
use fair_rmab::sim::{simulate, RunSettings};
use proptest::prelude::*;

fn arm_strategy() -> impl Strategy<Value = ArmParams> {
    (0.05..0.45f64, 0.05..0.5f64, 0.0..0.4f64, 0.0..0.45f64).prop_map(|(pp01, d1, d2, d3)| {
        let pp11 = (pp01 + d1).min(0.95);
        ArmParams::from_good_probs_unchecked(pp01 + d2, (pp11 + d3).min(0.99), pp01, pp11).unwrap()
    })
}

/// Activation log honoring `urgent_set`, with extra activations from `extra`.
fn honoring_log(spec: &FairnessSpec, n: usize, horizon: u64, extra: &[bool]) -> Vec<Vec<usize>> {
    let mut tracker = FairnessTracker::new(spec.clone(), n);
    let mut log = Vec::new();
    for t in 1..=horizon {
        let urgent = tracker.urgent_set();
        let arms: Vec<usize> = (0..n)
            .filter(|&i| urgent.contains(&spec.unit_of(i)) || extra[(t as usize * n + i) % extra.len()])
            .collect();
        tracker.record(t, &arms).unwrap();
        log.push(arms);
    }
    log
}

fn instance(n: usize, seed: u64) -> Vec<ArmParams> {
    let spec = InstanceSpec { n_arms: n, budget: 1, horizon: 10, discount: 0.95, seed, correlation: Correlation::Positive };
    generate_instance(&spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn honoring_urgent_arms_never_violates(
        eta in 1u32..=3, window in 5u32..=60, n in 1usize..=5, extra in prop::collection::vec(prop::bool::weighted(0.1), 1..64),
    ) {
        let spec = FairnessSpec::per_arm(eta, window).unwrap();
        let log = honoring_log(&spec, n, 3 * window as u64, &extra);
        prop_assert!(audit(&log, &spec, n).is_empty());
    }

    #[test]
    fn incremental_deficits_match_recount(
        eta in 1u32..=3, window in 3u32..=20, n in 1usize..=6,
        log in prop::collection::vec(prop::collection::vec(prop::bool::ANY, 6), 1..80),
    ) {
        prop_assume!(eta <= window);
        let spec = FairnessSpec::per_arm(eta, window).unwrap();
        let mut tracker = FairnessTracker::new(spec.clone(), n);
        let mut acts = Vec::new();
        for (t, row) in log.iter().enumerate() {
            let arms: Vec<usize> = (0..n).filter(|&i| row[i]).collect();
            tracker.record(t as u64 + 1, &arms).unwrap();
            acts.push(arms);
            let recount = FairnessTracker::deficits_from_log(&spec, n, &acts);
            prop_assert_eq!((0..n).map(|u| tracker.deficit(u)).collect::<Vec<_>>(), recount);
        }
    }

    #[test]
    fn singleton_groups_reduce_to_per_arm(
        eta in 1u32..=3, window in 3u32..=30, n in 1usize..=6, k in 1usize..=6,
        log in prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.3), 6), 1..60),
    ) {
        prop_assume!(eta <= window);
        let arm = FairnessSpec::per_arm(eta, window).unwrap();
        let group = FairnessSpec::new(eta, window, Scope::PerGroup((0..n).collect())).unwrap();
        let mut a = FairnessTracker::new(arm.clone(), n);
        let mut g = FairnessTracker::new(group.clone(), n);
        let mut acts = Vec::new();
        for (t, row) in log.iter().enumerate() {
            prop_assert_eq!(a.urgent_set(), g.urgent_set());
            prop_assert_eq!(a.demand(k), g.demand(k));
            let arms: Vec<usize> = (0..n).filter(|&i| row[i]).collect();
            a.record(t as u64 + 1, &arms).unwrap();
            g.record(t as u64 + 1, &arms).unwrap();
            acts.push(arms);
        }
        prop_assert_eq!(audit(&acts, &arm, n), audit(&acts, &group, n));
    }

    #[test]
    fn belief_closed_form_matches_iteration(arm in arm_strategy(), s in 0usize..2, u in 1u32..200) {
        let mut omega = arm.active(s);
        for _ in 1..u {
            omega = belief_step(omega, &arm);
        }
        prop_assert!((belief_u_step(s, u, &arm) - omega).abs() <= 1e-10);
    }

    #[test]
    fn top_k_by_difference_is_optimal(q in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=8), k in 0usize..=8) {
        let q: Vec<[f64; 2]> = q.into_iter().map(|(a, b)| [a, b]).collect();
        prop_assert!(topk_equals_argmax_check(&q, k.min(q.len())));
    }

    #[test]
    fn selection_uses_exactly_the_budget(
        scores in prop::collection::vec(-1.0..1.0f64, 1..30), k in 1usize..30,
        eta in 1u32..=3, window in 3u32..=20, fair in prop::bool::ANY,
        log in prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.2), 30), 0..40),
    ) {
        prop_assume!(eta <= window);
        let n = scores.len();
        let spec = FairnessSpec::per_arm(eta, window).unwrap();
        let mut tracker = FairnessTracker::new(spec.clone(), n);
        for (t, row) in log.iter().enumerate() {
            let arms: Vec<usize> = (0..n).filter(|&i| row[i]).collect();
            tracker.record(t as u64 + 1, &arms).unwrap();
        }
        let demand = tracker.demand(k);
        let sel = fair_top_k(&scores, &demand, fair.then_some(&spec), k);
        prop_assert_eq!(sel.arms.len(), k.min(n));
        prop_assert!(sel.arms.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(sel.arms.last().is_none_or(|&i| i < n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fawt_meets_schedulable_constraints(
        n in 4usize..=30, eta in 1u32..=3, window in 5u32..=40, spare in 0usize..=2, seed in 0u64..1000,
    ) {
        prop_assume!(eta <= window);
        let spec = FairnessSpec::per_arm(eta, window).unwrap();
        let k = ((n as u32 * eta).div_ceil(window) as usize + spare).min(n);
        prop_assert!(check_feasibility(&spec, k, n).unwrap().schedulable);
        let arms = instance(n, seed);
        let planning = Planning::prepare(arms, &[PolicyKind::Fawt], Some(&spec), 0.95).unwrap();
        let mut policy = build_policy(PolicyKind::Fawt, &planning, Some(&spec), &PolicyParams::default(), seed).unwrap();
        let cfg = RunSettings { budget: k, horizon: 4 * window as u64, fairness: Some(&spec), penalty: -0.01, beta: 0.95, world_seed: seed };
        let (m, _) = simulate(&planning.arms, policy.as_mut(), &cfg).unwrap();
        prop_assert_eq!(m.violation_count, 0);
        prop_assert_eq!(m.dropped_urgent, 0);
    }

    #[test]
    fn fawt_without_constraint_is_whittle(n in 2usize..=20, k in 1usize..=5, seed in 0u64..1000) {
        let k = k.min(n);
        let planning = Planning::prepare(instance(n, seed), &[PolicyKind::Whittle, PolicyKind::Fawt], None, 0.95).unwrap();
        let cfg = RunSettings { budget: k, horizon: 100, fairness: None, penalty: 0.0, beta: 0.95, world_seed: seed };
        let mut logs = Vec::new();
        for kind in [PolicyKind::Whittle, PolicyKind::Fawt] {
            let mut policy = build_policy(kind, &planning, None, &PolicyParams::default(), seed).unwrap();
            logs.push(simulate(&planning.arms, policy.as_mut(), &cfg).unwrap().1);
        }
        prop_assert_eq!(&logs[0], &logs[1]);
    }
}
