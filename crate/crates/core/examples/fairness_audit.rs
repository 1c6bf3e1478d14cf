//! Tracks a sliding-window constraint over a hand-written schedule, then
//! audits the log.
use fair_rmab::fairness::{audit, check_feasibility, FairnessSpec, FairnessTracker};

fn main() -> fair_rmab::Result<()> {
    let (n, k) = (4, 1);
    let spec = FairnessSpec::per_arm(1, 5)?;
    println!("{:?}", check_feasibility(&spec, k, n)?);

    // arm 3 is never chosen by hand; the tracker forces it when urgent
    let wished = [0, 1, 2, 0, 1, 2, 0, 1, 2, 0];
    let mut tracker = FairnessTracker::new(spec.clone(), n);
    let mut log = Vec::new();
    for (t, &arm) in (1..).zip(&wished) {
        let demand = tracker.demand(k);
        let chosen = demand.urgent.first().copied().unwrap_or(arm);
        println!("t={t:<2} urgent {:?} must serve {} -> arm {chosen}", demand.urgent, demand.must_serve);
        tracker.record(t, &[chosen])?;
        log.push(vec![chosen]);
    }
    println!("violations in the tracked log: {:?}", audit(&log, &spec, n));

    let naive: Vec<Vec<usize>> = wished.iter().map(|&a| vec![a]).collect();
    println!("violations without tracking: {}", audit(&naive, &spec, n).len());
    Ok(())
}
