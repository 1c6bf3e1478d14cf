//! How an arm's belief drifts while it is left passive.
use fair_rmab::arm::{belief_u_step, classify_chain, stationary_belief, ArmParams};

fn main() -> fair_rmab::Result<()> {
    let arm = ArmParams::from_good_probs(0.6, 0.95, 0.2, 0.7)?;
    let star = stationary_belief(&arm)?;
    println!("stationary belief {star:.4}");
    for s in 0..2 {
        println!("observed s={s}: {:?}", classify_chain(&arm, arm.active(s)));
        for u in [1, 2, 3, 5, 10, 20] {
            println!("  u={u:<2} belief {:.4}", belief_u_step(s, u, &arm));
        }
    }
    Ok(())
}
