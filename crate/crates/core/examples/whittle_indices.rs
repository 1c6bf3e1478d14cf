//! Infinite-horizon indices from the threshold closed form, checked against
//! bisection on the discounted belief MDP, and their finite-horizon versions.
use fair_rmab::arm::{belief_u_step, ArmParams};
use fair_rmab::planning::{
    exact_finite_whittle, fast_whittle_infinite, finite_whittle, whittle_binary_search, Horizon, SearchOptions,
    AVERAGE_REWARD_PROXY,
};

fn main() -> fair_rmab::Result<()> {
    let arm = ArmParams::from_good_probs(0.5, 0.9, 0.15, 0.6)?;
    let window = 10;
    let table = fast_whittle_infinite(&arm, window)?.table;
    println!("s u   fast     bisection");
    for s in 0..2 {
        for u in [1, 2, 4, 8] {
            let oracle =
                whittle_binary_search(&arm, s, u, AVERAGE_REWARD_PROXY, Horizon::infinite(), SearchOptions::windowed(window))?;
            println!("{s} {u:<2}  {:.5}  {oracle:.5}", table.get(s, u));
        }
    }

    let (s, u, beta) = (0, 3, 0.95);
    let omega = belief_u_step(s, u, &arm);
    let tw = table.get(s, u);
    println!("\nresidual  logistic  exact");
    for residual in 0..=6 {
        let fit = finite_whittle(&arm, omega, beta, residual, tw).value;
        let exact = exact_finite_whittle(&arm, s, u, beta, residual as u32)?;
        println!("{residual:<8}  {fit:.5}   {exact:.5}");
    }
    Ok(())
}
