//! Runs the structural checkers over a small batch of generated arms.
use fair_rmab::verify::{run_check, Check};

fn main() -> fair_rmab::Result<()> {
    for check in Check::ALL {
        let r = run_check(check, 40, 7)?;
        let kind = if check.is_hard() { "invariant" } else { "rate" };
        println!("{:<13} {kind:<9} {:>6.1}% pass  {}", check.name(), 100.0 * r.pass_rate(), r.detail);
    }
    Ok(())
}
