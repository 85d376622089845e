// Usage: cargo run --release --example constrained_path
//
// A gradient-system path on a shallow bank that may not enter the island.
// Steps that would leave the bank or land on the island are redrawn.

use std::sync::Arc;

use stochmodels::potential::PolynomialShore;
use stochmodels::scenarios::{bank_outline, island_outline, quadratic_centre, SEAL_BASIN_BETA, SEAL_SHORE_COEF};
use stochmodels::sde::{gradient_system_drift, simulate_sde, uniform_grid, ConstraintPolicy, DiffusionSpec};
use stochmodels::RngStream;

fn main() -> stochmodels::Result<()> {
    let h = PolynomialShore::new(SEAL_BASIN_BETA, SEAL_SHORE_COEF, island_outline())?;
    let start = quadratic_centre(&SEAL_BASIN_BETA).expect("basin has a centre");
    let policy = ConstraintPolicy::new(bank_outline()).with_hole(island_outline());
    let grid = uniform_grid(0.0, 240.0, 0.01)?;

    let path = simulate_sde(
        &start,
        &grid,
        &gradient_system_drift(Arc::new(h)),
        &DiffusionSpec::scalar(4.64)?,
        &mut RngStream::new(11, 0),
        Some(&policy),
    )?;
    let outside = path.positions().filter(|p| !policy.admits(p)).count();
    let held = (1..path.len()).filter(|&i| path.position(i) == path.position(i - 1)).count();
    println!("{} positions, {outside} outside the allowed area, {held} held steps", path.len());

    let (x0, y0, x1, y1) = bank_outline().bounds();
    println!("bank bounds x [{x0}, {x1}] y [{y0}, {y1}]");
    for i in (0..path.len()).step_by(2400) {
        let p = path.point(i);
        println!("t = {:>5.1} h  ({:7.2}, {:6.2})", path.times()[i], p[0], p[1]);
    }
    Ok(())
}
