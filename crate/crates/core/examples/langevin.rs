// Usage: cargo run --release --example langevin
//
// Position and velocity under friction in a bowl. With no noise the path
// spirals into the bottom; with noise it keeps moving.

use stochmodels::potential::{GenericPotential, Potential};
use stochmodels::sde::{langevin_path, uniform_grid, LangevinState};
use stochmodels::RngStream;

fn main() -> stochmodels::Result<()> {
    let bowl = GenericPotential::new(|q| 0.5 * (q[0] * q[0] + q[1] * q[1])).with_gradient(|q| [q[0], q[1]]);
    let grid = uniform_grid(0.0, 30.0, 0.01)?;
    let start = LangevinState::new([4.0, 0.0], [0.0, 2.0], 0.5)?;

    for sigma in [0.0, 0.5] {
        let path = langevin_path(&start, &bowl, sigma, &grid, &mut RngStream::new(3, 0))?;
        let end = path.trajectory.point(path.trajectory.len() - 1);
        let v = path.velocities.last().unwrap();
        println!(
            "sigma {sigma}: end ({:.3}, {:.3}) speed {:.3} H {:.4}",
            end[0],
            end[1],
            v[0].hypot(v[1]),
            bowl.value(end)?
        );
    }
    Ok(())
}
