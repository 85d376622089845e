// Usage: cargo run --release --example drift_field
//
// Kernel-smoothed drift on a lattice from several simulated tracks, set
// beside the drift that generated them.

use stochmodels::inference::{estimate_drift_field, GridSpec};
use stochmodels::sde::{ou_drift, simulate_sde, uniform_grid, DiffusionSpec, OuParams};
use stochmodels::RngStream;

fn main() -> stochmodels::Result<()> {
    let ou = OuParams::new(0.5, vec![0.0, 0.0], 0.6)?;
    let grid = uniform_grid(0.0, 400.0, 0.1)?;
    let tracks = (0..6)
        .map(|k| {
            simulate_sde(&[0.0, 0.0], &grid, &ou_drift(&ou), &DiffusionSpec::scalar(ou.sigma)?, &mut RngStream::new(5, k), None)
        })
        .collect::<stochmodels::Result<Vec<_>>>()?;

    let lattice = GridSpec { x0: -1.2, x1: 1.2, nx: 3, y0: -1.2, y1: 1.2, ny: 3 };
    let est = estimate_drift_field(&tracks, &lattice, 0.3)?;
    println!("{:>14} {:>18} {:>18} {:>6}", "centre", "estimate", "truth", "n");
    for c in &est.cells {
        let truth = [-ou.alpha * c.center[0], -ou.alpha * c.center[1]];
        let shown = c.velocity.map_or("-".to_string(), |v| format!("({:.2}, {:.2})", v[0], v[1]));
        println!(
            "({:5.2}, {:5.2}) {shown:>18} ({:5.2}, {:5.2}) {:>6}",
            c.center[0], c.center[1], truth[0], truth[1], c.count
        );
    }
    Ok(())
}
