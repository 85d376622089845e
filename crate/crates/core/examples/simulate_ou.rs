// Usage: cargo run --release --example simulate_ou
//
// Attraction to a point: simulates replicate Ornstein-Uhlenbeck paths and
// compares the spread of the endpoints with the stationary variance.

use stochmodels::sde::{ou_drift, simulate_sde, uniform_grid, DiffusionSpec, OuParams};
use stochmodels::RngStream;

fn main() -> stochmodels::Result<()> {
    let ou = OuParams::new(1.0, vec![0.0, 0.0], 1.0)?;
    let grid = uniform_grid(0.0, 8.0, 0.01)?;
    let drift = ou_drift(&ou);
    let noise = DiffusionSpec::scalar(ou.sigma)?;

    let mut ends = Vec::new();
    for k in 0..400 {
        let path = simulate_sde(&[3.0, -2.0], &grid, &drift, &noise, &mut RngStream::new(7, k), None)?;
        ends.extend_from_slice(path.position(path.len() - 1));
    }
    let m = ends.iter().sum::<f64>() / ends.len() as f64;
    let var = ends.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (ends.len() - 1) as f64;
    println!("endpoint mean     {m:.4}");
    println!("endpoint variance {var:.4}");
    println!("stationary        {:.4}", ou.stationary_variance());
    Ok(())
}
