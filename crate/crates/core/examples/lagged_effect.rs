// Usage: cargo run --release --example lagged_effect
//
// An animal that is pushed away from where a vehicle was five minutes ago,
// when that spot is within 1 km. The estimated effect is compared bin by
// bin with the level reached when the vehicle track is shifted in time.

use stochmodels::inference::{fit_lagged_effect, LaggedOptions};
use stochmodels::scenarios::RepulsionScenario;
use stochmodels::RngStream;

fn main() -> stochmodels::Result<()> {
    let sc = RepulsionScenario::default();
    let data = sc.simulate(&mut RngStream::new(21, 0))?;
    let baseline = sc.baseline();
    let opts = LaggedOptions {
        null_replicates: 199,
        baseline: Some(&baseline),
        ..LaggedOptions::default()
    };
    let curve = fit_lagged_effect(
        &data.subject,
        &data.vehicle,
        sc.lag,
        &[0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
        &opts,
        &RngStream::new(21, 1),
    )?;
    println!("distance (km)  count  |effect| (m/min)  null 95%");
    for b in &curve.bins {
        let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{:.1}", x * 1e3));
        println!("{:>4.1} - {:<4.1}  {:>6}  {:>16}  {:>8}", b.lo, b.hi, b.count, f(b.nu_abs), f(b.null95));
    }
    Ok(())
}
