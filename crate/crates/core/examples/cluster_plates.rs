// Usage: cargo run --release --example cluster_plates
//
// Colonies on a plate from a one- and a two-stage cluster process with the
// same centre intensity, summarised by the quadrat variance-to-mean ratio.

use stochmodels::cluster::{clumpiness_index, simulate_cluster_plate, ClusterProcessParams, OffspringLaw, Window};
use stochmodels::RngStream;

fn main() -> stochmodels::Result<()> {
    let plate = Window::new(0.0, 0.0, 1.0, 1.0)?;
    let single = ClusterProcessParams::new(40.0, OffspringLaw::Poisson(5.0), 0.02, plate)?;
    let double = single.with_second_stage(4.0, 0.08)?;
    let poisson = ClusterProcessParams::new(200.0, OffspringLaw::Fixed(1), 0.0, plate)?;

    println!("{:>4} {:>10} {:>10} {:>10}", "seed", "poisson", "single", "two-stage");
    for seed in 0..8 {
        let mut row = Vec::new();
        for p in [&poisson, &single, &double] {
            let pts = simulate_cluster_plate(p, &mut RngStream::new(seed, 0))?;
            row.push(clumpiness_index(&pts, &plate, 0.1)?);
        }
        println!("{seed:>4} {:>10.2} {:>10.2} {:>10.2}", row[0], row[1], row[2]);
    }
    Ok(())
}
