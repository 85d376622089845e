// Usage: cargo run --example seal_potential
//
// Fits the quadratic-plus-shore potential to the packaged seal-style track,
// keeping only high-quality fixes, and prints the fitted surface on a
// coarse lattice, darker digits higher. `.` marks the island.

use stochmodels::inference::fit_potential_ls;
use stochmodels::potential::{potential_lattice, PotentialSpecFile};
use stochmodels::trajectory::HIGH_QUALITY_LC;
use stochmodels::{load_trajectory, Region};

fn main() -> stochmodels::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let island = Region::load(dir.join("island.csv"))?;
    let all = load_trajectory(dir.join("seal_track.csv"), None)?;
    let track = load_trajectory(dir.join("seal_track.csv"), Some(&HIGH_QUALITY_LC))?;
    println!("{} fixes, {} of high quality", all.len(), track.len());

    let fit = fit_potential_ls(&track, &island, 7.5)?;
    println!("beta  {:?}", fit.beta.map(|b| (b * 1e3).round() / 1e3));
    println!("sigma {:.3} km/sqrt(h)", fit.sigma);

    let truth = PotentialSpecFile::load(dir.join("seal_basin.json"))?;
    println!("generating beta {:?}", truth.beta);

    let h = fit.potential(island)?;
    let rows = potential_lattice(&h, (125.0, 215.0, 19), (70.0, 110.0, 9));
    let lo = rows.iter().filter_map(|r| r.2).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().filter_map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    for line in rows.chunks(19).rev() {
        let s: String = line
            .iter()
            .map(|r| match r.2 {
                None => '.',
                Some(v) => b"0123456789"[((9.0 * (v - lo) / (hi - lo)).sqrt() * 3.0).min(9.0) as usize] as char,
            })
            .collect();
        println!("  {s}");
    }
    Ok(())
}
