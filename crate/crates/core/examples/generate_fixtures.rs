// Usage: cargo run --example generate_fixtures [DIR]
//
// Regenerates the synthetic files under `fixtures/` (or DIR). Every file
// comes from a fixed seed, so rerunning leaves them byte-for-byte
// unchanged. The transcribed tables are not touched.

use std::path::{Path, PathBuf};

use stochmodels::popdyn::{simulate_blowfly, BlowflySeries, SimulationMode};
use stochmodels::potential::PotentialSpecFile;
use stochmodels::scenarios::{self, RepulsionScenario};
use stochmodels::RngStream;

fn write(dir: &Path, name: &str, body: impl AsRef<[u8]>) -> stochmodels::Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn spec_json(beta: [f64; 5]) -> String {
    let spec = PotentialSpecFile {
        variant: PotentialSpecFile::VARIANT.into(),
        beta,
        c: scenarios::SEAL_SHORE_COEF,
        region_file: PathBuf::from("island.csv"),
    };
    serde_json::to_string_pretty(&spec).unwrap() + "\n"
}

pub const GENERATED: [&str; 9] = [
    "island.csv",
    "bank.csv",
    "seal_potential.json",
    "seal_basin.json",
    "seal_track.csv",
    "elk.csv",
    "atv.csv",
    "blowfly.csv",
    "rain_curves.csv",
];

fn main() -> stochmodels::Result<()> {
    let dir = match std::env::args_os().nth(1) {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"),
    };
    generate(&dir)
}

pub fn generate(dir: &Path) -> stochmodels::Result<()> {
    std::fs::create_dir_all(dir)?;
    let dir = dir.to_path_buf();

    write(&dir, "island.csv", scenarios::island_outline().to_csv())?;
    write(&dir, "bank.csv", scenarios::bank_outline().to_csv())?;
    write(&dir, "seal_potential.json", spec_json(scenarios::SEAL_BETA))?;
    write(&dir, "seal_basin.json", spec_json(scenarios::SEAL_BASIN_BETA))?;
    let track = scenarios::seal_track(scenarios::SEAL_FIXES, 24, &mut RngStream::new(1990, 0))?;
    write(&dir, "seal_track.csv", track.to_csv())?;

    let sc = RepulsionScenario::default();
    let data = sc.simulate(&mut RngStream::new(1993, 0))?;
    write(&dir, "elk.csv", data.subject.to_csv())?;
    write(&dir, "atv.csv", data.vehicle.to_csv())?;

    let truth = scenarios::blowfly_truth();
    let e = scenarios::pulsed_emergence(400);
    let n = simulate_blowfly(&truth, &e, SimulationMode::Binomial, &mut RngStream::new(1957, 0))?;
    let series = BlowflySeries::new((0..e.len()).map(|t| t as f64).collect(), n, e)?;
    write(&dir, "blowfly.csv", series.to_csv())?;

    let rain = scenarios::reconstructed_rain_curves(&mut RngStream::new(1974, 0))?;
    write(&dir, "rain_curves.csv", rain.to_csv())?;
    Ok(())
}
