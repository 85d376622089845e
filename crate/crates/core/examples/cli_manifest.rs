// Usage: cargo run --example cli_manifest
//
// Drives the command line in-process: simulates a path into a file, reads
// back the manifest written beside it, and replays the manifest with a
// different worker count.

use stochmodels::cli::{run_with, FixedClock, Manifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("stochmodels-demo-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let out = dir.join("paths.csv");
    let clock = FixedClock(1_700_000_000);
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());

    let argv = [
        "stochmodels", "--output", out.to_str().unwrap(), "simulate", "--model", "ou", "--seed", "42",
        "--start", "1,1", "--t1", "5", "--dt", "0.01", "--alpha", "1", "--sigma", "0.5", "--replicates", "8",
    ];
    let code = run_with(argv, &clock, &mut stdout, &mut stderr);
    println!("simulate exited {code}");

    let manifest_path = dir.join("paths.csv.manifest.json");
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
    println!("manifest: {} {} seed {:?} output sha256 {}", m.tool, m.subcommand, m.seed, &m.output_sha256[..16]);

    let again = dir.join("again.csv");
    let code = run_with(
        ["stochmodels", "--workers", "3", "--output", again.to_str().unwrap(), "replay", manifest_path.to_str().unwrap()],
        &clock,
        &mut stdout,
        &mut stderr,
    );
    let same = std::fs::read(&out)? == std::fs::read(&again)?;
    println!("replay exited {code}; identical output: {same}");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
