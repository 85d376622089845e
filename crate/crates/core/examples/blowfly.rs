// Usage: cargo run --release --example blowfly
//
// Fits the age-structured adult model to the packaged series, then checks
// the fit by drawing synthetic death series and ranking the observed
// variance among them.

use stochmodels::diagnostics::compare_synthetic;
use stochmodels::popdyn::{fit_blowfly, synthesize_deaths, BlowflySeries, DeathNoise};
use stochmodels::scenarios::blowfly_truth;
use stochmodels::RngStream;

fn main() -> stochmodels::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/blowfly.csv");
    let series = BlowflySeries::load(path)?;
    let fit = fit_blowfly(&series, 6)?;
    let truth = blowfly_truth();
    println!("{} steps, objective {:.4}, {} iterations", series.len(), fit.objective, fit.iterations);
    for (i, (a, b)) in fit.model.alpha.iter().zip(&truth.alpha).enumerate() {
        println!("  class {:>2}  hazard {a:.3}  (generated with {b:.3})", i + 1);
    }
    println!("  crowding  {:.2e} {:.2e}  (generated with {:.1e} {:.1e})", fit.model.beta, fit.model.gamma, truth.beta, truth.gamma);

    let synth = (0..99)
        .map(|k| {
            synthesize_deaths(&fit.model, &series.e, &series.n, DeathNoise::Binomial, &mut RngStream::new(8, k))
                .map(|s| s.deaths)
        })
        .collect::<stochmodels::Result<Vec<_>>>()?;
    let summary = compare_synthetic(&series.deaths(), &synth)?;
    let mean_r = summary.series.iter().map(|s| s.correlation).sum::<f64>() / synth.len() as f64;
    println!(
        "observed variance ranks {} of {}; mean correlation with synthetic {:.3}",
        summary.variance_rank,
        summary.ensemble_size + 1,
        mean_r
    );
    Ok(())
}
