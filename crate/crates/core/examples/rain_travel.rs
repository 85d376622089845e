// Usage: cargo run --release --example rain_travel
//
// Rain after cloud seeding: fits the Weibull travel-time model to the
// packaged seeded and unseeded running-mean curves.

use stochmodels::raintravel::{fit_rain, fitted_curve, travel_time_ci, RainCurve, TravelTimeLaw};

fn main() -> stochmodels::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/rain_curves.csv");
    let curve = RainCurve::load(path, 53.0, 38.0)?;
    let fit = fit_rain(&curve)?;
    let (lo, hi) = travel_time_ci(fit.mu, fit.se.mu);
    println!("mean travel time {:.2} h ({:.2}), interval [{lo:.2}, {hi:.2}]", fit.mu, fit.se.mu);
    println!("shape            {:.2} ({:.2})", fit.params.law.shape, fit.se.shape);
    println!("natural level    {:.3} ({:.3})", fit.params.alpha, fit.se.alpha);
    println!("seeding effect   {:.3} ({:.3})", fit.params.beta, fit.se.beta);

    let law: &TravelTimeLaw = &fit.params.law;
    println!("P(arrival within 5 h) = {:.3}", law.cdf(5.0));
    let model = fitted_curve(&fit.params, &curve.t)?;
    println!("\n hour  seeded  model  unseeded");
    for (i, fit) in model.iter().enumerate() {
        println!("{:5}  {:6.2} {:6.2}  {:8.2}", curve.t[i], curve.seeded[i], fit, curve.unseeded[i]);
    }
    Ok(())
}
