// Usage: cargo run --example sardine
//
// Age-by-season counts: fits the season multipliers and age survival
// factors on log-ratios of consecutive cells, prints one-step predictions,
// and checks whether the spread of prediction errors grows with size.
// Then projects whole cohorts and compares them with the published
// expected numbers in table5.csv.

use stochmodels::diagnostics::wedge_data;
use stochmodels::popdyn::{fit_sardine, predict_sardine, predict_sardine_cohorts, SardineTable};

fn main() -> stochmodels::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let table = SardineTable::load(dir.join("table3.csv"))?;
    let fit = fit_sardine(&table, 3, 6)?;
    println!("season multipliers {:?}", fit.r.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
    for (a, p) in (fit.age_lo..=fit.age_hi).zip(&fit.p_star) {
        println!("  age {a} -> {}: survival factor {p:.4}", a + 1);
    }
    println!("rss {:.4} over {} ratios", fit.rss, fit.n_obs);

    let pred = predict_sardine(&table, &fit)?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    println!("\nage  {}", table.seasons.join("  "));
    for &age in &pred.ages {
        let cells: Vec<String> = (0..table.seasons.len())
            .map(|c| match (pred.get(age, c), table.get(age, c)) {
                (Some(p), Some(o)) => {
                    x.push(o);
                    y.push(p);
                    format!("{p:7.1}")
                }
                (Some(p), None) => format!("{p:7.1}"),
                _ => format!("{:>7}", "-"),
            })
            .collect();
        println!("{age:>3}  {}", cells.join(""));
    }
    let w = wedge_data(&x, &y)?;
    println!("\nspread trend (rank correlation of size and |error|): {:.3}", w.spread_trend());

    let published = SardineTable::load(dir.join("table5.csv"))?;
    let cohorts = predict_sardine_cohorts(&table, &fit)?;
    println!("\ncohort projection against the published expected numbers");
    for &age in &published.ages {
        let cells: Vec<String> = (0..table.seasons.len())
            .map(|c| match (cohorts.get(age, c), published.get(age, c)) {
                (Some(p), Some(q)) => format!("{p:8.1}/{q:<8.1}{}", if (p / q - 1.0).abs() > 0.02 { "*" } else { " " }),
                _ => format!("{:>18}", "-"),
            })
            .collect();
        println!("{age:>3}  {}", cells.join(""));
    }
    println!("(* off by more than 2%)");
    Ok(())
}
