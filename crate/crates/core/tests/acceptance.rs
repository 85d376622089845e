// Acceptance checks, one per capability. Runs without the libtest harness
// so the summary lines always print:
//
//     cargo test --test acceptance
//
// Each check prints its own line and a few measurements beneath it. The
// process fails if any check fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::Value;

use stochmodels::cli::{run_with, FixedClock};
use stochmodels::cluster::{clumpiness_index, simulate_cluster_plate, ClusterProcessParams, OffspringLaw, Window};
use stochmodels::diagnostics::{compare_synthetic, rank_uniformity_test};
use stochmodels::inference::{fit_lagged_effect, fit_potential_sample, LaggedOptions};
use stochmodels::popdyn::{
    fit_blowfly, simulate_blowfly, synthesize_deaths, BlowflyModel, BlowflySeries, DeathNoise, SimulationMode,
};
use stochmodels::potential::{eval_potential, Potential, PolynomialShore};
use stochmodels::raintravel::{fit_rain, int_fu, travel_time_ci, RainCurve, TravelTimeLaw};
use stochmodels::scenarios::{self, RepulsionScenario};
use stochmodels::sde::{
    gradient_system_drift, ou_drift, simulate_sde, uniform_grid, ConstraintPolicy, DiffusionSpec, OuParams,
};
use stochmodels::RngStream;

use common::{fixture, mean, sample_sd};

type Outcome = Result<Vec<String>, String>;
type Check = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration, notes: &mut Vec<String>) -> Result<(), String> {
    let used = start.elapsed();
    notes.push(format!("runtime {:.2} s (budget {} s)", used.as_secs_f64(), budget.as_secs()));
    check(used < budget, || format!("took {:.1} s, budget {} s", used.as_secs_f64(), budget.as_secs()))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["stochmodels"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &FixedClock(0), &mut out, &mut err);
    if code != 0 {
        return Err(format!("`{}` exited {code}: {}", args.join(" "), String::from_utf8_lossy(&err)));
    }
    Ok(out)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn sardine() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let table = fixture("table3.csv");
    let out = cli(&["fit-sardine", "--table", table.to_str().unwrap(), "--ages", "3:6"])?;
    let fit: Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let p = floats(&fit["p_star"]);
    let r = floats(&fit["r"]);
    let p_ref = [0.5944, 0.4854, 0.4629, 0.4056];
    let r_ref = [1.0, 1.2252, 1.0695, 0.6259];
    notes.push(format!("p* = {p:.4?}"));
    notes.push(format!("r  = {r:.4?}"));
    check(p.len() == 4 && r.len() == 4, || "wrong parameter counts".into())?;
    for (got, want) in p.iter().chain(&r).zip(p_ref.iter().chain(&r_ref)) {
        check((got - want).abs() <= 0.02, || format!("{got:.4} is not within 0.02 of {want}"))?;
    }
    within_budget(start, Duration::from_secs(1), &mut notes)?;

    // grid-search oracle on the same log-ratio objective
    let dense: Vec<Vec<f64>> = std::fs::read_to_string(&table)
        .map_err(|e| e.to_string())?
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    let (lo, hi) = (2, 5); // ages 3..=6 as row indices
    let (_, _, oracle) = common::sardine_grid_search(&dense, lo, hi);
    let log_r: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let log_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let ours = common::sardine_rss(&dense, lo, hi, &log_r, &log_p);
    notes.push(format!("objective {ours:.12} vs grid search {oracle:.12}"));
    check((ours - oracle).abs() <= 1e-8, || format!("objective differs from the oracle by {:e}", ours - oracle))?;
    Ok(notes)
}

fn rain() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut rng = RngStream::new(2024, 0);
    let mut worst: f64 = 0.0;
    let mut worst_at = (0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let theta = rng.uniform_range(0.5, 10.0);
        let shape = rng.uniform_range(1.5, 10.0);
        let x = rng.uniform_range(0.0, 6.0 * theta);
        let law = TravelTimeLaw::new(theta, shape).map_err(|e| e.to_string())?;
        let ours = int_fu(x, &law).map_err(|e| e.to_string())?;
        // F_U(u) = P(theta / W <= u) = exp(-(theta / u)^s) for Weibull W
        let cdf = |u: f64| if u <= 0.0 { 0.0 } else { (-(theta / u).powf(shape)).exp() };
        let reference = common::adaptive_simpson(&cdf, 0.0, x, 1e-11);
        if reference > 1e-200 {
            let rel = (ours - reference).abs() / reference;
            if rel > worst {
                worst = rel;
                worst_at = (theta, shape, x);
            }
        } else {
            check(ours.abs() < 1e-200, || format!("expected ~0 at x = {x}, got {ours}"))?;
        }
    }
    notes.push(format!("worst relative error vs quadrature {worst:.2e} over 1000 draws"));
    check(worst <= 1e-8, || format!("relative error {worst:e} at (theta, s, x) = {worst_at:?}"))?;

    let curve = RainCurve::load(fixture("rain_curves.csv"), 53.0, 38.0).map_err(|e| e.to_string())?;
    let fit = fit_rain(&curve).map_err(|e| e.to_string())?;
    notes.push(format!("fitted mean travel time {:.3} h, natural level {:.3}", fit.mu, fit.params.alpha));
    check((fit.mu - 4.78).abs() <= 0.5, || format!("mean travel time {} not within 0.5 of 4.78", fit.mu))?;
    check((fit.params.alpha - 0.24).abs() <= 0.05, || format!("natural level {} not within 0.05", fit.params.alpha))?;

    let (lo, hi) = travel_time_ci(4.78, 0.47);
    notes.push(format!("interval for (4.78, 0.47): ({lo}, {hi})"));
    check((lo - 3.84).abs() < 1e-12 && (hi - 5.72).abs() < 1e-12, || format!("interval ({lo}, {hi})"))?;
    within_budget(start, Duration::from_secs(30), &mut notes)?;
    Ok(notes)
}

fn sde_engine() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();

    let ou = OuParams::new(1.0, vec![0.0, 0.0], 1.0).map_err(|e| e.to_string())?;
    let grid = uniform_grid(0.0, 8.0, 0.01).map_err(|e| e.to_string())?;
    let ends: Vec<f64> = (0..400u64)
        .into_par_iter()
        .map(|k| {
            let p = simulate_sde(&[0.0, 0.0], &grid, &ou_drift(&ou), &DiffusionSpec::scalar(1.0).unwrap(), &mut RngStream::new(1, k), None)
                .unwrap();
            p.position(p.len() - 1).to_vec()
        })
        .flatten()
        .collect();
    let var = sample_sd(&ends).powi(2);
    notes.push(format!("endpoint variance {var:.4} vs 0.5 ({} coordinates)", ends.len()));
    check((var / 0.5 - 1.0).abs() <= 0.10, || format!("endpoint variance {var}"))?;

    // mean bias at t = 1 from (1, 1) with dt and dt/2
    let small = OuParams::new(1.0, vec![0.0, 0.0], 0.2).map_err(|e| e.to_string())?;
    let exact = (-1.0f64).exp();
    let bias = |dt: f64| -> f64 {
        let grid = uniform_grid(0.0, 1.0, dt).unwrap();
        let ends: Vec<f64> = (0..40_000u64)
            .into_par_iter()
            .map(|k| {
                let p = simulate_sde(&[1.0, 1.0], &grid, &ou_drift(&small), &DiffusionSpec::scalar(0.2).unwrap(), &mut RngStream::new(2, k), None)
                    .unwrap();
                p.position(p.len() - 1).to_vec()
            })
            .flatten()
            .collect();
        (mean(&ends) - exact).abs()
    };
    let (b1, b2) = (bias(0.1), bias(0.05));
    notes.push(format!("mean bias {b1:.5} at dt 0.1, {b2:.5} at dt 0.05, ratio {:.3}", b1 / b2));
    check((1.5..=3.0).contains(&(b1 / b2)), || format!("bias ratio {}", b1 / b2))?;

    let h = PolynomialShore::new(scenarios::SEAL_BASIN_BETA, scenarios::SEAL_SHORE_COEF, scenarios::island_outline())
        .map_err(|e| e.to_string())?;
    let policy = ConstraintPolicy::new(scenarios::bank_outline()).with_hole(scenarios::island_outline());
    let start_pt = scenarios::quadratic_centre(&scenarios::SEAL_BASIN_BETA).unwrap();
    let grid = uniform_grid(0.0, 10_000.0, 0.01).map_err(|e| e.to_string())?;
    let path = simulate_sde(
        &start_pt,
        &grid,
        &gradient_system_drift(Arc::new(h)),
        &DiffusionSpec::scalar(scenarios::SEAL_SIGMA).unwrap(),
        &mut RngStream::new(3, 0),
        Some(&policy),
    )
    .map_err(|e| e.to_string())?;
    let bank = scenarios::bank_outline();
    let island = scenarios::island_outline();
    let outside = path.positions().filter(|p| !bank.contains([p[0], p[1]]) || island.contains([p[0], p[1]])).count();
    notes.push(format!("{} constrained steps, {outside} positions outside", path.len() - 1));
    check(path.len() > 1_000_000 && outside == 0, || format!("{outside} positions escaped"))?;
    within_budget(start, Duration::from_secs(60), &mut notes)?;
    Ok(notes)
}

fn potential() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let island = scenarios::island_outline();
    let bank = scenarios::bank_outline();
    let (x0, y0, x1, y1) = bank.bounds();
    let mut rng = RngStream::new(12, 0);

    let mut worst: f64 = 0.0;
    let mut probes = 0;
    while probes < 1000 {
        let beta = [0; 5].map(|_| rng.uniform_range(-2.0, 2.0));
        let c = rng.uniform_range(0.0, 10.0);
        let h = PolynomialShore::new(beta, c, island.clone()).map_err(|e| e.to_string())?;
        let q = [rng.uniform_range(x0, x1), rng.uniform_range(y0, y1)];
        let mut d = common::edge_distances(island.vertices(), q);
        d.sort_by(f64::total_cmp);
        // keep to points off the island with a single nearest edge feature
        if island.contains(q) || d[0] < 0.5 || d[1] - d[0] < 1e-3 {
            continue;
        }
        probes += 1;
        let g = h.gradient(q).map_err(|e| e.to_string())?;
        let step = 1e-5 * (1.0 + q[0].abs().max(q[1].abs()));
        let fd = [0, 1].map(|k| {
            let mut a = q;
            let mut b = q;
            a[k] += step;
            b[k] -= step;
            (eval_potential(&h, a).unwrap() - eval_potential(&h, b).unwrap()) / (2.0 * step)
        });
        let err = (g[0] - fd[0]).hypot(g[1] - fd[1]) / g[0].hypot(g[1]).max(1.0);
        worst = worst.max(err);
    }
    notes.push(format!("worst gradient relative error {worst:.2e} over {probes} probes"));
    check(worst <= 1e-4, || format!("gradient error {worst:e}"))?;

    let h = PolynomialShore::new(scenarios::SEAL_BETA, scenarios::SEAL_SHORE_COEF, island.clone()).map_err(|e| e.to_string())?;
    let centre = scenarios::quadratic_centre(&scenarios::SEAL_BETA).unwrap();
    let clean = scenarios::potential_increments(&h, 0.0, scenarios::SEAL_FIXES, centre, 20.0, 1.0, 1.0, &mut RngStream::new(0, 0))
        .map_err(|e| e.to_string())?;
    let fit = fit_potential_sample(&clean, &island, scenarios::SEAL_SHORE_COEF).map_err(|e| e.to_string())?;
    let err = fit.beta.iter().zip(scenarios::SEAL_BETA).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    notes.push(format!("noiseless recovery error {err:.1e}"));
    check(err <= 1e-6, || format!("noiseless recovery error {err:e}"))?;

    let signs = [1.0, 1.0, -1.0, 1.0, -1.0];
    let matched = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let s = scenarios::potential_increments(
                &h,
                scenarios::SEAL_SIGMA,
                scenarios::SEAL_FIXES,
                centre,
                20.0,
                1.0,
                1.0,
                &mut RngStream::new(seed, 1),
            )
            .unwrap();
            let f = fit_potential_sample(&s, &island, scenarios::SEAL_SHORE_COEF).unwrap();
            f.beta.iter().zip(signs).all(|(b, s)| b * s > 0.0)
        })
        .count();
    notes.push(format!("sign pattern (+,+,-,+,-) recovered in {matched} of 50 noisy regenerations"));
    check(matched >= 45, || format!("only {matched} of 50 seeds match"))?;
    within_budget(start, Duration::from_secs(60), &mut notes)?;
    Ok(notes)
}

fn series_from(model: &BlowflyModel, e: &[f64], mode: SimulationMode, seed: u64) -> BlowflySeries {
    let n = simulate_blowfly(model, e, mode, &mut RngStream::new(seed, 0)).unwrap();
    BlowflySeries::new((0..e.len()).map(|t| t as f64).collect(), n, e.to_vec()).unwrap()
}

fn params(m: &BlowflyModel) -> Vec<f64> {
    let mut v = m.alpha.clone();
    v.extend([m.beta, m.gamma]);
    v
}

fn blowfly() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let truth = scenarios::blowfly_truth();
    let e = scenarios::pulsed_emergence(400);
    let want = params(&truth);

    let clean = series_from(&truth, &e, SimulationMode::Deterministic, 0);
    let fit = fit_blowfly(&clean, truth.max_age()).map_err(|e| e.to_string())?;
    let err = params(&fit.model).iter().zip(&want).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    notes.push(format!("noiseless refit: objective {:.1e}, worst relative parameter error {err:.1e}", fit.objective));
    check(fit.objective < 1e-12, || format!("objective {}", fit.objective))?;
    check(err < 1e-6, || format!("parameter error {err}"))?;

    let fits: Vec<Vec<f64>> = (0..20u64)
        .into_par_iter()
        .map(|seed| params(&fit_blowfly(&series_from(&truth, &e, SimulationMode::Binomial, seed + 1), truth.max_age()).unwrap().model))
        .collect();
    let mut worst: f64 = 0.0;
    for (j, truth_j) in want.iter().enumerate() {
        let col: Vec<f64> = fits.iter().map(|f| f[j]).collect();
        let z = (mean(&col) - truth_j).abs() / sample_sd(&col);
        worst = worst.max(z);
    }
    notes.push(format!("binomial recovery over 20 seeds: worst |mean - truth| = {worst:.2} empirical SEs"));
    check(worst <= 3.0, || format!("a parameter is {worst:.2} SEs off"))?;

    // actual series drawn from the same model as a 100-member ensemble
    let short = scenarios::pulsed_emergence(200);
    let ranks: Vec<usize> = (0..500u64)
        .into_par_iter()
        .map(|k| {
            let n = simulate_blowfly(&truth, &short, SimulationMode::Binomial, &mut RngStream::new(k, 0)).unwrap();
            let draw = |j: u64| synthesize_deaths(&truth, &short, &n, DeathNoise::Binomial, &mut RngStream::new(k, j)).unwrap().deaths;
            let synthetic: Vec<Vec<f64>> = (1..=100).map(draw).collect();
            compare_synthetic(&draw(0), &synthetic).unwrap().variance_rank
        })
        .collect();
    let (stat, p) = rank_uniformity_test(&ranks, 101, 10).map_err(|e| e.to_string())?;
    notes.push(format!("variance-rank calibration over 500 repetitions: chi-square {stat:.2}, p = {p:.3}"));
    check(p > 0.01, || format!("rank calibration p = {p}"))?;
    within_budget(start, Duration::from_secs(300), &mut notes)?;
    Ok(notes)
}

fn lagged() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let sc = RepulsionScenario::default();
    let baseline = sc.baseline();
    let edges = [0.0, 1.0, 2.0, 4.0];
    let results: Vec<(bool, bool)> = (0..50u64)
        .map(|seed| {
            let d = sc.simulate(&mut RngStream::new(seed, 0)).unwrap();
            let opts = LaggedOptions {
                null_replicates: 199,
                baseline: Some(&baseline),
                ..LaggedOptions::default()
            };
            let c = fit_lagged_effect(&d.subject, &d.vehicle, sc.lag, &edges, &opts, &RngStream::new(seed, 1)).unwrap();
            let e = c.exceeds_null();
            (e[0] == Some(true), e[2] == Some(false))
        })
        .collect();
    let near = results.iter().filter(|r| r.0).count();
    let far = results.iter().filter(|r| r.1).count();
    let both = results.iter().filter(|r| r.0 && r.1).count();
    notes.push(format!("above null within 1 km: {near}/50; below null at 2-4 km: {far}/50; both: {both}/50"));
    check(both >= 45, || format!("pattern held in {both} of 50 seeds"))?;
    within_budget(start, Duration::from_secs(120), &mut notes)?;
    Ok(notes)
}

fn cluster() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let plate = Window::new(0.0, 0.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let poisson = ClusterProcessParams::new(200.0, OffspringLaw::Fixed(1), 0.0, plate).map_err(|e| e.to_string())?;
    let idx: Vec<f64> = (0..200u64)
        .map(|s| clumpiness_index(&simulate_cluster_plate(&poisson, &mut RngStream::new(s, 0)).unwrap(), &plate, 0.1).unwrap())
        .collect();
    let se = sample_sd(&idx) / (idx.len() as f64).sqrt();
    let z = (mean(&idx) - 1.0) / se;
    notes.push(format!("degenerate clusters: mean index {:.4} (SE {se:.4}, {z:+.2} SE from 1)", mean(&idx)));
    check(z.abs() <= 3.0, || format!("mean index is {z:.2} SE from 1"))?;

    let single = ClusterProcessParams::new(40.0, OffspringLaw::Poisson(5.0), 0.02, plate).map_err(|e| e.to_string())?;
    let double = single.with_second_stage(8.0, 0.05).map_err(|e| e.to_string())?;
    let wins = (0..200u64)
        .filter(|&s| {
            let a = clumpiness_index(&simulate_cluster_plate(&single, &mut RngStream::new(s, 0)).unwrap(), &plate, 0.1).unwrap();
            let b = clumpiness_index(&simulate_cluster_plate(&double, &mut RngStream::new(s, 0)).unwrap(), &plate, 0.1).unwrap();
            b > a
        })
        .count();
    notes.push(format!("two-stage index above single-stage in {wins}/200 paired seeds"));
    check(wins >= 190, || format!("{wins}/200"))?;
    within_budget(start, Duration::from_secs(60), &mut notes)?;
    Ok(notes)
}

fn determinism() -> Outcome {
    let mut notes = Vec::new();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let fx = |name: &str| fixture(name).to_str().unwrap().to_string();
    cli(&["--output", &p("fit.json"), "fit-blowfly", "--series", &fx("blowfly.csv"), "--max-age", "6"])?;

    let runs: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate", "--model", "ou", "--seed", "5", "--start", "1,-1", "--t1", "2", "--dt", "0.01", "--replicates", "16"].into_iter().map(String::from).collect()),
        ("simulate-potential", vec![
            "simulate".into(), "--model".into(), "potential".into(), "--potential".into(), fx("seal_basin.json"),
            "--region".into(), fx("bank.csv"), "--hole".into(), fx("island.csv"), "--start".into(), "146.3,93.6".into(),
            "--t1".into(), "24".into(), "--dt".into(), "0.01".into(), "--sigma".into(), "4.64".into(), "--seed".into(), "6".into(), "--replicates".into(), "4".into(),
        ]),
        ("fit-lagged", vec![
            "fit-lagged".into(), "--subject".into(), fx("elk.csv"), "--covariate".into(), fx("atv.csv"), "--lag".into(), "5".into(),
            "--bins".into(), "0,1,2,4".into(), "--seed".into(), "7".into(), "--null-replicates".into(), "49".into(),
        ]),
        ("synth-blowfly", vec![
            "synth-blowfly".into(), "--fit".into(), p("fit.json"), "--series".into(), fx("blowfly.csv"), "--replicates".into(), "12".into(), "--seed".into(), "8".into(),
        ]),
        ("synth-blowfly-normal", vec![
            "synth-blowfly".into(), "--fit".into(), p("fit.json"), "--series".into(), fx("blowfly.csv"), "--mode".into(), "normal".into(), "--replicates".into(), "12".into(), "--seed".into(), "8".into(),
        ]),
        ("cluster-plate", vec!["cluster-plate", "--lambda", "40", "--m", "5", "--rho", "0.02", "--two-stage", "--seed", "9"].into_iter().map(String::from).collect()),
    ];
    for (name, args) in &runs {
        let first = p(&format!("{name}.out"));
        let mut argv: Vec<&str> = vec!["--workers", "1", "--output", &first];
        argv.extend(args.iter().map(String::as_str));
        cli(&argv)?;
        let manifest = format!("{first}.manifest.json");
        let original = std::fs::read(&first).map_err(|e| e.to_string())?;
        for (k, workers) in ["1", "1", "4"].iter().enumerate() {
            let again = p(&format!("{name}.replay{k}"));
            cli(&["--workers", workers, "--output", &again, "replay", &manifest])?;
            let bytes = std::fs::read(&again).map_err(|e| e.to_string())?;
            check(bytes == original, || format!("{name}: replay {k} with {workers} worker(s) differs"))?;
        }
        notes.push(format!("{name}: {} bytes, identical across 3 replays (1, 1 and 4 workers)", original.len()));
    }
    Ok(notes)
}

fn main() {
    let checks: [Check; 8] = [
        ("1 sardine table fit", sardine),
        ("2 rain travel-time model", rain),
        ("3 SDE engine", sde_engine),
        ("4 potential machinery", potential),
        ("5 blowfly model", blowfly),
        ("6 lagged effect", lagged),
        ("7 cluster plates", cluster),
        ("8 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in checks {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(notes) => {
                println!("PASS  criterion {name} ({:.1} s)", t.elapsed().as_secs_f64());
                for n in notes {
                    println!("        {n}");
                }
            }
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
