use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::args::*;
use crate::cluster::{self, ClusterProcessParams, OffspringLaw, Window};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::geom::Region;
use crate::inference::{self, GridSpec, LaggedOptions};
use crate::popdyn::{self, BlowflyFit, BlowflyModel, BlowflySeries, DeathNoise, SardineFit, SardineTable};
use crate::potential::{Potential, PotentialSpecFile};
use crate::raintravel::{self, RainCurve};
use crate::rng::RngStream;
use crate::sde::{self, ConstraintPolicy, DiffusionSpec, DriftField, LangevinState, OuParams};
use crate::trajectory::{self, load_trajectory, Trajectory, HIGH_QUALITY_LC};

pub(super) fn dispatch(cmd: &Command) -> Result<Vec<u8>> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::FitPotential(a) => fit_potential(a),
        Command::FitField(a) => fit_field(a),
        Command::FitLagged(a) => fit_lagged(a),
        Command::FitBlowfly(a) => json(&popdyn::fit_blowfly(&BlowflySeries::load(&a.series)?, a.max_age)?),
        Command::SynthBlowfly(a) => synth_blowfly(a),
        Command::FitSardine(a) => {
            let (lo, hi) = parse_ages(&a.ages)?;
            json(&popdyn::fit_sardine(&SardineTable::load(&a.table)?, lo, hi)?)
        }
        Command::PredictSardine(a) => predict_sardine(a),
        Command::FitRain(a) => fit_rain(a),
        Command::ClusterPlate(a) => cluster_plate(a),
        Command::Clumpiness(a) => clumpiness(a),
        Command::DiagnoseWedge(a) => wedge(a),
        Command::CompareSynth(a) => compare(a),
        Command::PotentialEval(a) => potential_eval(a),
        Command::Replay(_) => unreachable!("replay is handled before dispatch"),
    }
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(v)? + "\n").into_bytes())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn parse_ages(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::Parameter(format!("age window {s:?} is not of the form lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

/// `x0:x1:nx,y0:y1:ny`.
pub(super) fn parse_grid(s: &str) -> Result<GridSpec> {
    let bad = || Error::Parameter(format!("grid {s:?} is not of the form x0:x1:nx,y0:y1:ny"));
    let axis = |part: &str| -> Result<(f64, f64, usize)> {
        let f: Vec<&str> = part.split(':').collect();
        if f.len() != 3 {
            return Err(bad());
        }
        Ok((
            f[0].trim().parse().map_err(|_| bad())?,
            f[1].trim().parse().map_err(|_| bad())?,
            f[2].trim().parse().map_err(|_| bad())?,
        ))
    };
    let (xs, ys) = s.split_once(',').ok_or_else(bad)?;
    let (x0, x1, nx) = axis(xs)?;
    let (y0, y1, ny) = axis(ys)?;
    if !(x1 > x0 && y1 > y0 && nx > 0 && ny > 0) {
        return Err(bad());
    }
    Ok(GridSpec { x0, x1, nx, y0, y1, ny })
}

fn window(v: &[f64]) -> Result<Window> {
    match v {
        [x0, y0, x1, y1] => Window::new(*x0, *y0, *x1, *y1),
        _ => Err(Error::Parameter("window needs x0,y0,x1,y1".into())),
    }
}

fn simulate(a: &SimulateArgs) -> Result<Vec<u8>> {
    let grid = sde::uniform_grid(a.t0, a.t1, a.dt)?;
    let dim = a.start.len();
    let mut constraint = match &a.region {
        Some(p) => Some(ConstraintPolicy::new(Region::load(p)?)),
        None if !a.hole.is_empty() => {
            return Err(Error::Parameter("--hole needs an enclosing --region".into()));
        }
        None => None,
    };
    for h in &a.hole {
        constraint = constraint.map(|c| Ok::<_, Error>(c.with_hole(Region::load(h)?))).transpose()?;
    }
    let load_potential = || -> Result<Arc<dyn Potential>> {
        let p = a
            .potential
            .as_ref()
            .ok_or_else(|| Error::Parameter("this model needs --potential".into()))?;
        Ok(Arc::new(PotentialSpecFile::load(p)?))
    };
    let paths: Vec<Trajectory> = match a.model {
        SimModel::Langevin => {
            if dim != 2 {
                return Err(Error::Parameter("Langevin paths are planar; give --start x,y".into()));
            }
            if constraint.is_some() {
                return Err(Error::Parameter("Langevin simulation does not take a region".into()));
            }
            let h = load_potential()?;
            let v = if a.velocity.is_empty() { vec![0.0, 0.0] } else { a.velocity.clone() };
            if v.len() != 2 {
                return Err(Error::Parameter("--velocity needs two components".into()));
            }
            let state = LangevinState::new([a.start[0], a.start[1]], [v[0], v[1]], a.friction)?;
            (0..a.replicates)
                .into_par_iter()
                .map(|k| sde::simulate_langevin(&state, h.as_ref(), a.sigma, &grid, &mut RngStream::new(a.seed, k)))
                .collect::<Result<_>>()?
        }
        model => {
            let drift = match model {
                SimModel::Ou => {
                    let attractor = if a.attractor.is_empty() { vec![0.0; dim] } else { a.attractor.clone() };
                    sde::ou_drift(&OuParams::new(a.alpha, attractor, a.sigma)?)
                }
                SimModel::Brownian => DriftField::zero(),
                SimModel::Potential => sde::gradient_system_drift(load_potential()?),
                SimModel::Langevin => unreachable!(),
            };
            let diffusion = DiffusionSpec::scalar(a.sigma)?;
            (0..a.replicates)
                .into_par_iter()
                .map(|k| {
                    sde::simulate_sde(
                        &a.start,
                        &grid,
                        &drift,
                        &diffusion,
                        &mut RngStream::new(a.seed, k),
                        constraint.as_ref(),
                    )
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(if paths.len() == 1 {
        paths[0].to_csv()
    } else {
        trajectory::replicates_to_csv(&paths)
    }
    .into_bytes())
}

fn fit_potential(a: &FitPotentialArgs) -> Result<Vec<u8>> {
    let filter = a.lc_filter.then_some(&HIGH_QUALITY_LC[..]);
    let track = load_trajectory(&a.track, filter)?;
    let island = Region::load(&a.island)?;
    json(&inference::fit_potential_ls(&track, &island, a.shore_coef)?)
}

fn fit_field(a: &FitFieldArgs) -> Result<Vec<u8>> {
    let tracks = a
        .track
        .iter()
        .map(|p| load_trajectory(p, None))
        .collect::<Result<Vec<_>>>()?;
    let grid = parse_grid(&a.grid)?;
    let est = inference::estimate_drift_field(&tracks, &grid, a.bandwidth)?;
    let mut out = String::from("x,y,vx,vy,count,weight\n");
    for c in &est.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.center[0],
            c.center[1],
            opt(c.velocity.map(|v| v[0])),
            opt(c.velocity.map(|v| v[1])),
            c.count,
            c.weight
        ));
    }
    Ok(out.into_bytes())
}

fn fit_lagged(a: &FitLaggedArgs) -> Result<Vec<u8>> {
    let subject = load_trajectory(&a.subject, None)?;
    let covariate = load_trajectory(&a.covariate, None)?;
    let opts = LaggedOptions {
        null_replicates: a.null_replicates,
        ..LaggedOptions::default()
    };
    let curve = inference::fit_lagged_effect(&subject, &covariate, a.lag, &a.bins, &opts, &RngStream::new(a.seed, 0))?;
    json(&curve)
}

fn load_blowfly_model(path: &Path) -> Result<BlowflyModel> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(fit) = serde_json::from_str::<BlowflyFit>(&text) {
        return Ok(fit.model);
    }
    let m: BlowflyModel = serde_json::from_str(&text)?;
    BlowflyModel::new(m.alpha, m.beta, m.gamma, m.sigma_f)
}

fn synth_blowfly(a: &SynthBlowflyArgs) -> Result<Vec<u8>> {
    let model = load_blowfly_model(&a.fit)?;
    let series = BlowflySeries::load(&a.series)?;
    let mode = match a.mode {
        NoiseMode::Binomial => DeathNoise::Binomial,
        NoiseMode::Normal => DeathNoise::Normal,
    };
    let reps = (0..a.replicates)
        .into_par_iter()
        .map(|k| popdyn::synthesize_deaths(&model, &series.e, &series.n, mode, &mut RngStream::new(a.seed, k)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("t");
    for k in 0..reps.len() {
        out.push_str(&format!(",d{k}"));
    }
    out.push('\n');
    for i in 0..series.len().saturating_sub(1) {
        out.push_str(&series.t[i + 1].to_string());
        for r in &reps {
            out.push_str(&format!(",{}", r.deaths[i]));
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}

fn predict_sardine(a: &PredictSardineArgs) -> Result<Vec<u8>> {
    let table = SardineTable::load(&a.table)?;
    let fit: SardineFit = match &a.fit {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => {
            let (lo, hi) = parse_ages(&a.ages)?;
            popdyn::fit_sardine(&table, lo, hi)?
        }
    };
    let pred = if a.cohort {
        popdyn::predict_sardine_cohorts(&table, &fit)?
    } else {
        popdyn::predict_sardine(&table, &fit)?
    };
    Ok(pred.to_csv().into_bytes())
}

#[derive(Serialize)]
struct RainReport {
    fit: raintravel::RainFit,
    mean_travel_time: f64,
    travel_time_ci: (f64, f64),
}

fn fit_rain(a: &FitRainArgs) -> Result<Vec<u8>> {
    let curve = RainCurve::load(&a.curve, a.n_seeded, a.n_unseeded)?;
    let fit = raintravel::fit_rain_window(&curve, a.seeding_start, a.seeding_end)?;
    json(&RainReport {
        mean_travel_time: fit.mu,
        travel_time_ci: raintravel::travel_time_ci(fit.mu, fit.se.mu),
        fit,
    })
}

fn cluster_plate(a: &ClusterPlateArgs) -> Result<Vec<u8>> {
    let offspring = if a.fixed {
        if a.m < 0.0 || a.m.fract() != 0.0 {
            return Err(Error::Parameter("--fixed needs a whole --m".into()));
        }
        OffspringLaw::Fixed(a.m as u64)
    } else {
        OffspringLaw::Poisson(a.m)
    };
    let mut params = ClusterProcessParams::new(a.lambda, offspring, a.rho, window(&a.window)?)?;
    params.cap = a.cap;
    if a.two_stage {
        params = params.with_second_stage(a.m2, a.rho2)?;
    }
    let pts = cluster::simulate_cluster_plate(&params, &mut RngStream::new(a.seed, 0))?;
    Ok(cluster::points_to_csv(&pts).into_bytes())
}

#[derive(Serialize)]
struct ClumpinessReport {
    index: f64,
    points: usize,
    quadrats: usize,
}

fn clumpiness(a: &ClumpinessArgs) -> Result<Vec<u8>> {
    let pts = cluster::points_from_reader(std::fs::File::open(&a.points)?)?;
    let w = window(&a.window)?;
    json(&ClumpinessReport {
        index: cluster::clumpiness_index(&pts, &w, a.quadrat)?,
        points: pts.len(),
        quadrats: cluster::quadrat_counts(&pts, &w, a.quadrat)?.len(),
    })
}

fn wedge(a: &DiagnoseWedgeArgs) -> Result<Vec<u8>> {
    let x = SardineTable::load(&a.x)?;
    let y = SardineTable::load(&a.y)?;
    let (xs, ys, labels) = paired_cells(&x, &y);
    if xs.is_empty() {
        return Err(Error::InsufficientData("the tables share no filled cells".into()));
    }
    let w = diagnostics::wedge_data_labeled(&xs, &ys, labels)?;
    Ok(w.to_csv().into_bytes())
}

/// Cells filled in both tables, matched by age label and column position.
pub(crate) fn paired_cells(x: &SardineTable, y: &SardineTable) -> (Vec<f64>, Vec<f64>, Vec<String>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut labels = Vec::new();
    for &age in &x.ages {
        for col in 0..x.n_seasons().min(y.n_seasons()) {
            if let (Some(a), Some(b)) = (x.get(age, col), y.get(age, col)) {
                xs.push(a);
                ys.push(b);
                labels.push(format!("{age}:{}", x.seasons[col]));
            }
        }
    }
    (xs, ys, labels)
}

fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        for (c, field) in rec.iter().enumerate() {
            cols[c].push(trajectory::parse_finite(field, line)?);
        }
    }
    Ok((header, cols))
}

fn compare(a: &CompareSynthArgs) -> Result<Vec<u8>> {
    let actual = if a.deaths {
        BlowflySeries::load(&a.actual)?.deaths()
    } else {
        let (header, mut cols) = read_columns(&a.actual)?;
        let k = match &a.column {
            Some(name) => header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parameter(format!("no column {name:?} in {}", a.actual.display())))?,
            None if header.len() >= 2 => 1,
            None => 0,
        };
        cols.swap_remove(k)
    };
    let (_, cols) = read_columns(&a.synthetic)?;
    let synthetic: Vec<Vec<f64>> = cols.into_iter().skip(1).collect();
    json(&diagnostics::compare_synthetic(&actual, &synthetic)?)
}

fn potential_eval(a: &PotentialEvalArgs) -> Result<Vec<u8>> {
    let h = PotentialSpecFile::load(&a.potential)?;
    let nodes: Vec<[f64; 2]> = match (&a.grid, a.at.as_slice()) {
        (Some(g), []) => {
            let g = parse_grid(g)?;
            crate::potential::potential_lattice(&h, (g.x0, g.x1, g.nx), (g.y0, g.y1, g.ny))
                .into_iter()
                .map(|(x, y, _)| [x, y])
                .collect()
        }
        (None, [x, y]) => vec![[*x, *y]],
        _ => return Err(Error::Parameter("give exactly one of --at x,y or --grid".into())),
    };
    let mut out = String::from("x,y,H,dHdx,dHdy\n");
    for q in nodes {
        let v = h.value(q).ok();
        let g = h.gradient(q).ok();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            q[0],
            q[1],
            opt(v),
            opt(g.map(|g| g[0])),
            opt(g.map(|g| g[1]))
        ));
    }
    Ok(out.into_bytes())
}
