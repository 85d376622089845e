//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "stochmodels", version, about = "Fit and simulate stochastic-process models")]
pub struct Cli {
    /// Write the primary output here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Run manifest path (defaults to `<output>.manifest.json` when `--output` is set).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Worker threads for replicate-level parallelism. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Euler–Maruyama paths of an OU, potential-driven, Brownian or Langevin model.
    Simulate(SimulateArgs),
    /// Least-squares fit of a polynomial-plus-shore potential to a track.
    FitPotential(FitPotentialArgs),
    /// Kernel estimate of the drift field on a grid of cells.
    FitField(FitFieldArgs),
    /// Distance-binned effect of a lagged covariate track, with a shifted-track null band.
    FitLagged(FitLaggedArgs),
    /// Weighted least-squares fit of the age-structured adult model.
    FitBlowfly(FitBlowflyArgs),
    /// Synthetic death series under a fitted adult model.
    SynthBlowfly(SynthBlowflyArgs),
    /// Season-by-age survival fit on a catch-at-age table.
    FitSardine(FitSardineArgs),
    /// Catch predictions from a survival fit, one step ahead or by cohort.
    PredictSardine(PredictSardineArgs),
    /// Travel-time regression fit to seeded and unseeded rainfall curves.
    FitRain(FitRainArgs),
    /// A synthetic plate from a Neyman–Scott cluster process.
    ClusterPlate(ClusterPlateArgs),
    /// Quadrat variance-to-mean ratio of a point set.
    Clumpiness(ClumpinessArgs),
    /// Wedge-plot coordinates for two aligned tables.
    DiagnoseWedge(DiagnoseWedgeArgs),
    /// Compare an actual series against a synthetic ensemble.
    CompareSynth(CompareSynthArgs),
    /// Evaluate a potential and its gradient.
    PotentialEval(PotentialEvalArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimModel {
    Ou,
    Brownian,
    Potential,
    Langevin,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "ou")]
    pub model: SimModel,
    #[arg(long)]
    pub seed: u64,
    /// Start position, `x` or `x,y`.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub start: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long)]
    pub t1: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// OU attraction rate.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// OU attractor; the origin when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub attractor: Vec<f64>,
    /// Potential JSON for the potential and Langevin models.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Langevin friction.
    #[arg(long, default_value_t = 1.0)]
    pub friction: f64,
    /// Langevin start velocity.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub velocity: Vec<f64>,
    /// Polygon CSV the path must stay inside.
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Polygon CSV the path must stay out of (repeatable).
    #[arg(long)]
    pub hole: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitPotentialArgs {
    #[arg(long)]
    pub track: PathBuf,
    /// Island polygon CSV.
    #[arg(long)]
    pub island: PathBuf,
    /// Coefficient of the inverse shore-distance term, held fixed.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shore_coef: f64,
    /// Keep only location classes 1, 2 and 3.
    #[arg(long)]
    pub lc_filter: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitFieldArgs {
    /// Track CSV (repeatable).
    #[arg(long, required = true)]
    pub track: Vec<PathBuf>,
    /// `x0:x1:nx,y0:y1:ny`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long)]
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitLaggedArgs {
    #[arg(long)]
    pub subject: PathBuf,
    #[arg(long)]
    pub covariate: PathBuf,
    #[arg(long)]
    pub lag: f64,
    /// Distance bin edges, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub bins: Vec<f64>,
    #[arg(long, default_value_t = 99)]
    pub null_replicates: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitBlowflyArgs {
    /// CSV `t,N,E`.
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, default_value_t = crate::popdyn::DEFAULT_MAX_AGE)]
    pub max_age: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    Binomial,
    Normal,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthBlowflyArgs {
    /// JSON written by `fit-blowfly`, or a bare model object.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, value_enum, default_value = "binomial")]
    pub mode: NoiseMode,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitSardineArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Age window `lo:hi`.
    #[arg(long, default_value = "3:6")]
    pub ages: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictSardineArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// JSON written by `fit-sardine`; when omitted the table is fitted on `--ages`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long, default_value = "3:6")]
    pub ages: String,
    /// Emit fitted cohort trajectories instead of one-step predictions.
    #[arg(long)]
    #[serde(default)]
    pub cohort: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitRainArgs {
    /// CSV `t,y_seeded,y_unseeded`.
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long, default_value_t = crate::raintravel::DEFAULT_DAY_COUNTS.0)]
    pub n_seeded: f64,
    #[arg(long, default_value_t = crate::raintravel::DEFAULT_DAY_COUNTS.1)]
    pub n_unseeded: f64,
    #[arg(long, default_value_t = crate::raintravel::SEEDING_START)]
    pub seeding_start: f64,
    #[arg(long, default_value_t = crate::raintravel::SEEDING_END)]
    pub seeding_end: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClusterPlateArgs {
    /// Cluster-centre intensity per unit area.
    #[arg(long)]
    pub lambda: f64,
    /// Mean members per cluster (Poisson), or the exact count with `--fixed`.
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub fixed: bool,
    #[arg(long)]
    pub rho: f64,
    /// `x0,y0,x1,y1`.
    #[arg(long, value_delimiter = ',', default_value = "0,0,1,1", allow_negative_numbers = true)]
    pub window: Vec<f64>,
    #[arg(long)]
    pub two_stage: bool,
    /// Mean centres per super-centre in two-stage mode.
    #[arg(long, default_value_t = 4.0)]
    pub m2: f64,
    /// Spread of centres around their super-centre.
    #[arg(long, default_value_t = 0.05)]
    pub rho2: f64,
    #[arg(long, default_value_t = crate::cluster::DEFAULT_POINT_CAP)]
    pub cap: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClumpinessArgs {
    /// CSV `x,y`.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,0,1,1", allow_negative_numbers = true)]
    pub window: Vec<f64>,
    #[arg(long)]
    pub quadrat: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DiagnoseWedgeArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareSynthArgs {
    /// CSV holding the actual series.
    #[arg(long)]
    pub actual: PathBuf,
    /// Column of `--actual` to use (defaults to the second column).
    #[arg(long)]
    pub column: Option<String>,
    /// Read `--actual` as a `t,N,E` series and compare its deaths.
    #[arg(long)]
    pub deaths: bool,
    /// Wide CSV: a time column followed by one column per synthetic series.
    #[arg(long)]
    pub synthetic: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PotentialEvalArgs {
    #[arg(long)]
    pub potential: PathBuf,
    /// Single point `x,y`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at: Vec<f64>,
    /// Lattice `x0:x1:nx,y0:y1:ny` (node-aligned).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest_file: PathBuf,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::FitPotential(_) => "fit-potential",
            Command::FitField(_) => "fit-field",
            Command::FitLagged(_) => "fit-lagged",
            Command::FitBlowfly(_) => "fit-blowfly",
            Command::SynthBlowfly(_) => "synth-blowfly",
            Command::FitSardine(_) => "fit-sardine",
            Command::PredictSardine(_) => "predict-sardine",
            Command::FitRain(_) => "fit-rain",
            Command::ClusterPlate(_) => "cluster-plate",
            Command::Clumpiness(_) => "clumpiness",
            Command::DiagnoseWedge(_) => "diagnose-wedge",
            Command::CompareSynth(_) => "compare-synth",
            Command::PotentialEval(_) => "potential-eval",
            Command::Replay(_) => "replay",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Simulate(a) => Some(a.seed),
            Command::FitLagged(a) => Some(a.seed),
            Command::SynthBlowfly(a) => Some(a.seed),
            Command::ClusterPlate(a) => Some(a.seed),
            _ => None,
        }
    }

    /// Files the command reads.
    pub fn inputs(&self) -> Vec<PathBuf> {
        let mut v: Vec<PathBuf> = match self {
            Command::Simulate(a) => a
                .potential
                .iter()
                .chain(&a.region)
                .chain(&a.hole)
                .cloned()
                .collect(),
            Command::FitPotential(a) => vec![a.track.clone(), a.island.clone()],
            Command::FitField(a) => a.track.clone(),
            Command::FitLagged(a) => vec![a.subject.clone(), a.covariate.clone()],
            Command::FitBlowfly(a) => vec![a.series.clone()],
            Command::SynthBlowfly(a) => vec![a.fit.clone(), a.series.clone()],
            Command::FitSardine(a) => vec![a.table.clone()],
            Command::PredictSardine(a) => std::iter::once(a.table.clone()).chain(a.fit.clone()).collect(),
            Command::FitRain(a) => vec![a.curve.clone()],
            Command::ClusterPlate(_) => vec![],
            Command::Clumpiness(a) => vec![a.points.clone()],
            Command::DiagnoseWedge(a) => vec![a.x.clone(), a.y.clone()],
            Command::CompareSynth(a) => vec![a.actual.clone(), a.synthetic.clone()],
            Command::PotentialEval(a) => vec![a.potential.clone()],
            Command::Replay(a) => vec![a.manifest_file.clone()],
        };
        if let Command::Simulate(SimulateArgs { potential: Some(p), .. }) | Command::PotentialEval(PotentialEvalArgs { potential: p, .. }) = self {
            // the polygon a potential file points at is an input too
            if let Some(region) = potential_region_file(p) {
                v.push(region);
            }
        }
        v
    }
}

fn potential_region_file(spec: &std::path::Path) -> Option<PathBuf> {
    let text = std::fs::read_to_string(spec).ok()?;
    let file: crate::potential::PotentialSpecFile = serde_json::from_str(&text).ok()?;
    Some(if file.region_file.is_absolute() {
        file.region_file
    } else {
        spec.parent().unwrap_or(std::path::Path::new(".")).join(file.region_file)
    })
}
