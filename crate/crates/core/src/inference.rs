//! Estimation from sampled paths.
//!
//! Everything here works on the Euler increments `Δr_i = r(t_{i+1}) − r(t_i)`
//! of a trajectory: the diffusion estimate, least squares for a
//! polynomial-shore potential, a kernel estimate of the drift field and the
//! binned lagged-covariate effect with its circular-shift null band.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Region};
use crate::optim::solve_least_squares;
use crate::potential::{basis_gradients, PolynomialShore, SINGULARITY_RADIUS};
use crate::rng::RngStream;
use crate::sde::DriftField;
use crate::trajectory::Trajectory;

/// Positions, increments and step durations of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSample {
    dim: usize,
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub increments: Vec<Vec<f64>>,
    pub durations: Vec<f64>,
}

impl IncrementSample {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let n = traj.len();
        let mut s = Self {
            dim: traj.dim(),
            times: Vec::with_capacity(n - 1),
            positions: Vec::with_capacity(n - 1),
            increments: Vec::with_capacity(n - 1),
            durations: Vec::with_capacity(n - 1),
        };
        for i in 0..n - 1 {
            let dt = traj.times()[i + 1] - traj.times()[i];
            if !(dt > 0.0) {
                return Err(Error::Data(format!("non-positive time step at index {i}")));
            }
            let (a, b) = (traj.position(i), traj.position(i + 1));
            s.times.push(traj.times()[i]);
            s.positions.push(a.to_vec());
            s.increments.push(b.iter().zip(a).map(|(y, x)| y - x).collect());
            s.durations.push(dt);
        }
        Ok(s)
    }

    /// Independent one-step increments `start → end` over `dt` each, as from
    /// irregular fixes where only short gaps are kept.
    pub fn from_pairs(starts: &[Point], ends: &[Point], dt: f64) -> Result<Self> {
        if starts.len() != ends.len() {
            return Err(Error::Data("start and end lists differ in length".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("step must be > 0, got {dt}")));
        }
        Ok(Self {
            dim: 2,
            times: vec![0.0; starts.len()],
            positions: starts.iter().map(|p| p.to_vec()).collect(),
            increments: starts
                .iter()
                .zip(ends)
                .map(|(a, b)| vec![b[0] - a[0], b[1] - a[1]])
                .collect(),
            durations: vec![dt; starts.len()],
        })
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Δr_i / Δt_i`.
    pub fn velocity(&self, i: usize) -> Vec<f64> {
        self.increments[i].iter().map(|d| d / self.durations[i]).collect()
    }

    fn point(&self, i: usize) -> Point {
        [self.positions[i][0], self.positions[i][1]]
    }
}

fn sigma2_from_sample(sample: &IncrementSample, drift: impl Fn(usize) -> Result<Vec<f64>>) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("no increments".into()));
    }
    let mut acc = 0.0;
    for i in 0..sample.len() {
        let dt = sample.durations[i];
        let mu = drift(i)?;
        let sq: f64 = sample.increments[i]
            .iter()
            .zip(&mu)
            .map(|(d, m)| (d - m * dt).powi(2))
            .sum();
        acc += sq / dt;
    }
    Ok(acc / (sample.dim() * sample.len()) as f64)
}

/// `σ̂² = (1/pI) Σ ‖Δr_i − μ̂(r_i)Δt_i‖² / Δt_i`.
pub fn estimate_sigma2(traj: &Trajectory, drift_hat: &DriftField) -> Result<f64> {
    let s = IncrementSample::from_trajectory(traj)?;
    sigma2_from_sample(&s, |i| drift_hat.eval(&s.positions[i], s.times[i]))
}

/// Least-squares fit of a polynomial-shore potential with `C` held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFit {
    pub beta: [f64; 5],
    #[serde(rename = "C")]
    pub c: f64,
    pub sigma: f64,
    pub rss: f64,
    pub n: usize,
}

impl PotentialFit {
    pub fn potential(&self, island: Region) -> Result<PolynomialShore> {
        PolynomialShore::new(self.beta, self.c, island)
    }
}

struct PotentialDesign {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

fn potential_design(sample: &IncrementSample, shore: &PolynomialShore) -> Result<PotentialDesign> {
    let n = sample.len();
    let mut x = DMatrix::zeros(2 * n, 5);
    let mut y = DVector::zeros(2 * n);
    for i in 0..n {
        let q = sample.point(i);
        if shore.shore_distance(q) <= SINGULARITY_RADIUS {
            return Err(Error::Domain(format!(
                "position {i} ({}, {}) is not strictly off the shore",
                q[0], q[1]
            )));
        }
        let v = sample.velocity(i);
        // μ = −Σβ_k∇φ_k − C∇(1/d): move the known shore term to the response
        let offset = if shore.c == 0.0 {
            [0.0, 0.0]
        } else {
            shore.inverse_distance_gradient(q)?
        };
        let g = basis_gradients(q);
        for axis in 0..2 {
            y[2 * i + axis] = v[axis] + shore.c * offset[axis];
            for k in 0..5 {
                x[(2 * i + axis, k)] = -g[k][axis];
            }
        }
    }
    Ok(PotentialDesign { x, y })
}

/// Sum of squared velocity residuals `Σ_i ‖Δr_i/Δt_i − μ_β(r_i)‖²` for a
/// candidate `β`.
pub fn potential_ls_objective(traj: &Trajectory, island: &Region, c: f64, beta: &[f64; 5]) -> Result<f64> {
    let sample = IncrementSample::from_trajectory(traj)?;
    let shore = PolynomialShore::new(*beta, c, island.clone())?;
    let d = potential_design(&sample, &shore)?;
    let b = DVector::from_row_slice(beta);
    Ok((&d.y - &d.x * b).norm_squared())
}

/// Ordinary least squares for `β` in `Δr/Δt = −∇(Σβ_kφ_k) − C∇(1/d) + noise`.
pub fn fit_potential_ls(traj: &Trajectory, island: &Region, c: f64) -> Result<PotentialFit> {
    if traj.dim() != 2 {
        return Err(Error::Data("potential fitting needs a planar trajectory".into()));
    }
    fit_potential_sample(&IncrementSample::from_trajectory(traj)?, island, c)
}

/// [`fit_potential_ls`] on a prepared increment sample.
pub fn fit_potential_sample(sample: &IncrementSample, island: &Region, c: f64) -> Result<PotentialFit> {
    if sample.dim() != 2 {
        return Err(Error::Data("potential fitting needs planar increments".into()));
    }
    if sample.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "need at least 6 increments, got {}",
            sample.len()
        )));
    }
    let shore = PolynomialShore::new([0.0; 5], c, island.clone())?;
    let design = potential_design(sample, &shore)?;
    let beta = solve_least_squares(&design.x, &design.y)?;
    let beta: [f64; 5] = std::array::from_fn(|k| beta[k]);
    let fitted = PolynomialShore::new(beta, c, island.clone())?;
    let rss = (&design.y - &design.x * DVector::from_row_slice(&beta)).norm_squared();
    let sigma2 = sigma2_from_sample(sample, |i| {
        let g = crate::potential::Potential::gradient(&fitted, sample.point(i))?;
        Ok(vec![-g[0], -g[1]])
    })?;
    Ok(PotentialFit {
        beta,
        c,
        sigma: sigma2.sqrt(),
        rss,
        n: sample.len(),
    })
}

/// Regular lattice of cell centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub y0: f64,
    pub y1: f64,
    pub ny: usize,
}

impl GridSpec {
    /// Centres of `nx × ny` equal cells covering `[x0,x1] × [y0,y1]`.
    pub fn centers(&self) -> Vec<Point> {
        let dx = (self.x1 - self.x0) / self.nx as f64;
        let dy = (self.y1 - self.y0) / self.ny as f64;
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push([
                    self.x0 + (i as f64 + 0.5) * dx,
                    self.y0 + (j as f64 + 0.5) * dy,
                ]);
            }
        }
        out
    }

    pub fn translated(&self, v: Point) -> Self {
        Self {
            x0: self.x0 + v[0],
            x1: self.x1 + v[0],
            y0: self.y0 + v[1],
            y1: self.y1 + v[1],
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCell {
    pub center: Point,
    /// Kernel-weighted mean velocity; `None` for unsupported cells.
    pub velocity: Option<[f64; 2]>,
    /// Increments starting within one bandwidth of the centre.
    pub count: usize,
    /// Total kernel weight (each increment contributes at most 1).
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftFieldEstimate {
    pub bandwidth: f64,
    pub min_support: f64,
    pub cells: Vec<DriftCell>,
}

/// Cells whose total kernel weight is below this are reported empty.
pub const MIN_CELL_SUPPORT: f64 = 5.0;

/// Pooled `(position, velocity)` pairs behind a kernel drift estimate.
#[derive(Debug, Clone)]
pub struct KernelDrift {
    points: Vec<Point>,
    velocities: Vec<[f64; 2]>,
    bandwidth: f64,
    min_support: f64,
}

impl KernelDrift {
    pub fn new(trajs: &[Trajectory], bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Parameter(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        if trajs.is_empty() {
            return Err(Error::InsufficientData("no trajectories".into()));
        }
        let mut points = Vec::new();
        let mut velocities = Vec::new();
        for tr in trajs {
            if tr.dim() != 2 {
                return Err(Error::Data("drift field estimation needs planar trajectories".into()));
            }
            let s = IncrementSample::from_trajectory(tr)?;
            for i in 0..s.len() {
                let v = s.velocity(i);
                points.push(s.point(i));
                velocities.push([v[0], v[1]]);
            }
        }
        Ok(Self {
            points,
            velocities,
            bandwidth,
            min_support: MIN_CELL_SUPPORT,
        })
    }

    /// Nadaraya–Watson estimate at `q` with its support.
    pub fn estimate(&self, q: Point) -> DriftCell {
        let h2 = 2.0 * self.bandwidth * self.bandwidth;
        let (mut w_sum, mut vx, mut vy, mut count) = (0.0, 0.0, 0.0, 0usize);
        for (p, v) in self.points.iter().zip(&self.velocities) {
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            let w = (-d2 / h2).exp();
            if d2 <= self.bandwidth * self.bandwidth {
                count += 1;
            }
            w_sum += w;
            vx += w * v[0];
            vy += w * v[1];
        }
        let velocity = (w_sum >= self.min_support).then(|| [vx / w_sum, vy / w_sum]);
        DriftCell {
            center: q,
            velocity,
            count,
            weight: w_sum,
        }
    }

    /// The estimate as a drift field; unsupported points map to zero.
    pub fn into_drift_field(self) -> DriftField {
        DriftField::from_fn(move |r, _| match self.estimate([r[0], r[1]]).velocity {
            Some(v) => v.to_vec(),
            None => vec![0.0, 0.0],
        })
    }
}

/// Gaussian-kernel regression of `Δr/Δt` on position, evaluated at the
/// centres of `grid`.
pub fn estimate_drift_field(trajs: &[Trajectory], grid: &GridSpec, bandwidth: f64) -> Result<DriftFieldEstimate> {
    let kd = KernelDrift::new(trajs, bandwidth)?;
    let cells = grid.centers().into_iter().map(|c| kd.estimate(c)).collect();
    Ok(DriftFieldEstimate {
        bandwidth,
        min_support: kd.min_support,
        cells,
    })
}

/// Piecewise-linear positions of `track` at `query` times.
pub fn interpolate_track(track: &Trajectory, query: &[f64]) -> Result<Vec<Vec<f64>>> {
    query.iter().map(|&t| interpolate_at(track, t)).collect()
}

fn interpolate_at(track: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let times = track.times();
    if !(t >= track.first_time() && t <= track.last_time()) {
        return Err(Error::Domain(format!(
            "query time {t} outside track span [{}, {}]",
            track.first_time(),
            track.last_time()
        )));
    }
    let j = times.partition_point(|&s| s <= t);
    if j == times.len() {
        return Ok(track.position(times.len() - 1).to_vec());
    }
    let i = j - 1;
    if times[i] == t {
        return Ok(track.position(i).to_vec());
    }
    let w = (t - times[i]) / (times[j] - times[i]);
    Ok(track
        .position(i)
        .iter()
        .zip(track.position(j))
        .map(|(a, b)| a + w * (b - a))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean residual velocity in the bin; `None` when the bin is empty.
    pub nu: Option<[f64; 2]>,
    pub nu_abs: Option<f64>,
    /// 95th percentile of `|ν̂|` over circularly shifted covariate tracks.
    pub null95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedEffectCurve {
    pub tau: f64,
    pub used_increments: usize,
    pub bins: Vec<LaggedBin>,
}

impl LaggedEffectCurve {
    /// Bins whose estimate exceeds the null level.
    pub fn exceeds_null(&self) -> Vec<Option<bool>> {
        self.bins
            .iter()
            .map(|b| match (b.nu_abs, b.null95) {
                (Some(v), Some(n)) => Some(v > n),
                _ => None,
            })
            .collect()
    }
}

/// Options for [`fit_lagged_effect`].
#[derive(Debug, Clone)]
pub struct LaggedOptions<'a> {
    pub null_replicates: usize,
    /// Baseline drift `μ̂`; the zero field when absent.
    pub baseline: Option<&'a DriftField>,
    pub null_quantile: f64,
}

impl Default for LaggedOptions<'_> {
    fn default() -> Self {
        Self {
            null_replicates: 99,
            baseline: None,
            null_quantile: 0.95,
        }
    }
}

struct LaggedInputs {
    /// Residual velocities of the usable subject increments.
    residuals: Vec<[f64; 2]>,
    positions: Vec<Point>,
    /// Covariate query times `t_i − τ`.
    lag_times: Vec<f64>,
}

fn bin_means(
    residuals: &[[f64; 2]],
    distances: &[f64],
    edges: &[f64],
) -> Vec<(usize, Option<[f64; 2]>)> {
    let nb = edges.len() - 1;
    let mut sums = vec![[0.0; 2]; nb];
    let mut counts = vec![0usize; nb];
    for (r, &d) in residuals.iter().zip(distances) {
        // bins are [lo, hi); the last one also takes d == hi
        let k = edges.partition_point(|&e| e <= d);
        let k = if k == edges.len() && d == edges[nb] { nb } else { k };
        if k == 0 || k > nb {
            continue;
        }
        sums[k - 1][0] += r[0];
        sums[k - 1][1] += r[1];
        counts[k - 1] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| (c, (c > 0).then(|| [s[0] / c as f64, s[1] / c as f64])))
        .collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distance-binned effect of a lagged covariate track on a subject's velocity.
///
/// For each usable subject increment, `d_i = |r(t_i) − x(t_i − τ)|` and the
/// residual velocity `Δr_i/Δt_i − μ̂(r_i)` is averaged per distance bin. The
/// null level of each bin comes from refits against the covariate track
/// circularly shifted in time.
pub fn fit_lagged_effect(
    subject: &Trajectory,
    covariate: &Trajectory,
    tau: f64,
    edges: &[f64],
    options: &LaggedOptions<'_>,
    rng: &RngStream,
) -> Result<LaggedEffectCurve> {
    if !(tau >= 0.0) {
        return Err(Error::Parameter(format!("lag must be ≥ 0, got {tau}")));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("distance bin edges must be increasing".into()));
    }
    if !(0.0..1.0).contains(&options.null_quantile) {
        return Err(Error::Parameter("null quantile must lie in [0, 1)".into()));
    }
    if subject.dim() != 2 || covariate.dim() != 2 {
        return Err(Error::Data("lagged effect needs planar tracks".into()));
    }
    let sample = IncrementSample::from_trajectory(subject)?;
    let (c0, c1) = (covariate.first_time(), covariate.last_time());
    let mut inputs = LaggedInputs {
        residuals: Vec::new(),
        positions: Vec::new(),
        lag_times: Vec::new(),
    };
    for i in 0..sample.len() {
        let tl = sample.times[i] - tau;
        if tl < c0 || tl > c1 {
            continue;
        }
        let v = sample.velocity(i);
        let mu = match options.baseline {
            Some(f) => f.eval(&sample.positions[i], sample.times[i])?,
            None => vec![0.0, 0.0],
        };
        inputs.residuals.push([v[0] - mu[0], v[1] - mu[1]]);
        inputs.positions.push(sample.point(i));
        inputs.lag_times.push(tl);
    }
    if inputs.residuals.is_empty() {
        return Err(Error::Data("covariate track covers none of the lagged subject times".into()));
    }

    let distances_for = |times: &[f64]| -> Result<Vec<f64>> {
        times
            .iter()
            .zip(&inputs.positions)
            .map(|(&t, p)| {
                let x = interpolate_at(covariate, t)?;
                Ok((p[0] - x[0]).hypot(p[1] - x[1]))
            })
            .collect()
    };

    let observed = bin_means(&inputs.residuals, &distances_for(&inputs.lag_times)?, edges);

    let span = c1 - c0;
    let null: Vec<Vec<Option<f64>>> = (0..options.null_replicates)
        .into_par_iter()
        .map(|k| {
            let mut r = rng.child(k as u64);
            let shift = span * r.uniform_range(0.1, 0.9);
            let shifted: Vec<f64> = inputs
                .lag_times
                .iter()
                .map(|&t| c0 + (t - c0 + shift).rem_euclid(span))
                .collect();
            let d = distances_for(&shifted)?;
            Ok(bin_means(&inputs.residuals, &d, edges)
                .into_iter()
                .map(|(_, m)| m.map(|v| v[0].hypot(v[1])))
                .collect())
        })
        .collect::<Result<_>>()?;

    let bins = observed
        .iter()
        .enumerate()
        .map(|(b, (count, nu))| {
            let mut vals: Vec<f64> = null.iter().filter_map(|rep| rep[b]).collect();
            vals.sort_by(f64::total_cmp);
            LaggedBin {
                lo: edges[b],
                hi: edges[b + 1],
                count: *count,
                nu: *nu,
                nu_abs: nu.map(|v| v[0].hypot(v[1])),
                null95: (!vals.is_empty()).then(|| quantile(&vals, options.null_quantile)),
            }
        })
        .collect();
    Ok(LaggedEffectCurve {
        tau,
        used_increments: inputs.residuals.len(),
        bins,
    })
}
