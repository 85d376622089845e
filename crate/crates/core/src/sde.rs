//! Euler-scheme simulation of `dr = μ(r,t) dt + σ(r,t) dB`.
//!
//! Time grids are explicit, so synthetic paths can be placed on the
//! (irregular) observation times of a real track. Motion confined to a
//! polygon is handled by redrawing the Gaussian increment whenever a step
//! leaves the region.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::Region;
use crate::potential::Potential;
use crate::rng::RngStream;
use crate::trajectory::Trajectory;

type DriftFn = dyn Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync;
type DiffusionFn = dyn Fn(&[f64], f64) -> Vec<Vec<f64>> + Send + Sync;

/// Deterministic velocity field `(r, t) ↦ μ(r, t)`.
#[derive(Clone)]
pub struct DriftField {
    f: Arc<DriftFn>,
}

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DriftField(..)")
    }
}

impl DriftField {
    pub fn new(f: impl Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// Wraps an infallible field.
    pub fn from_fn(f: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::new(move |r, t| Ok(f(r, t)))
    }

    pub fn zero() -> Self {
        Self::from_fn(|r, _| vec![0.0; r.len()])
    }

    pub fn constant(v: Vec<f64>) -> Self {
        Self::from_fn(move |_, _| v.clone())
    }

    pub fn eval(&self, r: &[f64], t: f64) -> Result<Vec<f64>> {
        (self.f)(r, t)
    }
}

/// Diffusion coefficient: isotropic `σI` or a full `p×p` matrix field.
#[derive(Clone)]
pub enum DiffusionSpec {
    Scalar(f64),
    Matrix(Arc<DiffusionFn>),
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionSpec::Scalar(s) => write!(f, "Scalar({s})"),
            DiffusionSpec::Matrix(_) => f.write_str("Matrix(..)"),
        }
    }
}

impl DiffusionSpec {
    pub fn scalar(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("diffusion must be finite and ≥ 0, got {sigma}")));
        }
        Ok(Self::Scalar(sigma))
    }

    pub fn matrix(f: impl Fn(&[f64], f64) -> Vec<Vec<f64>> + Send + Sync + 'static) -> Self {
        Self::Matrix(Arc::new(f))
    }

    /// `σ(r, t) · z`.
    fn apply(&self, r: &[f64], t: f64, z: &[f64]) -> Result<Vec<f64>> {
        match self {
            DiffusionSpec::Scalar(s) => {
                if !s.is_finite() {
                    return Err(Error::Evaluation("non-finite diffusion".into()));
                }
                Ok(z.iter().map(|zi| s * zi).collect())
            }
            DiffusionSpec::Matrix(f) => {
                let m = f(r, t);
                if m.len() != r.len() || m.iter().any(|row| row.len() != z.len()) {
                    return Err(Error::Evaluation("diffusion matrix has the wrong shape".into()));
                }
                if m.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Evaluation("non-finite diffusion".into()));
                }
                Ok(m.iter()
                    .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
                    .collect())
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, DiffusionSpec::Scalar(s) if *s == 0.0)
    }
}

/// Ornstein–Uhlenbeck parameters: attraction rate, attractor point, noise.
#[derive(Debug, Clone, PartialEq)]
pub struct OuParams {
    pub alpha: f64,
    pub attractor: Vec<f64>,
    pub sigma: f64,
}

impl OuParams {
    pub fn new(alpha: f64, attractor: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("OU rate must be > 0, got {alpha}")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::Parameter(format!("OU sigma must be ≥ 0, got {sigma}")));
        }
        Ok(Self {
            alpha,
            attractor,
            sigma,
        })
    }

    /// `a + (r0 − a) e^{−αt}` per coordinate.
    pub fn mean_at(&self, r0: &[f64], t: f64) -> Vec<f64> {
        let decay = (-self.alpha * t).exp();
        r0.iter()
            .zip(&self.attractor)
            .map(|(r, a)| a + (r - a) * decay)
            .collect()
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.alpha)
    }
}

/// The field `r ↦ α(a − r)`.
pub fn ou_drift(params: &OuParams) -> DriftField {
    let alpha = params.alpha;
    let a = params.attractor.clone();
    DriftField::from_fn(move |r, _| r.iter().zip(&a).map(|(ri, ai)| alpha * (ai - ri)).collect())
}

/// The gradient-system field `r ↦ −∇H(r)` for a planar potential.
pub fn gradient_system_drift(h: Arc<dyn Potential>) -> DriftField {
    DriftField::new(move |r, _| {
        if r.len() != 2 {
            return Err(Error::Evaluation("potential drift needs planar positions".into()));
        }
        let g = h.gradient([r[0], r[1]])?;
        Ok(vec![-g[0], -g[1]])
    })
}

/// What to do once every resampling attempt has left the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fallback {
    #[default]
    HoldPrevious,
}

/// Keeps simulated positions inside `region` and out of every hole.
#[derive(Debug, Clone)]
pub struct ConstraintPolicy {
    pub region: Region,
    /// Areas the path may not enter (an island inside a bay, say).
    pub holes: Vec<Region>,
    pub max_attempts: usize,
    pub fallback: Fallback,
}

impl ConstraintPolicy {
    pub const DEFAULT_MAX_ATTEMPTS: usize = 100;

    pub fn new(region: Region) -> Self {
        Self {
            region,
            holes: Vec::new(),
            max_attempts: Self::DEFAULT_MAX_ATTEMPTS,
            fallback: Fallback::HoldPrevious,
        }
    }

    pub fn with_hole(mut self, hole: Region) -> Self {
        self.holes.push(hole);
        self
    }

    pub fn with_max_attempts(mut self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("max resample attempts must be ≥ 1".into()));
        }
        self.max_attempts = k;
        Ok(self)
    }

    /// Inside the outer region (boundary included) and strictly off every hole.
    pub fn admits(&self, r: &[f64]) -> bool {
        let q = [r[0], r[1]];
        self.region.contains(q) && self.holes.iter().all(|h| !h.contains(q))
    }
}

/// Position/velocity pair of the damped Newtonian dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub friction: f64,
}

impl LangevinState {
    pub fn new(position: [f64; 2], velocity: [f64; 2], friction: f64) -> Result<Self> {
        if !(friction > 0.0) {
            return Err(Error::Parameter(format!("friction must be > 0, got {friction}")));
        }
        Ok(Self {
            position,
            velocity,
            friction,
        })
    }
}

/// Evenly spaced grid `t0, t0+dt, …, t1` built as `t0 + k·dt`.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t1 > t0) {
        return Err(Error::Parameter("grid needs dt > 0 and t1 > t0".into()));
    }
    let n = ((t1 - t0) / dt).round() as usize;
    Ok((0..=n).map(|k| t0 + k as f64 * dt).collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Parameter("time grid needs at least 2 points".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// One Euler step: `r + μ(r,t)·dt + σ(r,t)·z·√dt`.
pub fn euler_step(
    r: &[f64],
    t: f64,
    dt: f64,
    drift: &DriftField,
    diffusion: &DiffusionSpec,
    z: &[f64],
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
    }
    let mu = drift.eval(r, t)?;
    if mu.len() != r.len() || mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation(format!("drift is not finite at t = {t}")));
    }
    let noise = diffusion.apply(r, t, z)?;
    let sqrt_dt = dt.sqrt();
    Ok(r.iter()
        .zip(&mu)
        .zip(&noise)
        .map(|((ri, mi), ni)| ri + mi * dt + ni * sqrt_dt)
        .collect())
}

/// Iterates [`euler_step`] over `grid`, starting from `r0` at `grid[0]`.
///
/// With a constraint, a step that leaves the region is redrawn up to
/// `max_attempts` times; if every draw fails the previous position is held.
pub fn simulate_sde(
    r0: &[f64],
    grid: &[f64],
    drift: &DriftField,
    diffusion: &DiffusionSpec,
    rng: &mut RngStream,
    constraint: Option<&ConstraintPolicy>,
) -> Result<Trajectory> {
    check_grid(grid)?;
    let dim = r0.len();
    if !(1..=2).contains(&dim) {
        return Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")));
    }
    if r0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0 });
    }
    if let Some(c) = constraint {
        if dim != 2 {
            return Err(Error::Parameter("region constraints need planar motion".into()));
        }
        if !c.admits(r0) {
            return Err(Error::Domain("initial position lies outside the region".into()));
        }
    }
    let deterministic = diffusion.is_zero();
    let mut coords = Vec::with_capacity(grid.len() * dim);
    coords.extend_from_slice(r0);
    let mut r = r0.to_vec();
    let mut z = vec![0.0; dim];
    for (step, w) in grid.windows(2).enumerate() {
        let (t, dt) = (w[0], w[1] - w[0]);
        let attempts = constraint.map_or(1, |c| c.max_attempts);
        let mut next = None;
        for _ in 0..attempts {
            if !deterministic {
                for zi in z.iter_mut() {
                    *zi = rng.normal();
                }
            }
            let cand = match euler_step(&r, t, dt, drift, diffusion, &z) {
                Ok(c) => c,
                Err(Error::Evaluation(_)) => return Err(Error::Divergence { step: step + 1 }),
                Err(e) => return Err(e),
            };
            if cand.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { step: step + 1 });
            }
            if constraint.is_none_or(|c| c.admits(&cand)) {
                next = Some(cand);
                break;
            }
            if deterministic {
                break;
            }
        }
        if let Some(n) = next {
            r = n;
        }
        coords.extend_from_slice(&r);
    }
    Trajectory::from_flat(grid.to_vec(), dim, coords)
}

/// Positions and velocities produced by [`langevin_path`].
#[derive(Debug, Clone)]
pub struct LangevinPath {
    pub trajectory: Trajectory,
    pub velocities: Vec<[f64; 2]>,
}

/// Euler scheme on the pair `dr = v dt`, `dv = −β v dt − β ∇H dt + σ dB`.
pub fn langevin_path(
    state0: &LangevinState,
    h: &dyn Potential,
    sigma: f64,
    grid: &[f64],
    rng: &mut RngStream,
) -> Result<LangevinPath> {
    check_grid(grid)?;
    if !(sigma >= 0.0) {
        return Err(Error::Parameter(format!("sigma must be ≥ 0, got {sigma}")));
    }
    let beta = state0.friction;
    let mut r = state0.position;
    let mut v = state0.velocity;
    let mut points = vec![r];
    let mut velocities = vec![v];
    for (step, w) in grid.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let g = h.gradient(r)?;
        let (z0, z1) = if sigma > 0.0 {
            (rng.normal(), rng.normal())
        } else {
            (0.0, 0.0)
        };
        let sd = sigma * dt.sqrt();
        let r_next = [r[0] + v[0] * dt, r[1] + v[1] * dt];
        let v_next = [
            v[0] - beta * v[0] * dt - beta * g[0] * dt + sd * z0,
            v[1] - beta * v[1] * dt - beta * g[1] * dt + sd * z1,
        ];
        if r_next.iter().chain(&v_next).any(|c| !c.is_finite()) {
            return Err(Error::Divergence { step: step + 1 });
        }
        r = r_next;
        v = v_next;
        points.push(r);
        velocities.push(v);
    }
    Ok(LangevinPath {
        trajectory: Trajectory::from_points(grid.to_vec(), &points)?,
        velocities,
    })
}

/// Position component of [`langevin_path`].
pub fn simulate_langevin(
    state0: &LangevinState,
    h: &dyn Potential,
    sigma: f64,
    grid: &[f64],
    rng: &mut RngStream,
) -> Result<Trajectory> {
    Ok(langevin_path(state0, h, sigma, grid, rng)?.trajectory)
}
