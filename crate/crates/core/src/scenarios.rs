//! Synthetic data sets with known structure, used by the examples, the
//! packaged fixtures and the test suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Region};
use crate::inference::IncrementSample;
use crate::potential::{Potential, PolynomialShore};
use crate::raintravel::{fitted_curve, RainCurve, RainModelParams, TravelTimeLaw};
use crate::rng::RngStream;
use crate::trajectory::Trajectory;

/// Island outline west of which the seal-style examples live (km).
pub fn island_outline() -> Region {
    Region::new(vec![
        [158.0, 94.0],
        [163.0, 89.0],
        [178.0, 88.0],
        [195.0, 88.0],
        [212.0, 91.0],
        [210.0, 99.0],
        [190.0, 101.0],
        [172.0, 100.0],
        [161.0, 99.0],
    ])
    .expect("valid outline")
}

/// Shallow-water bank enclosing the island (km).
pub fn bank_outline() -> Region {
    Region::new(vec![
        [125.0, 70.0],
        [175.0, 70.0],
        [215.0, 82.0],
        [220.0, 105.0],
        [160.0, 112.0],
        [125.0, 105.0],
    ])
    .expect("valid outline")
}

/// Published seal coefficients for `(x, y, x², xy, y²)`, with shore weight
/// and diffusion scale (km, hours).
pub const SEAL_BETA: [f64; 5] = [93.53, 8.00, -0.47, 0.47, -0.41];
pub const SEAL_SHORE_COEF: f64 = 7.5;
pub const SEAL_SIGMA: f64 = 4.64;
pub const SEAL_FIXES: usize = 142;

/// Coefficients with the same stationary point as [`SEAL_BETA`] but a
/// minimum there, so paths are held near it.
pub const SEAL_BASIN_BETA: [f64; 5] = [-93.53, -8.00, 0.47, -0.47, 0.41];

/// The stationary point of the quadratic part of `beta`.
pub fn quadratic_centre(beta: &[f64; 5]) -> Option<Point> {
    // ∇ = (b1 + 2 b3 x + b4 y, b2 + b4 x + 2 b5 y) = 0
    let (a, b, c, d) = (2.0 * beta[2], beta[3], beta[3], 2.0 * beta[4]);
    let det = a * d - b * c;
    if det.abs() < 1e-300 {
        return None;
    }
    Some([(-beta[0] * d + b * beta[1]) / det, (-a * beta[1] + c * beta[0]) / det])
}

/// One-hour Euler increments `Δr = −∇H dt + σ√dt z` from `n` start points
/// scattered around `centre` with spread `spread`, all at least `min_shore`
/// off the island.
#[allow(clippy::too_many_arguments)]
pub fn potential_increments(
    h: &PolynomialShore,
    sigma: f64,
    n: usize,
    centre: Point,
    spread: f64,
    min_shore: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<IncrementSample> {
    let mut starts = Vec::with_capacity(n);
    let mut ends = Vec::with_capacity(n);
    let mut tries = 0;
    while starts.len() < n {
        tries += 1;
        if tries > 1000 * n {
            return Err(Error::Parameter("could not place start points off the island".into()));
        }
        let q = [centre[0] + spread * rng.normal(), centre[1] + spread * rng.normal()];
        if h.shore_distance(q) < min_shore {
            continue;
        }
        let g = h.gradient(q)?;
        let sd = sigma * dt.sqrt();
        ends.push([q[0] - g[0] * dt + sd * rng.normal(), q[1] - g[1] * dt + sd * rng.normal()]);
        starts.push(q);
    }
    IncrementSample::from_pairs(&starts, &ends, dt)
}

/// The island grown by roughly 2 km.
fn surf_zone() -> Region {
    Region::new(vec![
        [155.5, 94.0],
        [161.5, 86.8],
        [178.0, 86.0],
        [195.5, 86.0],
        [213.8, 89.5],
        [211.7, 100.8],
        [190.2, 103.0],
        [171.5, 102.0],
        [160.0, 101.2],
    ])
    .expect("valid outline")
}

/// Hourly fixes of a finely stepped gradient-system path under the basin coefficients,
/// kept on the bank and off the island, followed by `junk` low-quality fixes
/// at half-hour offsets with kilometre-scale error. High-quality fixes carry
/// location class `3`, the others `0`, `A` or `B`.
pub fn seal_track(fixes: usize, junk: usize, rng: &mut RngStream) -> Result<Trajectory> {
    use std::sync::Arc;
    let h = PolynomialShore::new(SEAL_BASIN_BETA, SEAL_SHORE_COEF, island_outline())?;
    let centre = quadratic_centre(&SEAL_BASIN_BETA).expect("nondegenerate basin");
    // the shore term is stiff, so step finely and keep the hourly fixes
    const SUBSTEPS: usize = 100;
    let grid = crate::sde::uniform_grid(0.0, (fixes - 1) as f64, 1.0 / SUBSTEPS as f64)?;
    // a buffer keeps fixes out of the surf zone, where the shore term dominates
    let policy = crate::sde::ConstraintPolicy::new(bank_outline()).with_hole(surf_zone());
    let path = crate::sde::simulate_sde(
        &centre,
        &grid,
        &crate::sde::gradient_system_drift(Arc::new(h)),
        &crate::sde::DiffusionSpec::scalar(SEAL_SIGMA)?,
        rng,
        Some(&policy),
    )?;
    let mut rows: Vec<(f64, Point, &str)> = (0..fixes).map(|k| (k as f64, path.point(k * SUBSTEPS), "3")).collect();
    let labels = ["0", "A", "B"];
    let picks = rand::seq::index::sample(rng, fixes - 1, junk.min(fixes - 1)).into_vec();
    for (k, i) in picks.into_iter().enumerate() {
        let p = path.point(i * SUBSTEPS);
        let err = 8.0;
        rows.push((
            i as f64 + 0.5,
            [p[0] + err * rng.normal(), p[1] + err * rng.normal()],
            labels[k % labels.len()],
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let times = rows.iter().map(|r| r.0).collect();
    let points: Vec<Point> = rows.iter().map(|r| r.1).collect();
    Trajectory::from_points(times, &points)?.with_quality(rows.iter().map(|r| r.2.to_string()).collect())
}

/// Planted-repulsion scenario: a subject animal attracted to a home point
/// and pushed away from a vehicle's position `lag` time units earlier when
/// it is within `radius`. The vehicle wanders along a road on `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepulsionScenario {
    /// Total duration (minutes).
    pub duration: f64,
    /// Simulation step.
    pub dt: f64,
    /// Reporting interval of both tracks.
    pub sample_every: f64,
    pub home: Point,
    /// OU attraction rate toward `home` (per minute).
    pub attraction: f64,
    /// Diffusion scale (km per √minute).
    pub sigma: f64,
    /// Repulsion speed inside `radius` (km per minute).
    pub push: f64,
    pub radius: f64,
    pub lag: f64,
    /// Road half-length (km).
    pub road: f64,
    /// Vehicle speed (km per minute).
    pub speed: f64,
}

impl Default for RepulsionScenario {
    fn default() -> Self {
        Self {
            duration: 14_400.0,
            dt: 0.5,
            sample_every: 5.0,
            home: [0.0, 0.8],
            attraction: 0.02,
            sigma: 0.12,
            push: 0.04,
            radius: 1.0,
            lag: 5.0,
            road: 3.0,
            speed: 0.25,
        }
    }
}

pub struct RepulsionData {
    pub subject: Trajectory,
    pub vehicle: Trajectory,
}

impl RepulsionScenario {
    /// OU drift toward home, without the repulsion.
    pub fn baseline(&self) -> crate::sde::DriftField {
        let (a, h) = (self.attraction, self.home);
        crate::sde::DriftField::from_fn(move |r, _| vec![a * (h[0] - r[0]), a * (h[1] - r[1])])
    }

    pub fn simulate(&self, rng: &mut RngStream) -> Result<RepulsionData> {
        let steps = (self.duration / self.dt).round() as usize;
        let lag_steps = (self.lag / self.dt).round() as usize;
        let every = (self.sample_every / self.dt).round().max(1.0) as usize;

        // vehicle: drive to uniformly drawn road points, pausing in between
        let mut vehicle = Vec::with_capacity(steps + 1);
        let mut x = 0.0;
        let mut target = rng.uniform_range(-self.road, self.road);
        let mut pause = 0.0;
        for _ in 0..=steps {
            vehicle.push([x, 0.0]);
            if pause > 0.0 {
                pause -= self.dt;
                continue;
            }
            let step = self.speed * self.dt;
            if (target - x).abs() <= step {
                x = target;
                target = rng.uniform_range(-self.road, self.road);
                pause = rng.uniform_range(0.0, 30.0);
            } else {
                x += step * (target - x).signum();
            }
        }

        let mut r = self.home;
        let mut subject = Vec::with_capacity(steps + 1);
        let sd = self.sigma * self.dt.sqrt();
        for k in 0..=steps {
            subject.push(r);
            if k == steps {
                break;
            }
            let v = vehicle[k.saturating_sub(lag_steps)];
            let (dx, dy) = (r[0] - v[0], r[1] - v[1]);
            let d = dx.hypot(dy);
            let mut mu = [self.attraction * (self.home[0] - r[0]), self.attraction * (self.home[1] - r[1])];
            if d < self.radius && d > 0.0 {
                mu[0] += self.push * dx / d;
                mu[1] += self.push * dy / d;
            }
            r = [r[0] + mu[0] * self.dt + sd * rng.normal(), r[1] + mu[1] * self.dt + sd * rng.normal()];
        }
        let keep = |pts: &[Point]| -> Result<Trajectory> {
            let idx: Vec<usize> = (0..=steps).step_by(every).collect();
            Trajectory::from_points(
                idx.iter().map(|&i| i as f64 * self.dt).collect(),
                &idx.iter().map(|&i| pts[i]).collect::<Vec<_>>(),
            )
        };
        Ok(RepulsionData {
            subject: keep(&subject)?,
            vehicle: keep(&vehicle)?,
        })
    }
}

/// Emergence series with sharp pulses, which makes the age structure
/// identifiable from adult totals.
pub fn pulsed_emergence(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| (50.0 + 1500.0 * (t as f64 * 0.37).sin().max(0.0).powi(4)).round())
        .collect()
}

/// Known blowfly parameters used for recovery checks: six adult classes
/// with hazards rising by age and weak crowding terms.
pub fn blowfly_truth() -> crate::popdyn::BlowflyModel {
    crate::popdyn::BlowflyModel::new((0..6).map(|i| 0.1 + 0.04 * i as f64).collect(), 1e-4, 0.5e-4, 0.0)
        .expect("valid truth")
}

/// Published rain-fit values: mean travel time, shape, natural level and
/// effect amplitude.
pub const RAIN_MU: f64 = 4.78;
pub const RAIN_SHAPE: f64 = 6.68;
pub const RAIN_ALPHA: f64 = 0.24;
pub const RAIN_BETA: f64 = 1.69;

pub fn published_rain_params() -> RainModelParams {
    RainModelParams::new(
        RAIN_ALPHA,
        RAIN_BETA,
        TravelTimeLaw::from_mean(RAIN_MU, RAIN_SHAPE).expect("valid law"),
    )
    .expect("valid params")
}

/// Running-mean rain curves for hours 2..=24: the published fit plus a
/// peak near hour 18 on seeded days, and running means of skewed hourly
/// noise on both.
pub fn reconstructed_rain_curves(rng: &mut RngStream) -> Result<RainCurve> {
    let hours: Vec<f64> = (2..=24).map(f64::from).collect();
    let params = published_rain_params();
    let base = fitted_curve(&params, &hours)?;
    // hourly noise for hours 0..=25, then a running mean of 3
    let hourly = |rng: &mut RngStream, scale: f64| -> Vec<f64> {
        (0..=25).map(|_| scale * (rng.uniform() - 0.5) * 2.0).collect()
    };
    let smooth = |v: &[f64], t: usize| (v[t - 1] + v[t] + v[t + 1]) / 3.0;
    let ns = hourly(rng, 0.35);
    let nu = hourly(rng, 0.06);
    let mut seeded = Vec::with_capacity(hours.len());
    let mut unseeded = Vec::with_capacity(hours.len());
    for (i, &h) in hours.iter().enumerate() {
        let t = h as usize;
        let peak = 0.8 * (-(h - 18.0).powi(2) / 2.0).exp();
        seeded.push((base[i] + peak + smooth(&ns, t)).max(0.0));
        unseeded.push((RAIN_ALPHA + smooth(&nu, t)).max(0.0));
    }
    let (n_s, n_u) = crate::raintravel::DEFAULT_DAY_COUNTS;
    RainCurve::new(hours, seeded, unseeded, n_s, n_u)
}
