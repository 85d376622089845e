//! Travel-time model for a downwind seeding effect.
//!
//! Seeding at a constant rate on `(A, B)` launches effects whose travel time
//! is `U = θ/W`, `W ~ Weibull(shape s, scale 1)`. The expected 3-hour running
//! mean of rainfall at the gauge is then
//!
//! ```text
//! E Y(t) = α + β [I(t+1−A) − I(t−2−A) − I(t+1−B) + I(t−2−B)],
//! I(x)   = ∫₀^x F_U(u) du,   F_U(u) = exp(−(θ/u)^s)
//! ```
//!
//! with the integral clipped at zero. `I` has the closed form
//! `(θ/s)·Γ(−1/s, (θ/x)^s) = x·F_U(x) − θ·Γ(1−1/s, (θ/x)^s)`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::optim::{multi_start, normal_inverse, Bounds, LmOptions};
use crate::special::{lower_gamma_series, upper_gamma_cf};

/// Default seeding window, hours of the day.
pub const SEEDING_START: f64 = 7.5;
pub const SEEDING_END: f64 = 21.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeLaw {
    /// Scale θ, hours.
    pub theta: f64,
    /// Weibull shape s (> 1 for a finite mean).
    pub shape: f64,
}

impl TravelTimeLaw {
    pub fn new(theta: f64, shape: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Parameter(format!("travel-time scale must be > 0, got {theta}")));
        }
        if !(shape > 1.0 && shape.is_finite()) {
            return Err(Error::Parameter(format!(
                "Weibull shape must exceed 1 for a finite mean, got {shape}"
            )));
        }
        Ok(Self { theta, shape })
    }

    /// Law with mean travel time `mu`: `θ = μ / Γ((s−1)/s)`.
    pub fn from_mean(mu: f64, shape: f64) -> Result<Self> {
        if !(shape > 1.0) {
            return Err(Error::Parameter(format!(
                "Weibull shape must exceed 1 for a finite mean, got {shape}"
            )));
        }
        Self::new(mu / gamma((shape - 1.0) / shape), shape)
    }

    /// `E U = θ Γ((s−1)/s)`.
    pub fn mean(&self) -> f64 {
        self.theta * gamma((self.shape - 1.0) / self.shape)
    }

    pub fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            (-(self.theta / u).powf(self.shape)).exp()
        }
    }
}

/// `∫₀^x F_U(u) du` in closed form.
pub fn int_fu(x: f64, law: &TravelTimeLaw) -> Result<f64> {
    if !(law.shape > 1.0) {
        return Err(Error::Parameter(format!(
            "Weibull shape must exceed 1, got {}",
            law.shape
        )));
    }
    if x.is_nan() {
        return Err(Error::Parameter("x is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let s = law.shape;
    let a = 1.0 - 1.0 / s;
    let z = (law.theta / x).powf(s);
    if z == 0.0 {
        return Ok(x - law.mean());
    }
    if z >= 1.0 + a {
        // far left tail: evaluate Γ(−1/s, z) directly, no cancellation
        Ok(law.theta / s * upper_gamma_cf(-1.0 / s, z))
    } else {
        let upper = gamma(a) - lower_gamma_series(a, z);
        Ok(x * (-z).exp() - law.theta * upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainModelParams {
    /// Natural rainfall level α.
    pub alpha: f64,
    /// Effect amplitude β.
    pub beta: f64,
    pub law: TravelTimeLaw,
    pub seeding_start: f64,
    pub seeding_end: f64,
}

impl RainModelParams {
    pub fn new(alpha: f64, beta: f64, law: TravelTimeLaw) -> Result<Self> {
        Self::with_window(alpha, beta, law, SEEDING_START, SEEDING_END)
    }

    pub fn with_window(alpha: f64, beta: f64, law: TravelTimeLaw, start: f64, end: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Parameter(format!("alpha must be ≥ 0, got {alpha}")));
        }
        if !(start < end) {
            return Err(Error::Parameter("seeding window needs start < end".into()));
        }
        Ok(Self {
            alpha,
            beta,
            law,
            seeding_start: start,
            seeding_end: end,
        })
    }

    pub fn mean_travel_time(&self) -> f64 {
        self.law.mean()
    }
}

/// Expected running-mean rainfall at hour `t`.
pub fn rain_regression(t: f64, params: &RainModelParams, seeded: bool) -> Result<f64> {
    if !seeded {
        return Ok(params.alpha);
    }
    let (a, b) = (params.seeding_start, params.seeding_end);
    let i = |x: f64| int_fu(x.max(0.0), &params.law);
    let bracket = i(t + 1.0 - a)? - i(t - 2.0 - a)? - i(t + 1.0 - b)? + i(t - 2.0 - b)?;
    Ok(params.alpha + params.beta * bracket)
}

/// Hourly running-mean curves for seeded and unseeded days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainCurve {
    pub t: Vec<f64>,
    pub seeded: Vec<f64>,
    pub unseeded: Vec<f64>,
    pub n_seeded: f64,
    pub n_unseeded: f64,
}

/// Seeded and unseeded day counts of the classic experiment.
pub const DEFAULT_DAY_COUNTS: (f64, f64) = (53.0, 38.0);

impl RainCurve {
    pub fn new(t: Vec<f64>, seeded: Vec<f64>, unseeded: Vec<f64>, n_seeded: f64, n_unseeded: f64) -> Result<Self> {
        if t.len() != seeded.len() || t.len() != unseeded.len() {
            return Err(Error::Data("seeded and unseeded curves need the same time grid".into()));
        }
        if t.is_empty() {
            return Err(Error::InsufficientData("empty rain curve".into()));
        }
        if !(n_seeded > 0.0 && n_unseeded > 0.0) {
            return Err(Error::Parameter("replicate counts must be > 0".into()));
        }
        if t.iter().chain(&seeded).chain(&unseeded).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite rain value".into()));
        }
        Ok(Self {
            t,
            seeded,
            unseeded,
            n_seeded,
            n_unseeded,
        })
    }

    /// Reads `t,y_seeded,y_unseeded`.
    pub fn load(path: impl AsRef<Path>, n_seeded: f64, n_unseeded: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(|e| Error::Data(e.to_string()))?;
        let (mut t, mut s, mut u) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() < 3 {
                return Err(Error::Parse {
                    line,
                    msg: "expected t,y_seeded,y_unseeded".into(),
                });
            }
            t.push(crate::trajectory::parse_finite(&rec[0], line)?);
            s.push(crate::trajectory::parse_finite(&rec[1], line)?);
            u.push(crate::trajectory::parse_finite(&rec[2], line)?);
        }
        Self::new(t, s, u, n_seeded, n_unseeded)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,y_seeded,y_unseeded\n");
        for i in 0..self.t.len() {
            out.push_str(&format!("{},{},{}\n", self.t[i], self.seeded[i], self.unseeded[i]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainStdErrors {
    pub mu: f64,
    pub shape: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainFit {
    pub params: RainModelParams,
    pub mu: f64,
    pub se: RainStdErrors,
    /// Weighted residual sum of squares.
    pub objective: f64,
    /// The shape estimate sits on its lower bound (s → 1⁺).
    pub boundary: bool,
    pub converged: bool,
}

/// Lower bound on the fitted Weibull shape.
pub const MIN_FIT_SHAPE: f64 = 1.0 + 1e-3;

fn rain_residuals(curve: &RainCurve, p: &[f64], start: f64, end: f64) -> Result<Vec<f64>> {
    let (mu, s, alpha, beta) = (p[0], p[1], p[2], p[3]);
    let law = TravelTimeLaw::from_mean(mu, s)?;
    let params = RainModelParams::with_window(alpha.max(0.0), beta, law, start, end)?;
    let ws = curve.n_seeded.sqrt();
    let wu = curve.n_unseeded.sqrt();
    let mut r = Vec::with_capacity(2 * curve.t.len());
    for (i, &t) in curve.t.iter().enumerate() {
        r.push(ws * (curve.seeded[i] - rain_regression(t, &params, true)?));
        r.push(wu * (curve.unseeded[i] - params.alpha));
    }
    Ok(r)
}

/// `Σ_t [n_s (Y_s(t) − E_seeded(t))² + n_u (Y_u(t) − α)²]`.
pub fn rain_objective(curve: &RainCurve, params: &RainModelParams) -> Result<f64> {
    let p = [params.mean_travel_time(), params.law.shape, params.alpha, params.beta];
    Ok(rain_residuals(curve, &p, params.seeding_start, params.seeding_end)?
        .iter()
        .map(|v| v * v)
        .sum())
}

/// Weighted least squares for `(μ, s, α, β)` with Gauss–Newton standard
/// errors under i.i.d. errors.
pub fn fit_rain(curve: &RainCurve) -> Result<RainFit> {
    fit_rain_window(curve, SEEDING_START, SEEDING_END)
}

pub fn fit_rain_window(curve: &RainCurve, start: f64, end: f64) -> Result<RainFit> {
    let n_obs = 2 * curve.t.len();
    if n_obs <= 4 {
        return Err(Error::InsufficientData("need more than 4 residuals to fit 4 parameters".into()));
    }
    let alpha0 = curve.unseeded.iter().sum::<f64>() / curve.unseeded.len() as f64;
    let peak = curve.seeded.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let beta0 = ((peak - alpha0) / 3.0).max(0.0);
    let mut starts = Vec::new();
    for mu in [2.0, 4.0, 7.0] {
        for s in [2.0, 5.0, 10.0] {
            starts.push(vec![mu, s, alpha0, beta0]);
        }
    }
    let bounds = Bounds::new(
        vec![1e-3, MIN_FIT_SHAPE, 0.0, 0.0],
        vec![100.0, 200.0, f64::INFINITY, f64::INFINITY],
    )?;
    let opts = LmOptions::default();
    let (res, _) = multi_start(|p| rain_residuals(curve, p, start, end), &starts, &bounds, &opts)?;
    if !res.converged {
        return Err(Error::Fit {
            message: "Levenberg–Marquardt hit its iteration limit".into(),
            best: res.params.clone(),
            objective: res.cost,
        });
    }
    let dof = (n_obs - 4) as f64;
    let s2 = res.cost / dof;
    let se = match normal_inverse(&res.jacobian) {
        Some(cov) => {
            let d = |k: usize| (s2 * cov[(k, k)]).max(0.0).sqrt();
            RainStdErrors {
                mu: d(0),
                shape: d(1),
                alpha: d(2),
                beta: d(3),
            }
        }
        None => RainStdErrors {
            mu: f64::NAN,
            shape: f64::NAN,
            alpha: f64::NAN,
            beta: f64::NAN,
        },
    };
    let p = &res.params;
    let law = TravelTimeLaw::from_mean(p[0], p[1])?;
    Ok(RainFit {
        params: RainModelParams::with_window(p[2], p[3], law, start, end)?,
        mu: p[0],
        se,
        objective: res.cost,
        boundary: p[1] <= MIN_FIT_SHAPE,
        converged: res.converged,
    })
}

/// `μ̂ ± 2·SE(μ̂)`, hours.
pub fn travel_time_ci(mu: f64, se_mu: f64) -> (f64, f64) {
    (mu - 2.0 * se_mu, mu + 2.0 * se_mu)
}

/// Fitted seeded curve on `t`.
pub fn fitted_curve(params: &RainModelParams, t: &[f64]) -> Result<Vec<f64>> {
    t.iter().map(|&h| rain_regression(h, params, true)).collect()
}

/// Fitted seeded curve plus the centred unseeded fluctuations.
pub fn synthesize_rain(params: &RainModelParams, t: &[f64], unseeded: &[f64]) -> Result<Vec<f64>> {
    if unseeded.len() != t.len() {
        return Err(Error::Data(format!(
            "residual pool has {} values for a grid of {}",
            unseeded.len(),
            t.len()
        )));
    }
    let mean = unseeded.iter().sum::<f64>() / unseeded.len() as f64;
    Ok(fitted_curve(params, t)?
        .into_iter()
        .zip(unseeded)
        .map(|(f, u)| f + (u - mean))
        .collect())
}

/// Peak height above the plateau: the curve's maximum minus its median over
/// `[lo, hi]`.
pub fn peak_excess(t: &[f64], y: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let mut window: Vec<f64> = t
        .iter()
        .zip(y)
        .filter(|(h, _)| **h >= lo && **h <= hi)
        .map(|(_, v)| *v)
        .collect();
    if window.is_empty() {
        return None;
    }
    let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    window.sort_by(f64::total_cmp);
    let n = window.len();
    let median = if n % 2 == 1 {
        window[n / 2]
    } else {
        0.5 * (window[n / 2 - 1] + window[n / 2])
    };
    Some(max - median)
}
