//! Age-structured adult blowfly model.
//!
//! Class `i` survives one period with probability
//! `p_i = (1−α_i)(1−βN_t)(1−γN_{t−1})`, each factor clamped to `[0, 1]`.
//! Newly emerged adults enter class 1; survivors of the oldest class stay in
//! it (a plus-group), so every hazard acts on observed deaths.

use std::path::Path;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{multi_start, Bounds, LmOptions};
use crate::rng::RngStream;

pub const DEFAULT_MAX_AGE: usize = 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowflyModel {
    /// Baseline per-period hazard of each age class, youngest first.
    pub alpha: Vec<f64>,
    /// Density coefficient on the current adult count.
    pub beta: f64,
    /// Density coefficient on the previous adult count.
    pub gamma: f64,
    /// Relative sd of death fluctuations for normal synthesis.
    pub sigma_f: f64,
}

impl BlowflyModel {
    pub fn new(alpha: Vec<f64>, beta: f64, gamma: f64, sigma_f: f64) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::Parameter("need at least 2 age classes".into()));
        }
        if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Parameter("age hazards must lie in [0, 1]".into()));
        }
        if !(beta >= 0.0 && gamma >= 0.0 && sigma_f >= 0.0) {
            return Err(Error::Parameter("β, γ and σ_f must be ≥ 0".into()));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            sigma_f,
        })
    }

    pub fn max_age(&self) -> usize {
        self.alpha.len()
    }
}

/// One survival probability together with the number of clamped factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Survival {
    pub p: f64,
    pub clamps: u32,
}

fn clamp01(v: f64, clamps: &mut u32) -> f64 {
    if v < 0.0 {
        *clamps += 1;
        0.0
    } else if v > 1.0 {
        *clamps += 1;
        1.0
    } else {
        v
    }
}

/// Survival of class `i` (1-based) given current and previous adult totals.
pub fn survival_prob(model: &BlowflyModel, i: usize, n_t: f64, n_prev: f64) -> Result<Survival> {
    if i == 0 || i > model.max_age() {
        return Err(Error::Parameter(format!(
            "age class {i} outside 1..={}",
            model.max_age()
        )));
    }
    let mut clamps = 0;
    let p = clamp01(1.0 - model.alpha[i - 1], &mut clamps)
        * clamp01(1.0 - model.beta * n_t, &mut clamps)
        * clamp01(1.0 - model.gamma * n_prev, &mut clamps);
    Ok(Survival { p, clamps })
}

/// Expected class counts `m[t][i]` and the hazards that act on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeStructuredState {
    pub m: Vec<Vec<f64>>,
    /// Death probability `1 − p` of each class at each step.
    pub q: Vec<Vec<f64>>,
    pub clamps: u64,
}

impl AgeStructuredState {
    pub fn totals(&self) -> Vec<f64> {
        self.m.iter().map(|row| row.iter().sum()).collect()
    }

    /// `Σ_i q_{i,t} m_{i,t}`, the expected deaths between `t` and `t+1`.
    pub fn expected_deaths(&self) -> Vec<f64> {
        self.m
            .iter()
            .zip(&self.q)
            .take(self.m.len().saturating_sub(1))
            .map(|(m, q)| m.iter().zip(q).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn check_series(e: &[f64], n: &[f64]) -> Result<()> {
    if e.len() != n.len() {
        return Err(Error::Data(format!(
            "emergence series has {} steps, adult series {}",
            e.len(),
            n.len()
        )));
    }
    if let Some(k) = e.iter().chain(n).position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Data(format!("negative or non-finite count at position {k}")));
    }
    Ok(())
}

fn hazards(model: &BlowflyModel, n_t: f64, n_prev: f64, clamps: &mut u64) -> Vec<f64> {
    (1..=model.max_age())
        .map(|i| {
            let s = survival_prob(model, i, n_t, n_prev).expect("class in range");
            *clamps += s.clamps as u64;
            1.0 - s.p
        })
        .collect()
}

fn age_one_step(m: &[f64], q: &[f64], entrants: f64) -> Vec<f64> {
    let a = m.len();
    let mut next = vec![0.0; a];
    next[0] = entrants;
    for i in 0..a - 1 {
        next[i + 1] += (1.0 - q[i]) * m[i];
    }
    next[a - 1] += (1.0 - q[a - 1]) * m[a - 1];
    next
}

/// Runs the expected-count recursion from an empty population, with density
/// terms taken from the observed adult series.
pub fn blowfly_propagate(model: &BlowflyModel, e: &[f64], n: &[f64]) -> Result<AgeStructuredState> {
    check_series(e, n)?;
    let a = model.max_age();
    let mut clamps = 0;
    let mut m = Vec::with_capacity(n.len());
    let mut q = Vec::with_capacity(n.len());
    if n.is_empty() {
        return Ok(AgeStructuredState { m, q, clamps });
    }
    let mut cur = vec![0.0; a];
    cur[0] = e[0];
    for t in 0..n.len() {
        let prev = if t == 0 { 0.0 } else { n[t - 1] };
        let qt = hazards(model, n[t], prev, &mut clamps);
        let next = (t + 1 < n.len()).then(|| age_one_step(&cur, &qt, e[t + 1]));
        m.push(cur);
        q.push(qt);
        match next {
            Some(nx) => cur = nx,
            None => break,
        }
    }
    Ok(AgeStructuredState { m, q, clamps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimulationMode {
    /// Expected counts; the adult total is `Σ m`.
    Deterministic,
    /// Binomial survival of integer cohorts.
    Binomial,
}

/// Simulates the adult total driven by an emergence series, with density
/// terms fed back from the simulated totals.
pub fn simulate_blowfly(model: &BlowflyModel, e: &[f64], mode: SimulationMode, rng: &mut RngStream) -> Result<Vec<f64>> {
    check_series(e, e)?;
    let a = model.max_age();
    let mut counts = vec![0.0; a];
    let mut n = Vec::with_capacity(e.len());
    let mut clamps = 0;
    for t in 0..e.len() {
        if t == 0 {
            counts[0] = match mode {
                SimulationMode::Deterministic => e[0],
                SimulationMode::Binomial => e[0].round(),
            };
        } else {
            let prev2 = if t >= 2 { n[t - 2] } else { 0.0 };
            let q = hazards(model, n[t - 1], prev2, &mut clamps);
            counts = match mode {
                SimulationMode::Deterministic => age_one_step(&counts, &q, e[t]),
                SimulationMode::Binomial => {
                    let survivors: Vec<f64> = counts
                        .iter()
                        .zip(&q)
                        .map(|(c, qi)| binomial(*c, 1.0 - qi, rng))
                        .collect();
                    let mut next = vec![0.0; a];
                    next[0] = e[t].round();
                    next[1..a].copy_from_slice(&survivors[..a - 1]);
                    next[a - 1] += survivors[a - 1];
                    next
                }
            };
        }
        n.push(counts.iter().sum());
    }
    Ok(n)
}

fn binomial(n: f64, p: f64, rng: &mut RngStream) -> f64 {
    let trials = n.round().max(0.0) as u64;
    if trials == 0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return trials as f64;
    }
    Binomial::new(trials, p).expect("p in (0,1)").sample(rng) as f64
}

/// Adult totals and emergences on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowflySeries {
    pub t: Vec<f64>,
    pub n: Vec<f64>,
    pub e: Vec<f64>,
}

impl BlowflySeries {
    pub fn new(t: Vec<f64>, n: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if t.len() != n.len() {
            return Err(Error::Data("time and adult series differ in length".into()));
        }
        check_series(&e, &n)?;
        Ok(Self { t, n, e })
    }

    /// `D_t = N_{t−1} − N_t + E_t`, for `t = 1..T−1`.
    pub fn deaths(&self) -> Vec<f64> {
        (1..self.n.len())
            .map(|t| self.n[t - 1] - self.n[t] + self.e[t])
            .collect()
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// Reads `t,N,E`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(|e| Error::Data(e.to_string()))?;
        let (mut t, mut n, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|err| Error::Parse {
                line: err.position().map_or(0, |p| p.line()),
                msg: err.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() < 3 {
                return Err(Error::Parse {
                    line,
                    msg: "expected t,N,E".into(),
                });
            }
            t.push(crate::trajectory::parse_finite(&rec[0], line)?);
            n.push(crate::trajectory::parse_finite(&rec[1], line)?);
            e.push(crate::trajectory::parse_finite(&rec[2], line)?);
        }
        Self::new(t, n, e)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,N,E\n");
        for i in 0..self.n.len() {
            out.push_str(&format!("{},{},{}\n", self.t[i], self.n[i], self.e[i]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowflyFit {
    pub model: BlowflyModel,
    /// `Σ_t (D_{t+1} − Σ_i q m)² / N_t²`.
    pub objective: f64,
    /// Residual count entering the objective.
    pub n_obs: usize,
    pub iterations: usize,
    pub start_index: usize,
}

/// Standardized residuals `(D_{t+1} − Σ_i q_{i,t} m_{i,t}) / N_t`.
pub fn blowfly_residuals(model: &BlowflyModel, series: &BlowflySeries) -> Result<Vec<f64>> {
    let state = blowfly_propagate(model, &series.e, &series.n)?;
    let d = series.deaths();
    let ed = state.expected_deaths();
    let mut r = Vec::with_capacity(d.len());
    for t in 0..d.len() {
        if series.n[t] <= 0.0 {
            return Err(Error::Data(format!("adult count is zero at step {t}")));
        }
        r.push((d[t] - ed[t]) / series.n[t]);
    }
    Ok(r)
}

pub fn blowfly_objective(model: &BlowflyModel, series: &BlowflySeries) -> Result<f64> {
    Ok(blowfly_residuals(model, series)?.iter().map(|v| v * v).sum())
}

/// Weighted least squares for `(α_1..α_A, β, γ)` under box constraints,
/// from a fixed list of starts.
pub fn fit_blowfly(series: &BlowflySeries, max_age: usize) -> Result<BlowflyFit> {
    if max_age < 2 {
        return Err(Error::Parameter("need at least 2 age classes".into()));
    }
    if series.len() < max_age + 5 {
        return Err(Error::InsufficientData(format!(
            "{} steps for {} age classes; need at least {}",
            series.len(),
            max_age,
            max_age + 5
        )));
    }
    if let Some(t) = series.n[..series.len() - 1].iter().position(|v| *v <= 0.0) {
        return Err(Error::Data(format!("adult count is zero at step {t}")));
    }
    // density coefficients are fitted on the scale of the largest count
    let scale = series.n.iter().cloned().fold(0.0, f64::max);
    let unpack = |p: &[f64]| -> Result<BlowflyModel> {
        BlowflyModel::new(p[..max_age].to_vec(), p[max_age] / scale, p[max_age + 1] / scale, 0.0)
    };
    let resid = |p: &[f64]| blowfly_residuals(&unpack(p)?, series);

    let mut starts = Vec::new();
    for a0 in [0.05, 0.2] {
        for d0 in [0.0, 0.2] {
            let mut s = vec![a0; max_age];
            s.push(d0);
            s.push(d0);
            starts.push(s);
        }
    }
    let bounds = Bounds::new(vec![0.0; max_age + 2], vec![1.0; max_age + 2])?;
    let opts = LmOptions {
        ftol: 1e-12,
        ..LmOptions::default()
    };
    let (res, start_index) = multi_start(resid, &starts, &bounds, &opts)?;
    if !res.converged {
        return Err(Error::Fit {
            message: format!("no convergence after {} iterations", res.iterations),
            best: res.params.clone(),
            objective: res.cost,
        });
    }
    let n_obs = res.residuals.len();
    let dof = n_obs.saturating_sub(max_age + 2).max(1) as f64;
    let mut model = unpack(&res.params)?;
    model.sigma_f = (res.cost / dof).sqrt();
    Ok(BlowflyFit {
        model,
        objective: res.cost,
        n_obs,
        iterations: res.iterations,
        start_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeathNoise {
    Binomial,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDeaths {
    /// `D_1..D_{T−1}`.
    pub deaths: Vec<f64>,
    /// Normal draws that went negative and were set to zero.
    pub clamped: usize,
}

/// Synthetic deaths under the fitted model, driven by the observed series.
pub fn synthesize_deaths(
    model: &BlowflyModel,
    e: &[f64],
    n: &[f64],
    mode: DeathNoise,
    rng: &mut RngStream,
) -> Result<SyntheticDeaths> {
    let state = blowfly_propagate(model, e, n)?;
    let steps = n.len().saturating_sub(1);
    let mut deaths = Vec::with_capacity(steps);
    let mut clamped = 0;
    for (t, &n_t) in n.iter().enumerate().take(steps) {
        let (m, q) = (&state.m[t], &state.q[t]);
        let d = match mode {
            DeathNoise::Binomial => m.iter().zip(q).map(|(mi, qi)| binomial(*mi, *qi, rng)).sum(),
            DeathNoise::Normal => {
                let mean: f64 = m.iter().zip(q).map(|(a, b)| a * b).sum();
                let v = mean + model.sigma_f * n_t * rng.normal();
                if v < 0.0 {
                    clamped += 1;
                    0.0
                } else {
                    v
                }
            }
        };
        deaths.push(d);
    }
    Ok(SyntheticDeaths { deaths, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(alpha: f64, a: usize) -> BlowflyModel {
        BlowflyModel::new(vec![alpha; a], 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_prob(&model(0.0, 3), 1, 500.0, 500.0).unwrap().p, 1.0);
        assert_eq!(survival_prob(&model(0.5, 3), 2, 500.0, 500.0).unwrap().p, 0.5);
        let m = BlowflyModel::new(vec![0.1; 3], 1e-4, 0.0, 0.0).unwrap();
        assert!((survival_prob(&m, 1, 2000.0, 0.0).unwrap().p - 0.72).abs() < 1e-15);
        assert!(survival_prob(&m, 0, 1.0, 1.0).is_err());
        assert!(survival_prob(&m, 4, 1.0, 1.0).is_err());
    }

    #[test]
    fn clamps_are_counted() {
        let m = BlowflyModel::new(vec![0.1; 3], 1e-3, 1e-3, 0.0).unwrap();
        let s = survival_prob(&m, 1, 5000.0, 5000.0).unwrap();
        assert_eq!(s.p, 0.0);
        assert_eq!(s.clamps, 2);
    }

    #[test]
    fn cohort_marches_through_classes() {
        let e = [1000.0, 0.0, 0.0, 0.0, 0.0];
        let n = [1000.0; 5];
        let st = blowfly_propagate(&model(0.0, 4), &e, &n).unwrap();
        for t in 0..4 {
            for i in 0..4 {
                assert_eq!(st.m[t][i], if i == t { 1000.0 } else { 0.0 });
            }
        }
        // oldest class holds the cohort
        assert_eq!(st.m[4][3], 1000.0);
        assert!(st.totals().iter().all(|v| *v == 1000.0));
    }

    #[test]
    fn no_survival_empties_older_classes() {
        let e = [10.0, 20.0, 30.0, 40.0];
        let n = [10.0, 20.0, 30.0, 40.0];
        let st = blowfly_propagate(&model(1.0, 3), &e, &n).unwrap();
        for row in &st.m {
            assert!(row[1..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn negative_input_is_a_data_error() {
        assert!(matches!(
            blowfly_propagate(&model(0.1, 3), &[1.0, -1.0], &[1.0, 1.0]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn deterministic_closed_loop() {
        let m = BlowflyModel::new(vec![0.1, 0.15, 0.2, 0.3], 2e-4, 1e-4, 0.0).unwrap();
        let e: Vec<f64> = (0..60).map(|t| 300.0 + 200.0 * (t as f64 * 0.3).sin()).collect();
        let mut rng = RngStream::new(1, 0);
        let n = simulate_blowfly(&m, &e, SimulationMode::Deterministic, &mut rng).unwrap();
        let st = blowfly_propagate(&m, &e, &n).unwrap();
        for (a, b) in st.totals().iter().zip(&n) {
            assert!((a - b).abs() <= 1e-9 * b.abs());
        }
    }

    #[test]
    fn zero_hazard_gives_zero_deaths() {
        let e = [5.0, 6.0, 7.0, 8.0];
        let n = [5.0, 11.0, 18.0, 26.0];
        let mut rng = RngStream::new(3, 0);
        for mode in [DeathNoise::Binomial, DeathNoise::Normal] {
            let d = synthesize_deaths(&model(0.0, 3), &e, &n, mode, &mut rng).unwrap();
            assert!(d.deaths.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let m = BlowflyModel::new(vec![0.2; 4], 1e-4, 0.0, 0.1).unwrap();
        let e = [100.0, 80.0, 120.0, 90.0, 70.0, 60.0];
        let n = [100.0, 160.0, 230.0, 250.0, 240.0, 220.0];
        for mode in [DeathNoise::Binomial, DeathNoise::Normal] {
            let a = synthesize_deaths(&m, &e, &n, mode, &mut RngStream::new(9, 2)).unwrap();
            let b = synthesize_deaths(&m, &e, &n, mode, &mut RngStream::new(9, 2)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn too_short_series_is_rejected() {
        let s = BlowflySeries::new(vec![0.0; 6], vec![1.0; 6], vec![1.0; 6]).unwrap();
        assert!(matches!(fit_blowfly(&s, 3), Err(Error::InsufficientData(_))));
    }
}
