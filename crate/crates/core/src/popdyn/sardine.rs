//! Separable season-by-age survival for catch-at-age tables.
//!
//! The catch of age `a+1` in season `t+1` is modelled as
//! `n_{t+1,a+1} = n_{t,a} · r_t · p*_a`; taking logs of the ratios gives a
//! two-way additive model fitted by OLS with `r_1 = 1`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::solve_least_squares;

/// Counts by age (rows) and season (columns); `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SardineTable {
    pub ages: Vec<u32>,
    pub seasons: Vec<String>,
    pub counts: Vec<Vec<Option<f64>>>,
}

impl SardineTable {
    pub fn new(ages: Vec<u32>, seasons: Vec<String>, counts: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if counts.len() != ages.len() {
            return Err(Error::Data(format!("{} age labels for {} rows", ages.len(), counts.len())));
        }
        if let Some((i, _)) = counts.iter().enumerate().find(|(_, r)| r.len() != seasons.len()) {
            return Err(Error::Data(format!("row for age {} is not rectangular", ages[i])));
        }
        if ages.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::Data("age labels must be consecutive".into()));
        }
        Ok(Self { ages, seasons, counts })
    }

    /// Builds a complete table from a dense matrix.
    pub fn from_dense(first_age: u32, seasons: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let ages = (0..rows.len() as u32).map(|k| first_age + k).collect();
        let counts = rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect();
        Self::new(ages, seasons, counts)
    }

    pub fn n_seasons(&self) -> usize {
        self.seasons.len()
    }

    fn row(&self, age: u32) -> Option<usize> {
        self.ages.iter().position(|a| *a == age)
    }

    pub fn get(&self, age: u32, season: usize) -> Option<f64> {
        self.row(age).and_then(|r| self.counts[r].get(season).copied().flatten())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let counts = self
            .counts
            .iter()
            .map(|r| r.iter().map(|v| v.map(|x| x * c)).collect())
            .collect();
        Self {
            counts,
            ..self.clone()
        }
    }

    /// Header `age,<season>...`; empty, `-` or `NA` cells are missing.
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
        if header.len() < 2 {
            return Err(Error::Parse {
                line: 1,
                msg: "header needs an age column and at least one season".into(),
            });
        }
        let seasons: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut ages = Vec::new();
        let mut counts = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let age: u32 = rec[0].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse age label {:?}", &rec[0]),
            })?;
            let mut row = Vec::with_capacity(seasons.len());
            for field in rec.iter().skip(1) {
                row.push(match field {
                    "" | "-" | "—" | "NA" => None,
                    f => Some(crate::trajectory::parse_finite(f, line)?),
                });
            }
            if row.len() != seasons.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} season columns, found {}", seasons.len(), row.len()),
                });
            }
            ages.push(age);
            counts.push(row);
        }
        Self::new(ages, seasons, counts)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("age");
        for s in &self.seasons {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (age, row) in self.ages.iter().zip(&self.counts) {
            out.push_str(&age.to_string());
            for v in row {
                out.push(',');
                if let Some(x) = v {
                    out.push_str(&format!("{x}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SardineFit {
    pub age_lo: u32,
    pub age_hi: u32,
    /// Season multipliers `r_1..r_{T−1}`; `r_1 = 1`.
    pub r: Vec<f64>,
    /// Age survival factors for `age_lo..=age_hi`.
    pub p_star: Vec<f64>,
    /// Residual sum of squares of the log-ratios.
    pub rss: f64,
    pub n_obs: usize,
}

impl SardineFit {
    pub fn p_star_for(&self, age: u32) -> Option<f64> {
        (self.age_lo..=self.age_hi)
            .position(|a| a == age)
            .map(|k| self.p_star[k])
    }
}

/// OLS on `log(n_{t+1,a+1}/n_{t,a}) = log r_t + log p*_a`.
pub fn fit_sardine(table: &SardineTable, age_lo: u32, age_hi: u32) -> Result<SardineFit> {
    if age_lo > age_hi {
        return Err(Error::Parameter(format!("empty age window {age_lo}:{age_hi}")));
    }
    for a in age_lo..=age_hi + 1 {
        if table.row(a).is_none() {
            return Err(Error::Data(format!("table has no row for age {a}")));
        }
    }
    let n_t = table.n_seasons();
    if n_t < 2 {
        return Err(Error::InsufficientData("need at least two seasons".into()));
    }
    let n_age = (age_hi - age_lo + 1) as usize;
    let n_r = n_t - 2;
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for t in 0..n_t - 1 {
        for (k, a) in (age_lo..=age_hi).enumerate() {
            let (Some(now), Some(next)) = (table.get(a, t), table.get(a + 1, t + 1)) else {
                continue;
            };
            if !(now > 0.0 && next > 0.0) {
                let (age, season) = if now > 0.0 {
                    (a + 1, &table.seasons[t + 1])
                } else {
                    (a, &table.seasons[t])
                };
                return Err(Error::Data(format!(
                    "nonpositive count at age {age}, season {season}"
                )));
            }
            rows.push((t, k, (next / now).ln()));
        }
    }
    let unknowns = n_age + n_r;
    if rows.len() < unknowns {
        return Err(Error::Identifiability(format!(
            "{} ratios for {} unknowns",
            rows.len(),
            unknowns
        )));
    }
    // columns: log p*_a for each age, then log r_t for t = 2..T-1
    let mut x = DMatrix::zeros(rows.len(), unknowns);
    let mut y = DVector::zeros(rows.len());
    for (i, &(t, k, v)) in rows.iter().enumerate() {
        x[(i, k)] = 1.0;
        if t > 0 {
            x[(i, n_age + t - 1)] = 1.0;
        }
        y[i] = v;
    }
    let b = solve_least_squares(&x, &y)?;
    let rss = (&y - &x * &b).norm_squared();
    let p_star = (0..n_age).map(|k| b[k].exp()).collect();
    let mut r = vec![1.0];
    r.extend((0..n_r).map(|k| b[n_age + k].exp()));
    Ok(SardineFit {
        age_lo,
        age_hi,
        r,
        p_star,
        rss,
        n_obs: rows.len(),
    })
}

/// One-step-ahead predictions `m_{t,a} r_t p*_a` placed at `(a+1, t+1)`;
/// every other cell is missing.
pub fn predict_sardine(table: &SardineTable, fit: &SardineFit) -> Result<SardineTable> {
    if fit.r.len() + 1 != table.n_seasons() {
        return Err(Error::Parameter(format!(
            "fit has {} season multipliers for a table of {} seasons",
            fit.r.len(),
            table.n_seasons()
        )));
    }
    let mut counts = vec![vec![None; table.n_seasons()]; table.ages.len()];
    for a in fit.age_lo..=fit.age_hi {
        let (Some(_), Some(target)) = (table.row(a), table.row(a + 1)) else {
            return Err(Error::Parameter(format!("table does not cover age {}", a + 1)));
        };
        let p = fit.p_star_for(a).expect("age inside the window");
        for t in 0..table.n_seasons() - 1 {
            if let Some(m) = table.get(a, t) {
                counts[target][t + 1] = Some(m * fit.r[t] * p);
            }
        }
    }
    SardineTable::new(table.ages.clone(), table.seasons.clone(), counts)
}

/// Fitted cohort trajectories over ages `age_lo..=age_hi+1`. Each cohort is
/// projected forward with `r_t p*_a` from a single level, set so the
/// log-residuals over its observed cells average to zero. Cohorts seen in
/// fewer than two cells stay missing.
pub fn predict_sardine_cohorts(table: &SardineTable, fit: &SardineFit) -> Result<SardineTable> {
    if fit.r.len() + 1 != table.n_seasons() {
        return Err(Error::Parameter(format!(
            "fit has {} season multipliers for a table of {} seasons",
            fit.r.len(),
            table.n_seasons()
        )));
    }
    if table.row(fit.age_hi + 1).is_none() {
        return Err(Error::Parameter(format!("table does not cover age {}", fit.age_hi + 1)));
    }
    let n_t = table.n_seasons() as i64;
    let (lo, hi) = (fit.age_lo as i64, fit.age_hi as i64 + 1);
    let mut counts = vec![vec![None; table.n_seasons()]; table.ages.len()];
    // a cohort is the diagonal season - age = k
    for k in -hi..n_t - lo {
        let mut cells = Vec::new();
        let mut shape = 1.0;
        for a in lo..=hi {
            let t = k + a;
            if t < 0 || t >= n_t {
                continue;
            }
            if !cells.is_empty() {
                shape *= fit.r[t as usize - 1] * fit.p_star_for(a as u32 - 1).expect("age inside the window");
            }
            cells.push((a as u32, t as usize, shape));
        }
        let logs: Vec<f64> = cells
            .iter()
            .filter_map(|&(a, t, s)| table.get(a, t).filter(|m| *m > 0.0).map(|m| (m / s).ln()))
            .collect();
        if logs.len() < 2 {
            continue;
        }
        let level = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
        for (a, t, s) in cells {
            counts[table.row(a).expect("checked above")][t] = Some(level * s);
        }
    }
    SardineTable::new(table.ages.clone(), table.seasons.clone(), counts)
}
