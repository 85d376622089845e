//! Time-stamped 1-D or planar paths and their CSV form (`t,x[,y][,lc]`).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    dim: usize,
    coords: Vec<f64>,
    quality: Option<Vec<String>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, positions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = positions.first().map_or(0, Vec::len);
        if positions.iter().any(|p| p.len() != dim) {
            return Err(Error::Data("positions have mixed dimensions".into()));
        }
        let coords = positions.into_iter().flatten().collect();
        Self::from_flat(times, dim, coords)
    }

    /// Builds a trajectory from row-major coordinates (`dim` values per time).
    pub fn from_flat(times: Vec<f64>, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Data(format!("dimension must be 1 or 2, got {dim}")));
        }
        if coords.len() != times.len() * dim {
            return Err(Error::Data("times and positions differ in length".into()));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a trajectory needs at least 2 points, got {}",
                times.len()
            )));
        }
        if times.iter().chain(&coords).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite time or coordinate".into()));
        }
        if let Some(w) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!(
                "times must be strictly increasing (index {})",
                w + 1
            )));
        }
        Ok(Self {
            times,
            dim,
            coords,
            quality: None,
        })
    }

    pub fn from_points(times: Vec<f64>, points: &[[f64; 2]]) -> Result<Self> {
        Self::from_flat(times, 2, points.iter().flatten().copied().collect())
    }

    pub fn with_quality(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Data("quality labels differ in length".into()));
        }
        self.quality = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn quality(&self) -> Option<&[String]> {
        self.quality.as_deref()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Planar position; panics on a 1-D trajectory.
    pub fn point(&self, i: usize) -> [f64; 2] {
        assert_eq!(self.dim, 2, "point() needs a planar trajectory");
        [self.coords[2 * i], self.coords[2 * i + 1]]
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Same path with every coordinate transformed by `f`.
    pub fn map_positions(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let positions = self.positions().map(&mut f).collect();
        let mut out = Self::new(self.times.clone(), positions)?;
        out.quality = self.quality.clone();
        Ok(out)
    }

    pub fn shift_time(&self, dt: f64) -> Result<Self> {
        let mut out = Self::from_flat(
            self.times.iter().map(|t| t + dt).collect(),
            self.dim,
            self.coords.clone(),
        )?;
        out.quality = self.quality.clone();
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(match (self.dim, self.quality.is_some()) {
            (1, false) => "t,x\n",
            (1, true) => "t,x,lc\n",
            (_, false) => "t,x,y\n",
            (_, true) => "t,x,y,lc\n",
        });
        for i in 0..self.len() {
            let _ = write!(out, "{}", self.times[i]);
            for c in self.position(i) {
                let _ = write!(out, ",{c}");
            }
            if let Some(q) = &self.quality {
                let _ = write!(out, ",{}", q[i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Several replicate paths in one CSV with a leading `rep` column.
pub fn replicates_to_csv(reps: &[Trajectory]) -> String {
    let dim = reps.first().map_or(2, Trajectory::dim);
    let mut out = String::from(if dim == 1 { "rep,t,x\n" } else { "rep,t,x,y\n" });
    for (k, tr) in reps.iter().enumerate() {
        for i in 0..tr.len() {
            let _ = write!(out, "{k},{}", tr.times[i]);
            for c in tr.position(i) {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
    }
    out
}

pub(crate) fn parse_finite(field: &str, line: u64) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {field:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value {field:?}"),
        });
    }
    Ok(v)
}

/// Reads a trajectory CSV. With `quality_filter`, only rows whose `lc` label
/// is in the set survive.
pub fn load_trajectory(path: impl AsRef<Path>, quality_filter: Option<&[&str]>) -> Result<Trajectory> {
    let file = std::fs::File::open(path.as_ref())?;
    read_trajectory(file, quality_filter)
}

pub fn read_trajectory<R: std::io::Read>(reader: R, quality_filter: Option<&[&str]>) -> Result<Trajectory> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let t_col = col("t").ok_or_else(|| Error::Parse {
        line: 1,
        msg: "header must contain a `t` column".into(),
    })?;
    let x_col = col("x").ok_or_else(|| Error::Parse {
        line: 1,
        msg: "header must contain an `x` column".into(),
    })?;
    let y_col = col("y");
    let lc_col = col("lc");
    let filter: Option<HashSet<&str>> = quality_filter.map(|f| f.iter().copied().collect());
    if filter.is_some() && lc_col.is_none() {
        return Err(Error::Data("quality filter requested but no `lc` column".into()));
    }

    let dim = if y_col.is_some() { 2 } else { 1 };
    let mut rows: Vec<(f64, [f64; 2], Option<String>, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let t = parse_finite(&rec[t_col], line)?;
        let x = parse_finite(&rec[x_col], line)?;
        let y = match y_col {
            Some(c) => parse_finite(&rec[c], line)?,
            None => 0.0,
        };
        let lc = lc_col.map(|c| rec[c].to_string());
        if let (Some(f), Some(label)) = (&filter, &lc) {
            if !f.contains(label.as_str()) {
                continue;
            }
        }
        rows.push((t, [x, y], lc, line));
    }
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} row(s) survive ingestion, need at least 2",
            rows.len()
        )));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateTime {
            time: w[1].0,
            line: w[1].3,
        });
    }
    let times = rows.iter().map(|r| r.0).collect();
    let coords = rows.iter().flat_map(|r| r.1[..dim].to_vec()).collect();
    let tr = Trajectory::from_flat(times, dim, coords)?;
    if lc_col.is_some() {
        tr.with_quality(rows.into_iter().map(|r| r.2.unwrap_or_default()).collect())
    } else {
        Ok(tr)
    }
}

/// Argos location classes whose predicted error is at most 1 km.
pub const HIGH_QUALITY_LC: [&str; 3] = ["1", "2", "3"];
