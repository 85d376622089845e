//! Scalar potential fields `H` whose negative gradient drives a particle.
//!
//! The polynomial-shore form is
//! `H(x,y) = β10·x + β01·y + β20·x² + β11·x·y + β02·y² + C/d(x,y)`
//! where `d` is the distance to a no-go polygon (an island). The `C/d` term
//! blows up at the shore, so evaluation on or inside the polygon is an error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Region};

/// Distance to the shore below which the `C/d` term is treated as singular.
pub const SINGULARITY_RADIUS: f64 = 1e-9;

/// Step used when a generic potential has no analytic gradient.
const FALLBACK_FD_STEP: f64 = 1e-5;

pub trait Potential: Send + Sync {
    fn value(&self, q: Point) -> Result<f64>;
    fn gradient(&self, q: Point) -> Result<[f64; 2]>;
}

/// Quadratic trend plus an inverse-distance shore repeller.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialShore {
    /// `(β10, β01, β20, β11, β02)`.
    pub beta: [f64; 5],
    pub c: f64,
    pub island: Region,
}

/// Gradients of the five polynomial basis functions `x, y, x², xy, y²` at `q`.
pub fn basis_gradients(q: Point) -> [[f64; 2]; 5] {
    let [x, y] = q;
    [[1.0, 0.0], [0.0, 1.0], [2.0 * x, 0.0], [y, x], [0.0, 2.0 * y]]
}

pub fn basis_values(q: Point) -> [f64; 5] {
    let [x, y] = q;
    [x, y, x * x, x * y, y * y]
}

impl PolynomialShore {
    pub fn new(beta: [f64; 5], c: f64, island: Region) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Parameter(format!("shore coefficient C must be finite and ≥ 0, got {c}")));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Parameter("polynomial coefficients must be finite".into()));
        }
        Ok(Self { beta, c, island })
    }

    /// Distance to the island, zero on or inside it.
    pub fn shore_distance(&self, q: Point) -> f64 {
        if self.island.contains(q) {
            0.0
        } else {
            self.island.distance(q)
        }
    }

    fn checked_distance(&self, q: Point) -> Result<f64> {
        let d = self.shore_distance(q);
        if d < SINGULARITY_RADIUS {
            return Err(Error::Singularity(format!(
                "({}, {}) is on or inside the shore polygon",
                q[0], q[1]
            )));
        }
        Ok(d)
    }

    pub fn polynomial_value(&self, q: Point) -> f64 {
        basis_values(q).iter().zip(&self.beta).map(|(f, b)| f * b).sum()
    }

    pub fn polynomial_gradient(&self, q: Point) -> [f64; 2] {
        let g = basis_gradients(q);
        let mut out = [0.0; 2];
        for (gk, b) in g.iter().zip(&self.beta) {
            out[0] += b * gk[0];
            out[1] += b * gk[1];
        }
        out
    }

    /// `∇(1/d) = −∇d / d²`, with `∇d` the unit vector from the nearest shore
    /// point towards `q`.
    pub fn inverse_distance_gradient(&self, q: Point) -> Result<[f64; 2]> {
        let d = self.checked_distance(q)?;
        let p = self.island.nearest_boundary(q).point;
        let unit = [(q[0] - p[0]) / d, (q[1] - p[1]) / d];
        Ok([-unit[0] / (d * d), -unit[1] / (d * d)])
    }
}

impl Potential for PolynomialShore {
    fn value(&self, q: Point) -> Result<f64> {
        let shore = if self.c == 0.0 {
            0.0
        } else {
            self.c / self.checked_distance(q)?
        };
        Ok(self.polynomial_value(q) + shore)
    }

    fn gradient(&self, q: Point) -> Result<[f64; 2]> {
        let mut g = self.polynomial_gradient(q);
        if self.c != 0.0 {
            let s = self.inverse_distance_gradient(q)?;
            g[0] += self.c * s[0];
            g[1] += self.c * s[1];
        }
        Ok(g)
    }
}

type ScalarFn = dyn Fn(Point) -> f64 + Send + Sync;
type GradFn = dyn Fn(Point) -> [f64; 2] + Send + Sync;

/// A user-supplied field, optionally with its analytic gradient.
#[derive(Clone)]
pub struct GenericPotential {
    value: Arc<ScalarFn>,
    gradient: Option<Arc<GradFn>>,
}

impl fmt::Debug for GenericPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericPotential")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl GenericPotential {
    pub fn new(value: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

impl Potential for GenericPotential {
    fn value(&self, q: Point) -> Result<f64> {
        let v = (self.value)(q);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("potential is not finite at ({}, {})", q[0], q[1])));
        }
        Ok(v)
    }

    fn gradient(&self, q: Point) -> Result<[f64; 2]> {
        let g = match &self.gradient {
            Some(g) => g(q),
            None => finite_diff_grad(|p| self.value(p), q, FALLBACK_FD_STEP)?,
        };
        if g.iter().any(|c| !c.is_finite()) {
            return Err(Error::Evaluation(format!("gradient is not finite at ({}, {})", q[0], q[1])));
        }
        Ok(g)
    }
}

#[derive(Debug, Clone)]
pub enum PotentialSpec {
    PolynomialShore(PolynomialShore),
    Generic(GenericPotential),
}

impl Potential for PotentialSpec {
    fn value(&self, q: Point) -> Result<f64> {
        match self {
            PotentialSpec::PolynomialShore(p) => p.value(q),
            PotentialSpec::Generic(g) => g.value(q),
        }
    }

    fn gradient(&self, q: Point) -> Result<[f64; 2]> {
        match self {
            PotentialSpec::PolynomialShore(p) => p.gradient(q),
            PotentialSpec::Generic(g) => g.gradient(q),
        }
    }
}

pub fn eval_potential(spec: &dyn Potential, q: Point) -> Result<f64> {
    spec.value(q)
}

pub fn grad_potential(spec: &dyn Potential, q: Point) -> Result<[f64; 2]> {
    spec.gradient(q)
}

/// Central differences `(H(q + h e_k) − H(q − h e_k)) / 2h`.
pub fn finite_diff_grad(h_fn: impl Fn(Point) -> Result<f64>, q: Point, h: f64) -> Result<[f64; 2]> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("finite-difference step must be > 0, got {h}")));
    }
    let dx = (h_fn([q[0] + h, q[1]])? - h_fn([q[0] - h, q[1]])?) / (2.0 * h);
    let dy = (h_fn([q[0], q[1] + h])? - h_fn([q[0], q[1] - h])?) / (2.0 * h);
    Ok([dx, dy])
}

/// On-disk form of a polynomial-shore potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpecFile {
    pub variant: String,
    pub beta: [f64; 5],
    #[serde(rename = "C")]
    pub c: f64,
    /// Island polygon CSV, relative to the JSON file's directory.
    pub region_file: PathBuf,
}

impl PotentialSpecFile {
    pub const VARIANT: &'static str = "polynomial-shore";

    pub fn load(path: impl AsRef<Path>) -> Result<PolynomialShore> {
        let path = path.as_ref();
        let file: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.variant != Self::VARIANT {
            return Err(Error::Parameter(format!(
                "unsupported potential variant {:?} (only {:?} is serializable)",
                file.variant,
                Self::VARIANT
            )));
        }
        let region_path = if file.region_file.is_absolute() {
            file.region_file.clone()
        } else {
            path.parent().unwrap_or(Path::new(".")).join(&file.region_file)
        };
        PolynomialShore::new(file.beta, file.c, Region::load(region_path)?)
    }
}

/// `(x, y, H)` rows over a regular lattice; singular nodes carry `None`.
pub fn potential_lattice(
    spec: &dyn Potential,
    x: (f64, f64, usize),
    y: (f64, f64, usize),
) -> Vec<(f64, f64, Option<f64>)> {
    let axis = |(lo, hi, n): (f64, f64, usize)| -> Vec<f64> {
        if n <= 1 {
            vec![lo]
        } else {
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
        }
    };
    let xs = axis(x);
    let ys = axis(y);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &yv in &ys {
        for &xv in &xs {
            out.push((xv, yv, spec.value([xv, yv]).ok()));
        }
    }
    out
}
