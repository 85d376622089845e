//! Neyman–Scott cluster point process on a rectangle and a quadrat-count
//! clumpiness index.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::rng::RngStream;

pub const DEFAULT_POINT_CAP: f64 = 1e7;

/// Axis-aligned rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || [x0, y0, x1, y1].iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("window must have positive width and height".into()));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] < self.x1 && p[1] >= self.y0 && p[1] < self.y1
    }

    pub fn dilated(&self, r: f64) -> Self {
        Self {
            x0: self.x0 - r,
            y0: self.y0 - r,
            x1: self.x1 + r,
            y1: self.y1 + r,
        }
    }

    pub fn translated(&self, v: Point) -> Self {
        Self {
            x0: self.x0 + v[0],
            y0: self.y0 + v[1],
            x1: self.x1 + v[0],
            y1: self.y1 + v[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OffspringLaw {
    Poisson(f64),
    Fixed(u64),
}

impl OffspringLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            OffspringLaw::Poisson(m) => m,
            OffspringLaw::Fixed(n) => n as f64,
        }
    }

    fn draw(&self, rng: &mut RngStream) -> u64 {
        match *self {
            OffspringLaw::Fixed(n) => n,
            OffspringLaw::Poisson(m) => poisson(m, rng),
        }
    }
}

/// Cluster centres are themselves clustered around a sparser set of
/// super-centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondStage {
    /// Intensity of super-centres.
    pub lambda: f64,
    /// Mean number of cluster centres per super-centre (Poisson).
    pub m: f64,
    /// Displacement scale of centres around their super-centre.
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterProcessParams {
    /// Intensity of cluster centres per unit area.
    pub lambda: f64,
    pub offspring: OffspringLaw,
    /// Gaussian displacement scale of members around their centre.
    pub rho: f64,
    pub window: Window,
    pub second_stage: Option<SecondStage>,
    /// Refuse to simulate when the expected point count exceeds this.
    pub cap: f64,
}

impl ClusterProcessParams {
    pub fn new(lambda: f64, offspring: OffspringLaw, rho: f64, window: Window) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!("centre intensity must be ≥ 0, got {lambda}")));
        }
        if !(offspring.mean() >= 0.0 && offspring.mean().is_finite()) {
            return Err(Error::Parameter("offspring mean must be ≥ 0".into()));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("displacement scale must be ≥ 0, got {rho}")));
        }
        Ok(Self {
            lambda,
            offspring,
            rho,
            window,
            second_stage: None,
            cap: DEFAULT_POINT_CAP,
        })
    }

    /// Adds a second stage with `m2` centres per super-centre and spread
    /// `rho2`; the super-centre intensity keeps the centre intensity at `λ`.
    pub fn with_second_stage(mut self, m2: f64, rho2: f64) -> Result<Self> {
        if !(m2 > 0.0 && rho2 >= 0.0) {
            return Err(Error::Parameter("second stage needs m₂ > 0 and ρ₂ ≥ 0".into()));
        }
        self.second_stage = Some(SecondStage {
            lambda: self.lambda / m2,
            m: m2,
            rho: rho2,
        });
        Ok(self)
    }

    fn centre_window(&self) -> Window {
        self.window.dilated(4.0 * self.rho)
    }

    /// Expected number of simulated members before clipping to the window.
    pub fn expected_points(&self) -> f64 {
        let centres = match self.second_stage {
            None => self.lambda * self.centre_window().area(),
            Some(s) => s.lambda * s.m * self.centre_window().dilated(4.0 * s.rho).area(),
        };
        centres * self.offspring.mean()
    }
}

fn poisson(mean: f64, rng: &mut RngStream) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn uniform_points(w: &Window, intensity: f64, rng: &mut RngStream) -> Vec<Point> {
    let n = poisson(intensity * w.area(), rng);
    (0..n)
        .map(|_| [rng.uniform_range(w.x0, w.x1), rng.uniform_range(w.y0, w.y1)])
        .collect()
}

fn scatter(centre: Point, count: u64, rho: f64, rng: &mut RngStream) -> impl Iterator<Item = Point> + '_ {
    (0..count).map(move |_| [centre[0] + rho * rng.normal(), centre[1] + rho * rng.normal()])
}

/// One synthetic plate: members of all clusters that land in the window.
pub fn simulate_cluster_plate(params: &ClusterProcessParams, rng: &mut RngStream) -> Result<Vec<Point>> {
    let expected = params.expected_points();
    if expected > params.cap {
        return Err(Error::Size(format!(
            "expected {expected:.3e} points exceeds the cap of {:.3e}",
            params.cap
        )));
    }
    let cw = params.centre_window();
    let centres: Vec<Point> = match params.second_stage {
        None => uniform_points(&cw, params.lambda, rng),
        Some(s) => {
            let supers = uniform_points(&cw.dilated(4.0 * s.rho), s.lambda, rng);
            let mut c = Vec::new();
            for sc in supers {
                let k = poisson(s.m, rng);
                c.extend(scatter(sc, k, s.rho, rng));
            }
            c
        }
    };
    let mut out = Vec::new();
    for c in centres {
        let k = params.offspring.draw(rng);
        out.extend(scatter(c, k, params.rho, rng).filter(|p| params.window.contains(*p)));
    }
    Ok(out)
}

/// Quadrat counts on full `side × side` cells anchored at the window's
/// lower-left corner; partial cells at the far edges are dropped.
pub fn quadrat_counts(points: &[Point], window: &Window, side: f64) -> Result<Vec<u64>> {
    if !(side > 0.0) {
        return Err(Error::Parameter(format!("quadrat side must be > 0, got {side}")));
    }
    let nx = ((window.x1 - window.x0) / side + 1e-9).floor() as usize;
    let ny = ((window.y1 - window.y0) / side + 1e-9).floor() as usize;
    if nx * ny < 2 {
        return Err(Error::Parameter("window holds fewer than two full quadrats".into()));
    }
    let mut counts = vec![0u64; nx * ny];
    for p in points {
        let i = ((p[0] - window.x0) / side).floor();
        let j = ((p[1] - window.y0) / side).floor();
        if i >= 0.0 && j >= 0.0 && (i as usize) < nx && (j as usize) < ny {
            counts[j as usize * nx + i as usize] += 1;
        }
    }
    Ok(counts)
}

/// Sample variance over sample mean of quadrat counts; 1 for a Poisson
/// pattern, above 1 when clumped.
pub fn clumpiness_index(points: &[Point], window: &Window, side: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Undefined("clumpiness of an empty point set".into()));
    }
    let counts = quadrat_counts(points, window, side)?;
    let q = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / q;
    if mean == 0.0 {
        return Err(Error::Undefined("no points fall in a full quadrat".into()));
    }
    let var = counts.iter().map(|c| (*c as f64 - mean).powi(2)).sum::<f64>() / (q - 1.0);
    Ok(var / mean)
}

pub fn points_to_csv(points: &[Point]) -> String {
    let mut out = String::from("x,y\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    out
}

pub fn points_from_reader<R: std::io::Read>(reader: R) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 2 {
            return Err(Error::Parse {
                line,
                msg: "expected x,y".into(),
            });
        }
        out.push([
            crate::trajectory::parse_finite(&rec[0], line)?,
            crate::trajectory::parse_finite(&rec[1], line)?,
        ]);
    }
    Ok(out)
}
