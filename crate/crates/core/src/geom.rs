//! Planar polygons: membership, boundary distance and nearest boundary point.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance (relative to the polygon's extent) under which a point counts as
/// lying on an edge.
const ON_EDGE_REL_TOL: f64 = 1e-12;

/// A simple (non-self-intersecting) closed polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    vertices: Vec<Point>,
    counter_clockwise: bool,
    scale: f64,
}

/// Closest point on a region's boundary to some query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryProjection {
    pub point: Point,
    pub distance: f64,
    /// Index of the edge `(v[i], v[i+1])` that realized the minimum.
    pub edge: usize,
}

impl Region {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let mut vertices = vertices;
        // A repeated closing vertex is accepted and dropped.
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::Domain(format!(
                "region needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Domain("region vertex is not finite".into()));
        }
        let area = signed_area(&vertices);
        if area == 0.0 || !area.is_finite() {
            return Err(Error::Domain("region has zero signed area".into()));
        }
        if let Some((i, j)) = first_self_intersection(&vertices) {
            return Err(Error::Domain(format!(
                "region edges {i} and {j} intersect"
            )));
        }
        let scale = vertices
            .iter()
            .flatten()
            .fold(0.0_f64, |m, c| m.max(c.abs()))
            .max(1.0);
        Ok(Self {
            vertices,
            counter_clockwise: area > 0.0,
            scale,
        })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0).expect("unit square is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_counter_clockwise(&self) -> bool {
        self.counter_clockwise
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Bounding box `(xmin, ymin, xmax, ymax)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), v| (a.min(v[0]), b.min(v[1]), c.max(v[0]), d.max(v[1])),
        )
    }

    /// Even-odd membership; points on an edge count as inside.
    pub fn contains(&self, q: Point) -> bool {
        if self.nearest_boundary(q).distance <= ON_EDGE_REL_TOL * self.scale {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > q[1]) != (b[1] > q[1]) {
                let x_cross = a[0] + (q[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if q[0] < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `q` to the nearest edge (zero on the boundary).
    pub fn distance(&self, q: Point) -> f64 {
        self.nearest_boundary(q).distance
    }

    /// Nearest boundary point. Ties go to the first edge in vertex order.
    pub fn nearest_boundary(&self, q: Point) -> BoundaryProjection {
        let mut best = BoundaryProjection {
            point: self.vertices[0],
            distance: f64::INFINITY,
            edge: 0,
        };
        for (i, (a, b)) in self.edges().enumerate() {
            let p = project_onto_segment(q, a, b);
            let d = (q[0] - p[0]).hypot(q[1] - p[1]);
            if d < best.distance {
                best = BoundaryProjection {
                    point: p,
                    distance: d,
                    edge: i,
                };
            }
        }
        best
    }

    /// Same polygon with the vertex list rotated by `k` positions.
    pub fn rotated(&self, k: usize) -> Self {
        let mut vertices = self.vertices.clone();
        let n = vertices.len();
        vertices.rotate_left(k % n);
        Self {
            vertices,
            counter_clockwise: self.counter_clockwise,
            scale: self.scale,
        }
    }

    /// Loads a vertex list from CSV with header `x,y`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut vertices = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() < 2 {
                return Err(Error::Parse {
                    line,
                    msg: "expected two columns x,y".into(),
                });
            }
            let x = crate::trajectory::parse_finite(&rec[0], line)?;
            let y = crate::trajectory::parse_finite(&rec[1], line)?;
            vertices.push([x, y]);
        }
        Self::new(vertices)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for v in &self.vertices {
            out.push_str(&format!("{},{}\n", v[0], v[1]));
        }
        out
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

pub(crate) fn project_onto_segment(q: Point, a: Point, b: Point) -> Point {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a;
    }
    let t = (((q[0] - a[0]) * dx + (q[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    [a[0] + t * dx, a[1] + t * dy]
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn first_self_intersection(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_membership() {
        let sq = Region::unit_square();
        assert!(sq.contains([0.5, 0.5]));
        assert!(!sq.contains([2.0, 0.0]));
        assert!(sq.contains([1.0, 0.5]));
        assert!(sq.contains([0.0, 0.0]));
    }

    #[test]
    fn unit_square_distance() {
        let sq = Region::unit_square();
        assert_eq!(sq.distance([0.5, 0.5]), 0.5);
        assert_eq!(sq.distance([2.0, 0.5]), 1.0);
        assert_eq!(sq.distance([1.0, 0.3]), 0.0);
    }

    #[test]
    fn rejects_degenerate_polygons() {
        assert!(Region::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(Region::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        // bow tie
        let bow = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(Region::new(bow), Err(Error::Domain(_))));
    }

    #[test]
    fn orientation_flag() {
        let cw = Region::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(!cw.is_counter_clockwise());
        assert!(Region::unit_square().is_counter_clockwise());
    }

    #[test]
    fn nearest_ties_go_to_first_edge() {
        // the centre of the square is equidistant from all four edges
        let p = Region::unit_square().nearest_boundary([0.5, 0.5]);
        assert_eq!(p.edge, 0);
        assert_eq!(p.point, [0.5, 0.0]);
    }

    #[test]
    fn concave_polygon_membership() {
        // L shape
        let l = Region::new(vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ])
        .unwrap();
        assert!(l.contains([0.5, 1.5]));
        assert!(!l.contains([1.5, 1.5]));
        assert!((l.distance([1.5, 1.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let sq = Region::unit_square();
        let back = Region::from_reader(sq.to_csv().as_bytes()).unwrap();
        assert_eq!(back, sq);
    }
}
