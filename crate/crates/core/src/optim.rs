//! Box-constrained Levenberg–Marquardt and linear least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Parameter("bounds must satisfy lower ≤ upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub ftol: f64,
    /// Stop when the step is this small relative to the parameters.
    pub xtol: f64,
    /// Stop once the cost is below this absolute value.
    pub cost_floor: f64,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            ftol: 1e-15,
            xtol: 1e-14,
            cost_floor: 1e-30,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LmResult {
    /// Components sitting on a bound.
    pub fn at_bound(&self, bounds: &Bounds) -> Vec<bool> {
        self.params
            .iter()
            .zip(bounds.lower.iter().zip(&bounds.upper))
            .map(|(p, (l, u))| p <= l || p >= u)
            .collect()
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Central differences, one-sided next to a bound.
fn jacobian<F>(f: &F, x: &[f64], r0: &[f64], bounds: &Bounds, rel: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = r0.len();
    let n = x.len();
    let mut j = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for k in 0..n {
        let h = rel * x[k].abs().max(1.0);
        let up = (x[k] + h).min(bounds.upper[k]);
        let dn = (x[k] - h).max(bounds.lower[k]);
        let (rp, rm, span) = if up > x[k] && dn < x[k] {
            xp[k] = up;
            let rp = f(&xp)?;
            xp[k] = dn;
            let rm = f(&xp)?;
            (rp, rm, up - dn)
        } else if up > x[k] {
            xp[k] = up;
            (f(&xp)?, r0.to_vec(), up - x[k])
        } else {
            xp[k] = dn;
            (r0.to_vec(), f(&xp)?, x[k] - dn)
        };
        xp[k] = x[k];
        for i in 0..m {
            j[(i, k)] = (rp[i] - rm[i]) / span;
        }
    }
    Ok(j)
}

/// Minimizes `Σ r_i(x)²` over a box, starting from `x0` (clamped into it).
///
/// Components at a bound whose gradient points outward are frozen for the
/// step; the trial point is projected back onto the box.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], bounds: &Bounds, opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    if bounds.lower.len() != n {
        return Err(Error::Parameter("bounds do not match the parameter count".into()));
    }
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut r = f(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation("residuals are not finite at the start point".into()));
    }
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost <= opts.cost_floor;
    let mut jac = jacobian(&f, &x, &r, bounds, opts.fd_step)?;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &rv;
        let free: Vec<usize> = (0..n)
            .filter(|&k| {
                let at_lo = x[k] <= bounds.lower[k] && g[k] > 0.0;
                let at_hi = x[k] >= bounds.upper[k] && g[k] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        if free.is_empty() {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let nf = free.len();
            let mut a = DMatrix::zeros(nf, nf);
            let mut b = DVector::zeros(nf);
            for (p, &i) in free.iter().enumerate() {
                b[p] = -g[i];
                for (q, &k) in free.iter().enumerate() {
                    a[(p, q)] = jtj[(i, k)];
                }
                a[(p, p)] += lambda * (jtj[(i, i)] + 1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&b)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = x.clone();
            for (p, &i) in free.iter().enumerate() {
                trial[i] += step[p];
            }
            bounds.clamp(&mut trial);
            let rt = f(&trial)?;
            let ct = sum_sq(&rt);
            if ct.is_finite() && ct < cost {
                let step_norm = trial
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_drop = (cost - ct) / cost;
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if cost <= opts.cost_floor || rel_drop < opts.ftol || step_norm <= opts.xtol * (x_norm + opts.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction left at any damping: a stationary point
            converged = true;
        }
        jac = jacobian(&f, &x, &r, bounds, opts.fd_step)?;
    }
    Ok(LmResult {
        params: x,
        cost,
        residuals: r,
        jacobian: jac,
        iterations,
        converged,
    })
}

/// Runs [`levenberg_marquardt`] from each start and keeps the lowest cost
/// (ties go to the earliest start). Returns the winner and its start index.
pub fn multi_start<F>(f: F, starts: &[Vec<f64>], bounds: &Bounds, opts: &LmOptions) -> Result<(LmResult, usize)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    use rayon::prelude::*;
    let results: Vec<Result<LmResult>> = starts
        .par_iter()
        .map(|s| levenberg_marquardt(&f, s, bounds, opts))
        .collect();
    let mut best: Option<(LmResult, usize)> = None;
    let mut first_err = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(res) => {
                if best.as_ref().is_none_or(|(b, _)| res.cost < b.cost) {
                    best = Some((res, i));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::Parameter("no start points".into())),
    }
}

/// Ordinary least squares via a column-scaled SVD. A numerically rank
/// deficient design is an identifiability error.
pub fn solve_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() < x.ncols() {
        return Err(Error::Identifiability(format!(
            "{} equations for {} unknowns",
            x.nrows(),
            x.ncols()
        )));
    }
    let scales: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if scales.contains(&0.0) {
        return Err(Error::Identifiability("design has an all-zero column".into()));
    }
    let mut xs = x.clone();
    for (j, s) in scales.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = xs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Identifiability(format!(
            "design is rank deficient (condition {:.3e})",
            smax / smin
        )));
    }
    let b = svd
        .solve(y, 0.0)
        .map_err(|e| Error::Identifiability(e.to_string()))?;
    Ok(DVector::from_iterator(b.len(), b.iter().zip(&scales).map(|(v, s)| v / s)))
}

/// `(JᵀJ)⁻¹`, or `None` when singular.
pub fn normal_inverse(j: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    (j.transpose() * j).try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_as_least_squares() {
        let f = |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let res = levenberg_marquardt(f, &[-1.2, 1.0], &Bounds::unbounded(2), &LmOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.params[0] - 1.0).abs() < 1e-8 && (res.params[1] - 1.0).abs() < 1e-8);
        assert!(res.cost < 1e-20);
    }

    #[test]
    fn respects_bounds() {
        // unconstrained minimum at x = -2
        let f = |x: &[f64]| Ok(vec![x[0] + 2.0]);
        let b = Bounds::new(vec![0.0], vec![5.0]).unwrap();
        let res = levenberg_marquardt(f, &[3.0], &b, &LmOptions::default()).unwrap();
        assert_eq!(res.params[0], 0.0);
        assert_eq!(res.at_bound(&b), vec![true]);
    }

    #[test]
    fn exponential_fit() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let f = |p: &[f64]| Ok(ts.iter().zip(&ys).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect());
        let (res, idx) = multi_start(
            f,
            &[vec![1.0, 0.1], vec![5.0, 2.0]],
            &Bounds::unbounded(2),
            &LmOptions::default(),
        )
        .unwrap();
        assert!(idx <= 1);
        assert!((res.params[0] - 3.0).abs() < 1e-9 && (res.params[1] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn least_squares_line() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_row_slice(&[1.0, 3.0, 5.0]);
        let b = solve_least_squares(&x, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_design() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        assert!(matches!(solve_least_squares(&x, &y), Err(Error::Identifiability(_))));
    }

    #[test]
    fn bad_bounds() {
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
    }
}
