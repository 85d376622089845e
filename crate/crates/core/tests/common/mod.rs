// Independent reference computations shared by the integration tests. None
// of these call into the library's numerics.

#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Adaptive Simpson quadrature of a nonnegative `f` over `[a, b]`, refining
/// each piece until its error estimate is below `rel` times its value.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, rel: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * rel * (left + right).abs() {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, rel, depth - 1) + rec(f, m, b, fm, frm, fb, right, rel, depth - 1)
    }
    // pre-split so a sharp feature cannot hide between the first samples
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            rec(f, lo, hi, fa, fm, fb, simpson(fa, fm, fb, lo, hi), rel, 40)
        })
        .sum()
}

/// Distance from `q` to the closest point of any polygon edge, by checking
/// every edge directly.
pub fn edge_distances(vertices: &[[f64; 2]], q: [f64; 2]) -> Vec<f64> {
    (0..vertices.len())
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % vertices.len()];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let t = (((q[0] - a[0]) * dx + (q[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            (q[0] - a[0] - t * dx).hypot(q[1] - a[1] - t * dy)
        })
        .collect()
}

/// Sum of squared log-ratio residuals for the age-by-season model with
/// `log_r[0]` pinned to zero. `table[a][t]` holds the count for age index `a`.
pub fn sardine_rss(table: &[Vec<f64>], lo: usize, hi: usize, log_r: &[f64], log_p: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in lo..=hi {
        for t in 0..table[a].len() - 1 {
            let y = (table[a + 1][t + 1] / table[a][t]).ln();
            s += (y - log_r[t] - log_p[a - lo]).powi(2);
        }
    }
    s
}

/// Coarse-to-fine coordinate grid search for the sardine model. Each sweep
/// tries 41 values per free coordinate around the current one; the step
/// shrinks when a sweep stops improving.
pub fn sardine_grid_search(table: &[Vec<f64>], lo: usize, hi: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let seasons = table[0].len();
    let mut x = vec![0.0; (seasons - 2) + (hi - lo + 1)];
    let split = seasons - 2;
    let eval = |x: &[f64]| {
        let mut log_r = vec![0.0];
        log_r.extend_from_slice(&x[..split]);
        sardine_rss(table, lo, hi, &log_r, &x[split..])
    };
    let mut best = eval(&x);
    let mut step = 0.25;
    while step > 1e-13 {
        let before = best;
        for i in 0..x.len() {
            let centre = x[i];
            for k in -20..=20 {
                let mut y = x.clone();
                y[i] = centre + k as f64 * step;
                let v = eval(&y);
                if v < best {
                    best = v;
                    x = y;
                }
            }
        }
        if before - best <= 1e-15 * (1.0 + best) {
            step *= 0.5;
        }
    }
    let mut log_r = vec![0.0];
    log_r.extend_from_slice(&x[..split]);
    (log_r, x[split..].to_vec(), best)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
