//! Model checks: wedge plots and synthetic-versus-actual summaries.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Points of a wedge plot: `((x+y)/2, x−y)` and `((x+y)/2, |x−y|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeData {
    pub mean: Vec<f64>,
    pub diff: Vec<f64>,
    pub absdiff: Vec<f64>,
    pub labels: Vec<String>,
}

impl WedgeData {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Spearman correlation of the mean with `|x−y|`; positive when spread
    /// grows with size.
    pub fn spread_trend(&self) -> f64 {
        spearman(&self.mean, &self.absdiff)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,mean,diff,absdiff\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.labels.get(i).map_or("", String::as_str),
                self.mean[i],
                self.diff[i],
                self.absdiff[i]
            ));
        }
        out
    }
}

pub fn wedge_data(x: &[f64], y: &[f64]) -> Result<WedgeData> {
    wedge_data_labeled(x, y, (0..x.len()).map(|i| i.to_string()).collect())
}

pub fn wedge_data_labeled(x: &[f64], y: &[f64], labels: Vec<String>) -> Result<WedgeData> {
    if x.len() != y.len() || labels.len() != x.len() {
        return Err(Error::Data(format!(
            "wedge inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let mean = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let absdiff = diff.iter().map(|d| d.abs()).collect();
    Ok(WedgeData {
        mean,
        diff,
        absdiff,
        labels,
    })
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with `n − 1` denominator.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Pearson correlation; NaN if either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Mid-ranks, 1-based.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesComparison {
    pub rms: f64,
    pub correlation: f64,
    /// Variance of the synthetic series over that of the actual one.
    pub variance_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSummary {
    pub series: Vec<SeriesComparison>,
    /// Rank of the actual variance among all `n + 1` variances (1 = smallest).
    pub variance_rank: usize,
    pub ensemble_size: usize,
}

pub fn compare_synthetic(actual: &[f64], synthetic: &[Vec<f64>]) -> Result<SyntheticSummary> {
    if synthetic.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "an ensemble needs at least 2 synthetic series, got {}",
            synthetic.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::InsufficientData("actual series has fewer than 2 values".into()));
    }
    if let Some(k) = synthetic.iter().position(|s| s.len() != actual.len()) {
        return Err(Error::Data(format!(
            "synthetic series {k} has length {}, actual {}",
            synthetic[k].len(),
            actual.len()
        )));
    }
    let va = variance(actual);
    let mut below = 0;
    let series = synthetic
        .iter()
        .map(|s| {
            let vs = variance(s);
            if vs < va {
                below += 1;
            }
            let rms = (s.iter().zip(actual).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
            SeriesComparison {
                rms,
                correlation: pearson(actual, s),
                variance_ratio: vs / va,
            }
        })
        .collect();
    Ok(SyntheticSummary {
        series,
        variance_rank: below + 1,
        ensemble_size: synthetic.len(),
    })
}

/// Pearson chi-square test that ranks in `1..=levels` are uniform, pooled
/// into `bins` contiguous groups of levels. When `bins` does not divide
/// `levels` the groups differ by one level and their expected counts follow.
/// Returns `(statistic, p-value)`.
pub fn rank_uniformity_test(ranks: &[usize], levels: usize, bins: usize) -> Result<(f64, f64)> {
    if bins < 2 || levels < bins {
        return Err(Error::Parameter(format!("cannot pool {levels} rank levels into {bins} bins")));
    }
    if ranks.is_empty() {
        return Err(Error::InsufficientData("no ranks".into()));
    }
    // level r (0-based) falls in bin floor(r·bins/levels)
    let mut counts = vec![0.0; bins];
    for &r in ranks {
        if r == 0 || r > levels {
            return Err(Error::Data(format!("rank {r} outside 1..={levels}")));
        }
        counts[(r - 1) * bins / levels] += 1.0;
    }
    let mut width = vec![0usize; bins];
    for r in 0..levels {
        width[r * bins / levels] += 1;
    }
    let n = ranks.len() as f64;
    let stat: f64 = counts
        .iter()
        .zip(&width)
        .map(|(c, &w)| {
            let e = n * w as f64 / levels as f64;
            (c - e).powi(2) / e
        })
        .sum();
    let chi = ChiSquared::new((bins - 1) as f64).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok((stat, 1.0 - chi.cdf(stat)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_arithmetic() {
        let w = wedge_data(&[4.0, 10.0], &[2.0, 4.0]).unwrap();
        assert_eq!(w.mean, vec![3.0, 7.0]);
        assert_eq!(w.diff, vec![2.0, 6.0]);
        assert_eq!(w.absdiff, vec![2.0, 6.0]);
        let same = wedge_data(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!(same.diff.iter().all(|d| *d == 0.0));
        assert!(matches!(wedge_data(&[1.0], &[1.0, 2.0]), Err(Error::Data(_))));
    }

    #[test]
    fn wedge_symmetry() {
        let x = [1.0, 5.0, 3.5];
        let y = [2.0, 0.5, 7.0];
        let a = wedge_data(&x, &y).unwrap();
        let b = wedge_data(&y, &x).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.absdiff, b.absdiff);
        assert!(a.diff.iter().zip(&b.diff).all(|(p, q)| *p == -*q));
    }

    #[test]
    fn identical_series() {
        let a: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let s = compare_synthetic(&a, &[a.clone(), a.clone()]).unwrap();
        for c in &s.series {
            assert_eq!(c.rms, 0.0);
            assert!((c.correlation - 1.0).abs() < 1e-12);
            assert!((c.variance_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_needs_two() {
        assert!(compare_synthetic(&[1.0, 2.0], &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn mid_ranks() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 35.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_ranks_pass() {
        let r: Vec<usize> = (0..1000).map(|k| k % 10 + 1).collect();
        let (stat, p) = rank_uniformity_test(&r, 10, 5).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        let skew = vec![1usize; 100];
        assert!(rank_uniformity_test(&skew, 10, 5).unwrap().1 < 1e-10);
    }

    #[test]
    fn uneven_pooling_keeps_uniform_ranks_exact() {
        // 101 levels into 10 bins: widths 10 or 11
        let r: Vec<usize> = (0..101 * 7).map(|k| k % 101 + 1).collect();
        let (stat, p) = rank_uniformity_test(&r, 101, 10).unwrap();
        assert!(stat.abs() < 1e-12 && (p - 1.0).abs() < 1e-12);
    }
}
