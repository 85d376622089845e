// Invariance and consistency properties checked over random inputs.

mod common;

use proptest::prelude::*;
use stochmodels::cluster::{clumpiness_index, Window};
use stochmodels::diagnostics::{compare_synthetic, wedge_data};
use stochmodels::popdyn::{blowfly_objective, fit_sardine, BlowflyModel, BlowflySeries, SardineTable};
use stochmodels::raintravel::{int_fu, TravelTimeLaw};
use stochmodels::{Region, RngStream};

fn seasons(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("s{k}")).collect()
}

fn table_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(1.0f64..5000.0, 5), 5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sardine_survival_ignores_catch_scale(rows in table_strategy(), c in 0.01f64..100.0) {
        let tab = SardineTable::from_dense(1, seasons(5), rows).unwrap();
        let a = fit_sardine(&tab, 1, 4).unwrap();
        let b = fit_sardine(&tab.scaled(c), 1, 4).unwrap();
        for (x, y) in a.p_star.iter().zip(&b.p_star).chain(a.r.iter().zip(&b.r)) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn season_effects_absorb_a_season_factor(rows in table_strategy(), k in 1usize..5, c in 0.1f64..10.0) {
        // multiplying season k by c moves r_{k-1} by c and r_k by 1/c
        let tab = SardineTable::from_dense(1, seasons(5), rows.clone()).unwrap();
        let mut bumped = rows;
        for row in bumped.iter_mut() {
            row[k] *= c;
        }
        let bumped = SardineTable::from_dense(1, seasons(5), bumped).unwrap();
        let a = fit_sardine(&tab, 1, 4).unwrap();
        let b = fit_sardine(&bumped, 1, 4).unwrap();
        let base = if k == 1 { c } else { 1.0 };
        for (x, y) in a.p_star.iter().zip(&b.p_star) {
            prop_assert!((y / x - base).abs() <= 1e-9 * base);
        }
        for t in 1..4 {
            let mut want = a.r[t] / base;
            if t == k - 1 { want *= c; }
            if t == k { want /= c; }
            prop_assert!((b.r[t] / want - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn wedge_swaps_sign_not_spread(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..40)) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let a = wedge_data(&x, &y).unwrap();
        let b = wedge_data(&y, &x).unwrap();
        prop_assert_eq!(&a.mean, &b.mean);
        prop_assert_eq!(&a.absdiff, &b.absdiff);
        for (p, q) in a.diff.iter().zip(&b.diff) {
            prop_assert_eq!(*p, -*q);
        }
    }

    #[test]
    fn clumpiness_moves_with_its_window(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 5..200),
        shift in (-50i32..50, -50i32..50),
    ) {
        // whole-quadrat shifts keep every point in the same cell
        let (dx, dy) = (shift.0 as f64 * 0.25, shift.1 as f64 * 0.25);
        let w = Window::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let moved_w = w.translated([dx, dy]);
        let p: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let q: Vec<[f64; 2]> = p.iter().map(|v| [v[0] + dx, v[1] + dy]).collect();
        let a = clumpiness_index(&p, &w, 0.25).unwrap();
        let b = clumpiness_index(&q, &moved_w, 0.25).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn blowfly_objective_ignores_the_time_origin(seed in 0u64..1000, shift in -1e4f64..1e4) {
        let model = BlowflyModel::new(vec![0.1, 0.2, 0.3], 1e-4, 5e-5, 0.0).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let n: Vec<f64> = (0..30).map(|_| (500.0 + 2000.0 * rng.uniform()).round()).collect();
        let e: Vec<f64> = (0..30).map(|_| (100.0 + 900.0 * rng.uniform()).round()).collect();
        let t: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let shifted: Vec<f64> = t.iter().map(|v| v + shift).collect();
        let a = blowfly_objective(&model, &BlowflySeries::new(t, n.clone(), e.clone()).unwrap()).unwrap();
        let b = blowfly_objective(&model, &BlowflySeries::new(shifted, n, e).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn integrated_cdf_is_monotone_and_one_lipschitz(
        theta in 0.5f64..10.0,
        shape in 1.5f64..10.0,
        x in 0.0f64..40.0,
        h in 1e-3f64..5.0,
    ) {
        let law = TravelTimeLaw::new(theta, shape).unwrap();
        let (a, b) = (int_fu(x, &law).unwrap(), int_fu(x + h, &law).unwrap());
        let slack = 1e-12 * b.abs().max(1.0);
        prop_assert!(b >= a - slack);
        prop_assert!(b - a <= h + slack);
    }

    #[test]
    fn synthetic_comparison_is_affine_invariant(
        seed in 0u64..1000,
        scale in 0.1f64..10.0,
        offset in -100.0f64..100.0,
    ) {
        let mut rng = RngStream::new(seed, 0);
        let actual: Vec<f64> = (0..40).map(|_| rng.normal()).collect();
        let ens: Vec<Vec<f64>> = (0..9).map(|_| (0..40).map(|_| 1.3 * rng.normal()).collect()).collect();
        let f = |v: &[f64]| v.iter().map(|x| scale * x + offset).collect::<Vec<f64>>();
        let a = compare_synthetic(&actual, &ens).unwrap();
        let b = compare_synthetic(&f(&actual), &ens.iter().map(|s| f(s)).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(a.variance_rank, b.variance_rank);
        for (p, q) in a.series.iter().zip(&b.series) {
            prop_assert!((p.correlation - q.correlation).abs() < 1e-9);
            prop_assert!((p.variance_ratio / q.variance_ratio - 1.0).abs() < 1e-9);
            prop_assert!((q.rms / (scale * p.rms) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn region_distance_matches_brute_force(q in (-3.0f64..3.0, -3.0f64..3.0), k in 0usize..6) {
        let verts = vec![[0.0, 0.0], [2.0, -0.5], [2.5, 1.0], [1.2, 0.6], [0.4, 2.0], [-0.6, 1.1]];
        let region = Region::new(verts.clone()).unwrap().rotated(k);
        let q = [q.0, q.1];
        let want = common::edge_distances(&verts, q).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!((region.distance(q) - want).abs() < 1e-12);
    }

    #[test]
    fn streams_replay_and_separate(seed in any::<u64>(), stream in 0u64..1000) {
        let draw = |s: u64| {
            let mut r = RngStream::new(seed, s);
            (0..8).map(|_| r.uniform()).collect::<Vec<f64>>()
        };
        prop_assert_eq!(draw(stream), draw(stream));
        prop_assert_ne!(draw(stream), draw(stream + 1));
    }
}
