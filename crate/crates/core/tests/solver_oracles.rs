mod common;

use afs_core::ml::{self, HyperParams, SmoOptions};
use common::checks::{ridge_oracle, ridge_residual, svr_oracle};
use common::*;
use rand::Rng;

#[test]
fn ridge_matches_normal_equations() {
    let w = ridge_oracle(21, 50);
    assert!(w.err <= 1e-8, "max relative error {:e} at {}", w.err, w.what);
}

#[test]
fn ridge_optimality_residual() {
    let mut rng = rng(22);
    for _ in 0..30 {
        let n = rng.random_range(5..40);
        let p = rng.random_range(1..12);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..4.0)).collect();
        let alpha = rng.random_range(0.01..50.0);
        let r = ridge_residual(&x, &y, alpha);
        assert!(r <= 1e-6, "residual {r:e} for {n}x{p} alpha={alpha}");
    }
}

#[test]
fn ridge_large_alpha_shrinks_to_mean() {
    let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i % 3) as f64]).collect();
    let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
    let m = ml::ridge_fit(&x, &y, 1e12).unwrap();
    assert!(m.weights.iter().all(|w| w.abs() < 1e-8));
    assert!(close(m.intercept, mean(&y), 1e-6));
}

#[test]
fn svr_passes_kkt_and_matches_projected_gradient() {
    let opts = SmoOptions {
        tol: 1e-6,
        max_iter: None,
    };
    let check = svr_oracle(23, 20, opts);
    assert!(check.kkt_failures.is_empty(), "{:#?}", check.kkt_failures);
    assert_eq!(check.unconverged, 0);
    assert!(
        check.prediction.err <= 1e-3,
        "max prediction gap {:e} at {}",
        check.prediction.err,
        check.prediction.what
    );
    // The default stopping tolerance bounds the gap loosely.
    assert!(check.default_prediction.err <= 1e-2);
}

#[test]
fn svr_dual_bounds_under_tight_tolerance() {
    let mut rng = rng(24);
    let x: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.random_range(-2.0..2.0)]).collect();
    let y: Vec<f64> = x.iter().map(|r| r[0].powi(2)).collect();
    let k = ml::KernelMatrix::rbf(&x, 0.7);
    let opts = SmoOptions {
        tol: 1e-8,
        max_iter: None,
    };
    let sol = ml::smo_solve(&k, &y, 3.0, 0.05, opts).unwrap();
    assert!(sol.converged);
    assert!(sol.violation < 1e-8);
    assert!(sol.dual_coef.iter().all(|b| b.abs() <= 3.0));
    assert!(sol.dual_coef.iter().sum::<f64>().abs() <= 1e-6 * 3.0);
}

#[test]
fn svr_with_wide_tube_predicts_a_constant() {
    let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
    let y: Vec<f64> = (0..8).map(|i| 0.01 * i as f64).collect();
    let m = ml::svr_fit(&x, &y, 1.0, 0.5, 1.0).unwrap();
    assert!(m.support_vectors.is_empty());
    let p = m.predict_row(&[3.0]);
    assert!(y.iter().all(|t| (t - p).abs() <= 1.0));
}

#[test]
fn fit_model_standardizes_before_solving() {
    // Same data on very different column scales: a standardized ridge gives
    // identical predictions.
    let mut rng = rng(25);
    let x: Vec<Vec<f64>> = (0..30)
        .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect();
    let y: Vec<f64> = x.iter().map(|r| r[0] - 2.0 * r[1]).collect();
    let scaled: Vec<Vec<f64>> = x.iter().map(|r| vec![1e4 * r[0], 1e-3 * r[1]]).collect();
    let p = HyperParams::Ridge { alpha: 1.0 };
    let a = ml::fit_model(p, &x, &y, "fp", SmoOptions::default()).unwrap();
    let b = ml::fit_model(p, &scaled, &y, "fp", SmoOptions::default()).unwrap();
    let pa = a.predict(&x, "fp").unwrap();
    let pb = b.predict(&scaled, "fp").unwrap();
    for (u, v) in pa.iter().zip(&pb) {
        assert!(close(*u, *v, 1e-9));
    }
}
