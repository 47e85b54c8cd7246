mod common;

use afs_core::ml::{paired_ttest, pearson_r, rmse, t_cdf};
use afs_core::Error;
use common::checks::ttest_rejection_rate;
use common::*;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn random_vec(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()
}

#[test]
fn pearson_and_rmse_match_textbook_formulas() {
    let mut rng = rng(31);
    for _ in 0..200 {
        let n = rng.random_range(2..60);
        let a = random_vec(&mut rng, n);
        let b = random_vec(&mut rng, n);
        assert!(close(pearson_r(&a, &b).unwrap(), pearson(&a, &b), 1e-12));
        assert!(close(rmse(&a, &b).unwrap(), common::rmse(&a, &b), 1e-12));
    }
}

#[test]
fn pearson_hand_values() {
    assert!(close(
        pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(),
        1.0,
        1e-12
    ));
    assert!(close(
        pearson_r(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
        -1.0,
        1e-12
    ));
    // cov = 1, var = 2 and 2/3 -> r = sqrt(3)/2
    let r = pearson_r(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]).unwrap();
    assert!(close(r, 3f64.sqrt() / 2.0, 1e-12));
    assert!(matches!(pearson_r(&[1.0, 1.0], &[0.0, 2.0]), Err(Error::Undefined(_))));
}

#[test]
fn rmse_hand_value() {
    // errors 1, -1, 3 -> sqrt(11/3)
    let v = rmse(&[1.0, 2.0, 3.0], &[0.0, 3.0, 0.0]).unwrap();
    assert!(close(v, (11.0f64 / 3.0).sqrt(), 1e-12));
}

#[test]
fn t_cdf_closed_forms() {
    for &t in &[-30.0, -3.0, -1.0, -0.2, 0.0, 0.4, 1.0, 2.5, 10.0, 1e3] {
        let cauchy = 0.5 + f64::atan(t) / std::f64::consts::PI;
        assert!(close(t_cdf(t, 1.0).unwrap(), cauchy, 1e-8), "df=1 t={t}");
        let two = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
        assert!(close(t_cdf(t, 2.0).unwrap(), two, 1e-8), "df=2 t={t}");
    }
    assert!(close(t_cdf(1.0, 1.0).unwrap(), 0.75, 1e-12));
    assert!(close(t_cdf(2.776, 4.0).unwrap(), 0.975, 1e-3));
}

#[test]
fn t_cdf_matches_reference_library() {
    let mut rng = rng(32);
    for _ in 0..500 {
        let df = rng.random_range(1..200) as f64;
        let t = rng.random_range(-8.0..8.0);
        let want = StudentsT::new(0.0, 1.0, df).unwrap().cdf(t);
        let got = t_cdf(t, df).unwrap();
        assert!(close(got, want, 1e-8), "t={t} df={df}: {got} vs {want}");
    }
}

#[test]
fn paired_ttest_matches_hand_statistic_and_reference_p() {
    let mut rng = rng(33);
    for _ in 0..200 {
        let n = rng.random_range(2..30);
        let a = random_vec(&mut rng, n);
        let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-1.0..1.5)).collect();
        let r = paired_ttest(&a, &b).unwrap();
        let t = paired_t(&a, &b);
        assert!(close(r.t, t, 1e-6 * t.abs().max(1.0)));
        assert_eq!(r.df, n - 1);
        let p = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap().cdf(t.abs()));
        assert!(close(r.p, p, 1e-6), "p {} vs {p}", r.p);
    }
}

#[test]
fn paired_ttest_hand_value() {
    // d = 1, 2, 3: mean 2, sd 1, t = 2 * sqrt(3)
    let r = paired_ttest(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!(close(r.t, 2.0 * 3f64.sqrt(), 1e-12));
    assert_eq!(r.df, 2);
}

#[test]
fn paired_ttest_is_calibrated() {
    let rate = ttest_rejection_rate(34, 20_000, 10, 0.05);
    assert!((rate - 0.05).abs() <= 0.015, "rejection rate {rate}");
}
