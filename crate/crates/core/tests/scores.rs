mod common;

use common::*;
use pfdist::dist::random::random_gmm;
use pfdist::{EmpiricalSpec, GaussianMixtureSpec, GaussianSpec, ScoreField};
use proptest::prelude::*;
use rand::Rng;

fn noise_levels() -> impl Strategy<Value = f64> {
    // log-uniform on [0.01, 80]
    (0.01f64.ln()..80f64.ln()).prop_map(f64::exp)
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, d)
}

/// Relative FD step scaled to the noised spread so truncation error stays small.
fn step(t: f64) -> f64 {
    1e-4 * (1.0 + t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_score_matches_fd(seed in 0u64..1000, x in point(3), t in noise_levels()) {
        let g = gaussian(seed, 3);
        let fd = fd_gradient(|y| g.log_density(y, t).unwrap(), &x, step(t));
        let s = g.score(&x, t).unwrap();
        prop_assert!(rel_err(&s, &fd) <= 1e-5, "t={t} s={s:?} fd={fd:?}");
    }

    #[test]
    fn gmm_score_matches_fd(seed in 0u64..1000, x in point(3), t in noise_levels()) {
        let m = gmm(seed, 3, 3);
        let fd = fd_gradient(|y| m.log_density(y, t).unwrap(), &x, step(t));
        let s = m.score(&x, t).unwrap();
        prop_assert!(rel_err(&s, &fd) <= 1e-5, "t={t} s={s:?} fd={fd:?}");
    }

    #[test]
    fn empirical_score_matches_fd(seed in 0u64..1000, x in point(2), t in 0.1f64..5.0) {
        let mut r = rng(seed);
        let atoms: Vec<Vec<f64>> = (0..5).map(|_| vec![r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect();
        let e = EmpiricalSpec::new(atoms).unwrap();
        let fd = fd_gradient(|y| e.log_density(y, t).unwrap(), &x, 1e-4 * t);
        let s = e.score(&x, t).unwrap();
        prop_assert!(rel_err(&s, &fd) <= 1e-4, "t={t} s={s:?} fd={fd:?}");
    }

    #[test]
    fn empirical_weights_sum_to_one(seed in 0u64..1000, x in point(2), t in 0.002f64..80.0) {
        let mut r = rng(seed);
        let atoms: Vec<Vec<f64>> = (0..20).map(|_| vec![r.random_range(-50.0..50.0), r.random_range(-50.0..50.0)]).collect();
        let e = EmpiricalSpec::new(atoms).unwrap();
        let w = e.posterior_weights(&x, t).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|v| *v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn single_component_mixture_is_gaussian(seed in 0u64..1000, x in point(4), t in noise_levels()) {
        let g = gaussian(seed, 4);
        let m = GaussianMixtureSpec::new(vec![(1.0, g.clone())]).unwrap();
        let a = m.score(&x, t).unwrap();
        let b = g.score(&x, t).unwrap();
        prop_assert!(rel_err(&a, &b) <= 1e-13);
    }
}

#[test]
fn gmm_two_component_fd_tight() {
    let a = GaussianSpec::new(vec![1.0, -0.5], diag(&[0.5, 2.0])).unwrap();
    let b = GaussianSpec::new(vec![-1.0, 2.0], diag(&[1.5, 0.3])).unwrap();
    let m = GaussianMixtureSpec::new(vec![(0.3, a), (0.7, b)]).unwrap();
    for &t in &[0.05, 0.5, 2.0] {
        let x = [0.3, 0.4];
        let fd = fd_gradient(|y| m.log_density(y, t).unwrap(), &x, 1e-5);
        assert!(rel_err(&m.score(&x, t).unwrap(), &fd) < 1e-6);
    }
}

#[test]
fn empirical_three_atoms_fd_tight() {
    let e = EmpiricalSpec::new(vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.5, 1.5]]).unwrap();
    let x = [0.2, 0.7];
    let t = 0.8;
    let fd = fd_gradient(|y| e.log_density(y, t).unwrap(), &x, 1e-5);
    assert!(rel_err(&e.score(&x, t).unwrap(), &fd) < 1e-6);
}

#[test]
fn symmetric_mixture_vanishes_at_origin() {
    let a = GaussianSpec::isotropic(vec![2.0, 1.0], 0.7).unwrap();
    let b = GaussianSpec::isotropic(vec![-2.0, -1.0], 0.7).unwrap();
    let m = GaussianMixtureSpec::uniform(vec![a, b]).unwrap();
    for &t in &[0.01, 1.0, 80.0] {
        let s = m.score(&[0.0, 0.0], t).unwrap();
        assert!(norm(&s) < 1e-12, "{s:?}");
    }
}

#[test]
fn empirical_special_cases() {
    let one = EmpiricalSpec::new(vec![vec![1.0, 2.0]]).unwrap();
    let s = one.score(&[0.0, 0.0], 0.5).unwrap();
    assert_eq!(s, vec![4.0, 8.0]);
    let two = EmpiricalSpec::new(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let x = [0.0, 3.0];
    let s = two.score(&x, 2.0).unwrap();
    // equal weights: (midpoint − x)/t²
    assert!(rel_err(&s, &[0.0, -0.75]) < 1e-14);
    assert!(two.score(&x, 1e-3).is_err());
}

#[test]
fn separated_components_do_not_underflow() {
    let m = random_gmm(4, 3, 200.0, &mut rng(5)).unwrap();
    let s = m.score(&[1e3, -1e3, 5e2], 0.01).unwrap();
    assert!(s.iter().all(|v| v.is_finite()));
    let e = EmpiricalSpec::new(vec![vec![0.0], vec![1e4]]).unwrap();
    let s = e.score(&[5e3 + 1.0], 0.002).unwrap();
    assert!(s[0].is_finite());
}

#[test]
fn score_field_trait_matches_inherent() {
    let g = gaussian(9, 3);
    let mut out = vec![0.0; 3];
    g.score_into(&[0.1, 0.2, 0.3], 1.5, &mut out).unwrap();
    assert_eq!(out, g.score(&[0.1, 0.2, 0.3], 1.5).unwrap());
    assert!(g.score(&[0.0, 0.0], 1.0).is_err());
}
