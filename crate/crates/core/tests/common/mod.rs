#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pfdist::dist::random::{random_gaussian, random_gmm};
use pfdist::{DistributionSpec, GaussianMixtureSpec, GaussianSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

pub fn gaussian(seed: u64, d: usize) -> GaussianSpec {
    random_gaussian(d, 1.0, &mut rng(seed)).unwrap()
}

pub fn gmm(seed: u64, k: usize, d: usize) -> GaussianMixtureSpec {
    random_gmm(k, d, 1.5, &mut rng(seed)).unwrap()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[k] += h;
            b[k] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff: Vec<f64> = got.iter().zip(want).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(want).max(1e-300)
}

pub fn as_spec(g: &GaussianSpec) -> DistributionSpec {
    g.clone().into()
}
