//! Reference distances: Bures–Wasserstein W2 and KL between Gaussians, and
//! sample-based W2 by exact assignment or entropic regularisation.

mod assignment;
mod sinkhorn;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use assignment::min_cost_assignment;
pub use sinkhorn::{sinkhorn_uniform, SinkhornResult};

use crate::dist::GaussianSpec;
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{sq_dist, sqrt_psd, symmetrize};

/// Largest per-side sample count accepted by the exact assignment solver.
pub const EXACT_ASSIGNMENT_LIMIT: usize = 4096;

/// `W₂` between Gaussians:
/// `(‖μ₁ − μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2}))^{1/2}`.
pub fn gaussian_w2(p: &GaussianSpec, q: &GaussianSpec) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    if p == q {
        return Ok(0.0);
    }
    let s1 = p.cov_sqrt();
    let cross = sqrt_psd(&symmetrize(&(&s1 * q.cov() * &s1)))?;
    let bures = p.cov().trace() + q.cov().trace() - 2.0 * cross.trace();
    let total = sq_dist(p.mean(), q.mean()) + bures;
    Ok(total.max(0.0).sqrt())
}

/// `KL(p ‖ q)` between Gaussians. `q` must be nondegenerate; a degenerate `p`
/// against a nondegenerate `q` gives `+∞`.
pub fn gaussian_kl(p: &GaussianSpec, q: &GaussianSpec) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    let eq = q.eigen();
    if eq.min_value() <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let ep = p.eigen();
    if ep.min_value() <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let d = p.dim() as f64;
    let q_inv = eq.spectral_map(|l| 1.0 / l);
    let diff = DVector::from_iterator(
        p.dim(),
        q.mean().iter().zip(p.mean()).map(|(a, b)| a - b),
    );
    let trace = (&q_inv * p.cov()).trace();
    let maha = (diff.transpose() * &q_inv * &diff)[(0, 0)];
    let logdet_q: f64 = eq.values().iter().map(|l| l.ln()).sum();
    let logdet_p: f64 = ep.values().iter().map(|l| l.ln()).sum();
    Ok(0.5 * (trace + maha - d + logdet_q - logdet_p).max(0.0))
}

/// Maximum-likelihood Gaussian fit (sample mean, `1/n` covariance).
pub fn fit_gaussian(samples: &[Vec<f64>]) -> Result<GaussianSpec> {
    let n = samples.len();
    let d = samples.first().map_or(0, Vec::len);
    if n == 0 || d == 0 {
        return Err(invalid("cannot fit a Gaussian to no samples"));
    }
    let mut mean = vec![0.0; d];
    for s in samples {
        check_dim(d, s.len())?;
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        for a in 0..d {
            let da = s[a] - mean[a];
            for b in 0..d {
                cov[(a, b)] += da * (s[b] - mean[b]);
            }
        }
    }
    cov /= n as f64;
    GaussianSpec::new(mean, symmetrize(&cov))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum W2Method {
    Exact,
    Entropic { reg: f64, max_iters: usize },
}

impl Default for W2Method {
    fn default() -> Self {
        Self::Exact
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct W2SampleConfig {
    pub method: W2Method,
}

impl W2SampleConfig {
    pub fn exact() -> Self {
        Self {
            method: W2Method::Exact,
        }
    }

    pub fn entropic(reg: f64, max_iters: usize) -> Result<Self> {
        if !(reg > 0.0) {
            return Err(invalid("entropic regularisation must be positive"));
        }
        if max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        Ok(Self {
            method: W2Method::Entropic { reg, max_iters },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct W2Estimate {
    pub value: f64,
    pub method: &'static str,
    /// False when Sinkhorn stopped at `max_iters` before reaching tolerance.
    pub converged: bool,
}

/// Squared-Euclidean cost matrix, row-major, built in parallel by row.
pub fn squared_cost_matrix(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Vec<f64> {
    xs.par_iter()
        .flat_map_iter(|x| ys.iter().map(move |y| sq_dist(x, y)))
        .collect()
}

/// RMS distance `(1/n Σ ‖x_i − y_{π(i)}‖²)^{1/2}` of an explicit pairing.
pub fn paired_rms(xs: &[Vec<f64>], ys: &[Vec<f64>], pairing: &[usize]) -> f64 {
    let total: f64 = xs
        .iter()
        .zip(pairing)
        .map(|(x, &j)| sq_dist(x, &ys[j]))
        .sum();
    (total / xs.len() as f64).sqrt()
}

/// Sample-based `W₂` between two equal-size point clouds with uniform weights.
pub fn sample_w2(xs: &[Vec<f64>], ys: &[Vec<f64>], cfg: &W2SampleConfig) -> Result<W2Estimate> {
    let n = xs.len();
    check_dim(n, ys.len())?;
    if n == 0 {
        return Err(invalid("sample W2 needs at least one point per side"));
    }
    let d = xs[0].len();
    for p in xs.iter().chain(ys) {
        check_dim(d, p.len())?;
    }
    match cfg.method {
        W2Method::Exact => {
            if n > EXACT_ASSIGNMENT_LIMIT {
                return Err(Error::CostGuard {
                    count: n,
                    limit: EXACT_ASSIGNMENT_LIMIT,
                });
            }
            let cost = squared_cost_matrix(xs, ys);
            let pairing = min_cost_assignment(&cost, n);
            let total: f64 = pairing.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
            Ok(W2Estimate {
                value: (total / n as f64).sqrt(),
                method: "exact",
                converged: true,
            })
        }
        W2Method::Entropic { reg, max_iters } => {
            let cost = squared_cost_matrix(xs, ys);
            let r = sinkhorn_uniform(&cost, n, reg, max_iters, 1e-9);
            Ok(W2Estimate {
                value: r.cost.max(0.0).sqrt(),
                method: "entropic",
                converged: r.converged,
            })
        }
    }
}
