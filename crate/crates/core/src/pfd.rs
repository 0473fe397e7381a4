//! Probability flow distance.
//!
//! For two distributions `p`, `q`, a descriptor `Ψ` and shared noise
//! `x_T ~ N(0, σ_max² I)`:
//!
//! ```text
//! PFD(p, q) = ( E ‖Ψ∘Φ_p(x_T) − Ψ∘Φ_q(x_T)‖² )^{1/2}
//! ```
//!
//! The Monte-Carlo estimator averages the squared distances over `M` coupled
//! noise points. Both flows always consume the same `x_T`; decoupling them
//! would estimate a different, larger quantity.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{DistributionSpec, GaussianSpec, ScoreField};
use crate::error::{check_dim, invalid, Error, Result};
use crate::flow::{integrate_flow, SolverConfig};
use crate::linalg::{sq_dist, SymEig};
use crate::rng::{tags, StreamKey};

/// Post-hoc feature map applied to flow outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Descriptor {
    #[default]
    Identity,
    /// `x ↦ A x` with `A` of shape `k × d`.
    Linear(DMatrix<f64>),
}

impl Descriptor {
    pub fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(invalid("linear descriptor needs a nonempty matrix"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("linear descriptor has non-finite entries"));
        }
        Ok(Self::Linear(matrix))
    }

    pub fn input_dim(&self) -> Option<usize> {
        match self {
            Self::Identity => None,
            Self::Linear(a) => Some(a.ncols()),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Identity => Ok(x.to_vec()),
            Self::Linear(a) => {
                check_dim(a.ncols(), x.len())?;
                Ok((0..a.nrows())
                    .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
                    .collect())
            }
        }
    }

    /// Largest singular value (1 for the identity).
    pub fn operator_norm(&self) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Linear(a) => a
                .clone()
                .svd(false, false)
                .singular_values
                .iter()
                .fold(0.0, |m: f64, &s| m.max(s)),
        }
    }
}

/// Lazily generated noise points `x_T⁽ⁱ⁾ = σ_max · z⁽ⁱ⁾`.
///
/// Point `i` depends only on `(seed, i, dim, σ_max)`, so a set of size `M` is a
/// prefix of any larger set with the same parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledNoiseSet {
    key: StreamKey,
    count: usize,
    sigma_max: f64,
    dim: usize,
}

impl CoupledNoiseSet {
    pub fn new(seed: u64, count: usize, sigma_max: f64, dim: usize) -> Result<Self> {
        Self::with_key(StreamKey::new(seed).with_tag(tags::NOISE), count, sigma_max, dim)
    }

    /// Noise under an explicit stream key (used by experiments to keep trials apart).
    pub fn with_key(key: StreamKey, count: usize, sigma_max: f64, dim: usize) -> Result<Self> {
        if count == 0 {
            return Err(invalid("noise set needs at least one sample"));
        }
        if dim == 0 {
            return Err(invalid("noise dimension must be positive"));
        }
        if !(sigma_max > 0.0) {
            return Err(invalid("sigma_max must be positive"));
        }
        Ok(Self {
            key,
            count,
            sigma_max,
            dim,
        })
    }

    pub fn seed(&self) -> u64 {
        self.key.seed()
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Same stream, first `count` points.
    pub fn prefix(&self, count: usize) -> Result<Self> {
        Self::with_key(self.key, count, self.sigma_max, self.dim)
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut z = self.key.normal_vector(i as u64, self.dim);
        z.iter_mut().for_each(|v| *v *= self.sigma_max);
        z
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

/// Constants of the Lipschitz/score-gap assumption behind the sample-size bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzProfile {
    /// Lipschitz constant `L` of the scores in `x`.
    pub lipschitz: f64,
    /// Uniform score gap `ε` (zero allowed: identical scores beyond the tail).
    pub score_gap: f64,
    /// Tail gap `ξ` between the flows at the cutoff time.
    pub tail_gap: f64,
    /// Cutoff time `T_ξ`.
    pub tail_time: f64,
}

impl LipschitzProfile {
    pub fn new(lipschitz: f64, score_gap: f64, tail_gap: f64, tail_time: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(lipschitz) || !ok(tail_gap) || !ok(tail_time) || !(score_gap >= 0.0) || !score_gap.is_finite() {
            return Err(invalid(
                "Lipschitz profile needs L, xi, T_xi > 0 and eps >= 0",
            ));
        }
        Ok(Self {
            lipschitz,
            score_gap,
            tail_gap,
            tail_time,
        })
    }
}

/// Grönwall bound `κ(L, ε) = e^{L T_ξ²/2} ξ + (ε/L)(e^{L T_ξ²/2} − 1)` on
/// `‖Φ_p(x_T) − Φ_q(x_T)‖`.
pub fn gronwall_gap_bound(profile: &LipschitzProfile) -> f64 {
    let a = 0.5 * profile.lipschitz * profile.tail_time * profile.tail_time;
    // expm1 keeps (ε/L)(e^a − 1) accurate as L → 0
    a.exp() * profile.tail_gap + profile.score_gap / profile.lipschitz * a.exp_m1()
}

/// Smallest `M` with `M ≥ κ⁴/(2γ⁴) · ln(2/η)`.
pub fn sample_size_bound(profile: &LipschitzProfile, gamma: f64, eta: f64) -> Result<u64> {
    sample_size_for_kappa(gronwall_gap_bound(profile), gamma, eta)
}

/// Planner core for an already known `κ`.
pub fn sample_size_for_kappa(kappa: f64, gamma: f64, eta: f64) -> Result<u64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid(format!("accuracy gamma must be positive, got {gamma}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("failure probability eta must lie in (0, 1), got {eta}")));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa must be finite and nonnegative, got {kappa}")));
    }
    let m = kappa.powi(4) / (2.0 * gamma.powi(4)) * (2.0 / eta).ln();
    if m > u64::MAX as f64 {
        return Err(invalid("planned sample size overflows"));
    }
    Ok((m.ceil() as u64).max(1))
}

/// Two-sided Hoeffding halfwidth on the PFD scale: with probability `1 − η`,
/// `|PFD̂² − PFD²| ≤ κ² √(ln(2/η) / 2M)`, hence `|PFD̂ − PFD| ≤ κ (ln(2/η)/2M)^{1/4}`.
pub fn hoeffding_halfwidth(kappa: f64, samples: usize, eta: f64) -> f64 {
    kappa * ((2.0 / eta).ln() / (2.0 * samples as f64)).powf(0.25)
}

/// Optional inputs for [`estimate_pfd_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub profile: Option<LipschitzProfile>,
    /// Failure probability for the reported halfwidth.
    pub eta: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            profile: None,
            eta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PFDEstimate {
    pub value: f64,
    pub squared_distances: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub concentration_halfwidth: Option<f64>,
    pub solver: String,
}

impl PFDEstimate {
    pub(crate) fn from_squared(
        squared_distances: Vec<f64>,
        noise: &CoupledNoiseSet,
        cfg: &SolverConfig,
        opts: &EstimateOptions,
    ) -> Self {
        let m = squared_distances.len();
        let mean = squared_distances.iter().sum::<f64>() / m as f64;
        let concentration_halfwidth = opts
            .profile
            .map(|p| hoeffding_halfwidth(gronwall_gap_bound(&p), m, opts.eta));
        Self {
            value: mean.sqrt(),
            squared_distances,
            samples: m,
            seed: noise.seed(),
            concentration_halfwidth,
            solver: cfg.fingerprint(),
        }
    }

    pub fn mean_squared(&self) -> f64 {
        self.value * self.value
    }
}

/// Descriptor-space image `Ψ∘Φ_p(x_T⁽ⁱ⁾)` for every noise point.
pub fn descriptor_flows<S: ScoreField + ?Sized>(
    p: &S,
    noise: &CoupledNoiseSet,
    cfg: &SolverConfig,
    descriptor: &Descriptor,
) -> Result<Vec<Vec<f64>>> {
    check_dim(noise.dim(), p.dim())?;
    if let Some(d) = descriptor.input_dim() {
        check_dim(d, p.dim())?;
    }
    (0..noise.len())
        .into_par_iter()
        .map(|i| {
            let x0 = integrate_flow(p, &noise.point(i), cfg)
                .map_err(|e| tag_sample(e, i))?
                .x0;
            descriptor.apply(&x0)
        })
        .collect()
}

fn tag_sample(e: Error, sample: usize) -> Error {
    match e {
        Error::Divergence { step } => Error::SampleDivergence { sample, step },
        other => other,
    }
}

/// Coupled squared distances `‖Ψ∘Φ_p(x_T⁽ⁱ⁾) − Ψ∘Φ_q(x_T⁽ⁱ⁾)‖²`, in index order.
pub fn coupled_squared_distances<P, Q>(
    p: &P,
    q: &Q,
    noise: &CoupledNoiseSet,
    cfg: &SolverConfig,
    descriptor: &Descriptor,
) -> Result<Vec<f64>>
where
    P: ScoreField + ?Sized,
    Q: ScoreField + ?Sized,
{
    check_dim(p.dim(), q.dim())?;
    check_dim(noise.dim(), p.dim())?;
    if let Some(d) = descriptor.input_dim() {
        check_dim(d, p.dim())?;
    }
    (0..noise.len())
        .into_par_iter()
        .map(|i| {
            let x_t = noise.point(i);
            let a = integrate_flow(p, &x_t, cfg).map_err(|e| tag_sample(e, i))?.x0;
            let b = integrate_flow(q, &x_t, cfg).map_err(|e| tag_sample(e, i))?.x0;
            Ok(sq_dist(&descriptor.apply(&a)?, &descriptor.apply(&b)?))
        })
        .collect()
}

/// Empirical PFD over the coupled noise set.
pub fn estimate_pfd(
    p: &DistributionSpec,
    q: &DistributionSpec,
    noise: &CoupledNoiseSet,
    cfg: &SolverConfig,
    descriptor: &Descriptor,
) -> Result<PFDEstimate> {
    estimate_pfd_with(p, q, noise, cfg, descriptor, &EstimateOptions::default())
}

/// [`estimate_pfd`] for arbitrary score fields, with a concentration halfwidth
/// when a [`LipschitzProfile`] is supplied.
pub fn estimate_pfd_with<P, Q>(
    p: &P,
    q: &Q,
    noise: &CoupledNoiseSet,
    cfg: &SolverConfig,
    descriptor: &Descriptor,
    opts: &EstimateOptions,
) -> Result<PFDEstimate>
where
    P: ScoreField + ?Sized,
    Q: ScoreField + ?Sized,
{
    let sq = coupled_squared_distances(p, q, noise, cfg, descriptor)?;
    Ok(PFDEstimate::from_squared(sq, noise, cfg, opts))
}

/// Closed form for Gaussians: `(‖μ₁ − μ₂‖² + ‖Σ₁^{1/2} − Σ₂^{1/2}‖_F²)^{1/2}`.
pub fn closed_form_gaussian_pfd(p: &GaussianSpec, q: &GaussianSpec) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    let mean_term = sq_dist(p.mean(), q.mean());
    let cov_term = (p.cov_sqrt() - q.cov_sqrt()).norm_squared();
    Ok((mean_term + cov_term).sqrt())
}

/// Closed-form PFD at a finite start time: the Gaussian flow from `σ_max` to 0
/// is affine, `Φ(x) = (I − D)μ + D x` with `D = U diag(√(λ/(λ+σ_max²))) Uᵀ`, so
/// `E‖a + B x_T‖² = ‖a‖² + σ_max² ‖B‖_F²` for `x_T ~ N(0, σ_max² I)`.
pub fn finite_horizon_gaussian_pfd(p: &GaussianSpec, q: &GaussianSpec, sigma_max: f64) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    if !(sigma_max > 0.0) {
        return Err(invalid("sigma_max must be positive"));
    }
    let s2 = sigma_max * sigma_max;
    let contraction = |e: &SymEig| e.spectral_map(|l| (l / (l + s2)).sqrt());
    let dp = contraction(p.eigen());
    let dq = contraction(q.eigen());
    let mp = nalgebra::DVector::from_column_slice(p.mean());
    let mq = nalgebra::DVector::from_column_slice(q.mean());
    let a = (&mp - &dp * &mp) - (&mq - &dq * &mq);
    let b = dp - dq;
    Ok((a.norm_squared() + s2 * b.norm_squared()).sqrt())
}
