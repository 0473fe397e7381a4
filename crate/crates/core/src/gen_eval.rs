//! Generalization and memorization measures built on the probability flow distance.
//!
//! * `E_gen = PFD(p_θ, p_data)`: distance from the model to the data distribution.
//! * `E_mem = PFD(p_θ, p_emp)`: distance from the model to its training set.
//! * M-distance: mean distance from each model generation to its nearest
//!   training atom; `E_mem = 0` implies it vanishes but not conversely.
//! * Bias-variance split of the dataset-averaged `E_gen²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, EmpiricalSpec, GaussianMixtureSpec, GaussianSpec};
use crate::error::{check_dim, invalid, Result};
use crate::flow::{integrate_flow, SolverConfig};
use crate::linalg::sq_dist;
use crate::pfd::{
    descriptor_flows, estimate_pfd_with, CoupledNoiseSet, Descriptor, EstimateOptions, PFDEstimate,
};

/// Everything needed to score one model against its data and training set.
#[derive(Debug, Clone)]
pub struct EvaluationScenario {
    pub data: DistributionSpec,
    pub model: DistributionSpec,
    pub training_set: EmpiricalSpec,
    pub noise: CoupledNoiseSet,
    pub solver: SolverConfig,
    pub descriptor: Descriptor,
}

impl EvaluationScenario {
    pub fn new(
        data: DistributionSpec,
        model: DistributionSpec,
        training_set: EmpiricalSpec,
        noise: CoupledNoiseSet,
        solver: SolverConfig,
        descriptor: Descriptor,
    ) -> Result<Self> {
        let d = data.dim();
        check_dim(d, model.dim())?;
        check_dim(d, training_set.dim())?;
        check_dim(d, noise.dim())?;
        if let Some(k) = descriptor.input_dim() {
            check_dim(k, d)?;
        }
        Ok(Self {
            data,
            model,
            training_set,
            noise,
            solver,
            descriptor,
        })
    }
}

/// `E_mem = PFD(p_θ, p_emp)`.
pub fn memorization_error(s: &EvaluationScenario) -> Result<PFDEstimate> {
    estimate_pfd_with(
        &s.model,
        &s.training_set,
        &s.noise,
        &s.solver,
        &s.descriptor,
        &EstimateOptions::default(),
    )
}

/// `E_gen = PFD(p_θ, p_data)`.
pub fn generalization_error(s: &EvaluationScenario) -> Result<PFDEstimate> {
    estimate_pfd_with(
        &s.model,
        &s.data,
        &s.noise,
        &s.solver,
        &s.descriptor,
        &EstimateOptions::default(),
    )
}

/// Per noise point: distance in descriptor space from the model generation to
/// the closest training atom.
pub fn m_distance_per_sample(s: &EvaluationScenario) -> Result<Vec<f64>> {
    let atoms: Vec<Vec<f64>> = s
        .training_set
        .atoms()
        .map(|a| s.descriptor.apply(a))
        .collect::<Result<_>>()?;
    let generations = descriptor_flows(&s.model, &s.noise, &s.solver, &s.descriptor)?;
    Ok(generations
        .par_iter()
        .map(|g| {
            atoms
                .iter()
                .map(|a| sq_dist(a, g))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect())
}

/// Mean nearest-training-atom distance of the model's generations.
pub fn m_distance(s: &EvaluationScenario) -> Result<f64> {
    let per = m_distance_per_sample(s)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Deterministic map from a training set to a model distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelBuilder {
    /// The model is the training set itself.
    Empirical,
    /// Equal-weight mixture of `N(y⁽ⁱ⁾, h² I)`; `h` acts as a capacity proxy.
    Kernel { bandwidth: f64 },
}

impl ModelBuilder {
    pub fn build(&self, data: &EmpiricalSpec) -> Result<DistributionSpec> {
        match *self {
            ModelBuilder::Empirical => Ok(data.clone().into()),
            ModelBuilder::Kernel { bandwidth } => {
                if !(bandwidth >= 0.0) || !bandwidth.is_finite() {
                    return Err(invalid(format!("kernel bandwidth must be >= 0, got {bandwidth}")));
                }
                if bandwidth == 0.0 {
                    return Ok(data.clone().into());
                }
                let comps = data
                    .atoms()
                    .map(|a| GaussianSpec::isotropic(a.to_vec(), bandwidth * bandwidth))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GaussianMixtureSpec::uniform(comps)?.into())
            }
        }
    }
}

impl std::str::FromStr for ModelBuilder {
    type Err = crate::Error;

    /// `empirical` or `kernel:<h>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "empirical" {
            return Ok(Self::Empirical);
        }
        if let Some(h) = s.strip_prefix("kernel:") {
            let bandwidth: f64 = h
                .parse()
                .map_err(|_| invalid(format!("bad kernel bandwidth '{h}'")))?;
            return Ok(Self::Kernel { bandwidth });
        }
        Err(invalid(format!("unknown model builder '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasVarianceReport {
    pub e_gen_sq_mean: f64,
    pub e_bias_sq: f64,
    pub e_var: f64,
    pub ensemble_size: usize,
    pub samples: usize,
    /// `e_gen_sq_mean − e_bias_sq − e_var`; zero up to rounding.
    pub residual: f64,
}

/// Decomposes `reference[i]` vs `per_model[j][i]` into squared bias and variance
/// about the ensemble mean `m_i = (1/J) Σ_j v_{j,i}`.
pub fn decompose(reference: &[Vec<f64>], per_model: &[Vec<Vec<f64>>]) -> Result<BiasVarianceReport> {
    let j_count = per_model.len();
    if j_count < 2 {
        return Err(invalid(format!("bias-variance needs at least 2 datasets, got {j_count}")));
    }
    let m = reference.len();
    if m == 0 {
        return Err(invalid("bias-variance needs at least one noise sample"));
    }
    for v in per_model {
        check_dim(m, v.len())?;
    }
    let d = reference[0].len();
    let mut gen = 0.0;
    let mut bias = 0.0;
    let mut var = 0.0;
    let mut mean = vec![0.0; d];
    for i in 0..m {
        // mean as an offset from the first model, exact when all models agree
        let first = &per_model[0][i];
        check_dim(d, first.len())?;
        mean.iter_mut().for_each(|x| *x = 0.0);
        for v in &per_model[1..] {
            check_dim(d, v[i].len())?;
            for ((a, b), f) in mean.iter_mut().zip(&v[i]).zip(first) {
                *a += b - f;
            }
        }
        for (a, f) in mean.iter_mut().zip(first) {
            *a = f + *a / j_count as f64;
        }
        bias += sq_dist(&reference[i], &mean);
        let g0 = sq_dist(&reference[i], first);
        let mut g_off = 0.0;
        let mut v_sum = 0.0;
        for v in per_model {
            v_sum += sq_dist(&v[i], &mean);
            g_off += sq_dist(&reference[i], &v[i]) - g0;
        }
        gen += g0 + g_off / j_count as f64;
        var += v_sum / j_count as f64;
    }
    let e_gen_sq_mean = gen / m as f64;
    let e_bias_sq = bias / m as f64;
    let e_var = var / m as f64;
    Ok(BiasVarianceReport {
        e_gen_sq_mean,
        e_bias_sq,
        e_var,
        ensemble_size: j_count,
        samples: m,
        residual: e_gen_sq_mean - e_bias_sq - e_var,
    })
}

/// Bias-variance decomposition of `E_gen²` over an ensemble of training sets.
/// The reference flow and all `J` model flows share one noise set.
pub fn bias_variance<F>(
    datasets: &[EmpiricalSpec],
    model_builder: F,
    data: &DistributionSpec,
    noise: &CoupledNoiseSet,
    solver: &SolverConfig,
    descriptor: &Descriptor,
) -> Result<BiasVarianceReport>
where
    F: Fn(&EmpiricalSpec) -> Result<DistributionSpec>,
{
    if datasets.len() < 2 {
        return Err(invalid(format!(
            "bias-variance needs at least 2 datasets, got {}",
            datasets.len()
        )));
    }
    let models = datasets.iter().map(&model_builder).collect::<Result<Vec<_>>>()?;
    for m in &models {
        check_dim(data.dim(), m.dim())?;
    }
    check_dim(data.dim(), noise.dim())?;

    // per index: reference flow then the J model flows, sequentially
    let rows: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..noise.len())
        .into_par_iter()
        .map(|i| {
            let x_t = noise.point(i);
            let r = descriptor.apply(&integrate_flow(data, &x_t, solver)?.x0)?;
            let vs = models
                .iter()
                .map(|m| descriptor.apply(&integrate_flow(m, &x_t, solver)?.x0))
                .collect::<Result<Vec<_>>>()?;
            Ok((r, vs))
        })
        .collect::<Result<_>>()?;

    let reference: Vec<Vec<f64>> = rows.iter().map(|(r, _)| r.clone()).collect();
    let per_model: Vec<Vec<Vec<f64>>> = (0..models.len())
        .map(|j| rows.iter().map(|(_, vs)| vs[j].clone()).collect())
        .collect();
    decompose(&reference, &per_model)
}
