//! Backward probability-flow ODE under the EDM schedule.
//!
//! With drift `f ≡ 0` and diffusion `g(t) = √(2t)` the noise level is
//! `σ(t) = t` and the probability-flow ODE reads
//!
//! ```text
//! dx/dt = −t · ∇ log p_t(x)
//! ```
//!
//! Integrating it from `t = σ_max` down to `σ_min` maps a noise point `x_T`
//! to `Φ_p(x_T)`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{GaussianSpec, ScoreField};
use crate::error::{check_dim, invalid, Error, Result};

pub const DEFAULT_SIGMA_MAX: f64 = 80.0;
pub const DEFAULT_SIGMA_MIN: f64 = 0.002;
pub const DEFAULT_RHO: f64 = 7.0;
pub const DEFAULT_STEPS: usize = 18;

/// Noise schedule family. Only EDM is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSchedule {
    #[default]
    Edm,
}

impl NoiseSchedule {
    pub fn drift(&self, _t: f64) -> f64 {
        0.0
    }

    pub fn diffusion(&self, t: f64) -> f64 {
        (2.0 * t).sqrt()
    }

    pub fn sigma(&self, t: f64) -> f64 {
        t
    }
}

/// Strictly decreasing noise levels `t_0 = σ_max > … > t_n = σ_min`,
/// optionally followed by a terminal node at exactly `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    sigma_max: f64,
    sigma_min: f64,
    rho: f64,
    steps: usize,
    terminal_zero: bool,
}

impl TimeGrid {
    /// Power-warped grid `t_i = (σ_max^{1/ρ} + (i/n)(σ_min^{1/ρ} − σ_max^{1/ρ}))^ρ`.
    pub fn edm(sigma_max: f64, sigma_min: f64, steps: usize, rho: f64) -> Result<Self> {
        if !(sigma_min > 0.0) || !(sigma_max > sigma_min) || !sigma_max.is_finite() {
            return Err(invalid(format!(
                "time grid needs sigma_max > sigma_min > 0, got {sigma_max} and {sigma_min}"
            )));
        }
        if steps == 0 {
            return Err(invalid("time grid needs at least one step"));
        }
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(invalid(format!("warp exponent rho must be >= 1, got {rho}")));
        }
        let hi = sigma_max.powf(1.0 / rho);
        let lo = sigma_min.powf(1.0 / rho);
        let mut nodes: Vec<f64> = (0..=steps)
            .map(|i| (hi + (i as f64 / steps as f64) * (lo - hi)).powf(rho))
            .collect();
        // pin the endpoints exactly; the empirical score rejects anything below σ_min
        nodes[0] = sigma_max;
        nodes[steps] = sigma_min;
        if nodes.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("time grid is not strictly decreasing; use fewer steps"));
        }
        Ok(Self {
            nodes,
            sigma_max,
            sigma_min,
            rho,
            steps,
            terminal_zero: false,
        })
    }

    /// Appends a final node at `t = 0`. Only valid for score fields defined at
    /// zero noise (nondegenerate Gaussians and mixtures).
    pub fn with_terminal_zero(mut self) -> Self {
        if !self.terminal_zero {
            self.nodes.push(0.0);
            self.terminal_zero = true;
        }
        self
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Number of integration steps, including the extra step to zero if present.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn terminal_zero(&self) -> bool {
        self.terminal_zero
    }

    pub fn last(&self) -> f64 {
        *self.nodes.last().expect("grid has at least two nodes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Euler,
    #[default]
    Heun,
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverMethod::Euler => f.write_str("euler"),
            SolverMethod::Heun => f.write_str("heun"),
        }
    }
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Self::Euler),
            "heun" | "heun2" => Ok(Self::Heun),
            other => Err(invalid(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub grid: TimeGrid,
}

impl SolverConfig {
    pub fn new(method: SolverMethod, grid: TimeGrid) -> Self {
        Self { method, grid }
    }

    pub fn heun(sigma_max: f64, sigma_min: f64, steps: usize, rho: f64) -> Result<Self> {
        Ok(Self::new(
            SolverMethod::Heun,
            TimeGrid::edm(sigma_max, sigma_min, steps, rho)?,
        ))
    }

    /// Heun with `steps` steps on the default EDM grid.
    pub fn heun_steps(steps: usize) -> Result<Self> {
        Self::heun(DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN, steps, DEFAULT_RHO)
    }

    /// Short identifier recorded next to every estimate.
    pub fn fingerprint(&self) -> String {
        let g = &self.grid;
        format!(
            "{}:n={}:smax={}:smin={}:rho={}{}",
            self.method,
            g.steps,
            g.sigma_max,
            g.sigma_min,
            g.rho,
            if g.terminal_zero { ":zero" } else { "" }
        )
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::heun_steps(DEFAULT_STEPS).expect("default grid is valid")
    }
}

/// Result of one flow solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMapResult {
    pub x0: Vec<f64>,
    pub score_evaluations: usize,
    /// Noise level of the final node (`σ_min`, or `0` with a terminal-zero grid).
    pub t_final: f64,
}

/// Integrates `dx/dt = −t ∇log p_t(x)` from `grid[0]` down the grid.
///
/// Heun applies the trapezoidal corrector on every step whose target node is
/// positive; a step landing exactly on `t = 0` is a plain Euler step.
pub fn integrate_flow<S: ScoreField + ?Sized>(
    score: &S,
    x_t: &[f64],
    cfg: &SolverConfig,
) -> Result<FlowMapResult> {
    let d = score.dim();
    check_dim(d, x_t.len())?;
    let nodes = cfg.grid.nodes();
    let mut x = x_t.to_vec();
    let mut drift = vec![0.0; d];
    let mut drift_next = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut evals = 0;

    for (step, w) in nodes.windows(2).enumerate() {
        let (t_cur, t_next) = (w[0], w[1]);
        let h = t_next - t_cur;
        score.score_into(&x, t_cur, &mut drift)?;
        evals += 1;
        // drift = −t s(x, t)
        drift.iter_mut().for_each(|v| *v *= -t_cur);
        let corrector = cfg.method == SolverMethod::Heun && t_next > 0.0;
        if corrector {
            for ((p, xi), di) in trial.iter_mut().zip(&x).zip(&drift) {
                *p = xi + h * di;
            }
            score.score_into(&trial, t_next, &mut drift_next)?;
            evals += 1;
            for ((xi, di), dn) in x.iter_mut().zip(&drift).zip(&drift_next) {
                *xi += 0.5 * h * (di - t_next * dn);
            }
        } else {
            for (xi, di) in x.iter_mut().zip(&drift) {
                *xi += h * di;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
    }

    Ok(FlowMapResult {
        x0: x,
        score_evaluations: evals,
        t_final: cfg.grid.last(),
    })
}

/// Solves the flow from every point in `starts`, in parallel, preserving order.
pub fn integrate_batch<S: ScoreField + ?Sized>(
    score: &S,
    starts: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<Vec<Vec<f64>>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            integrate_flow(score, x, cfg)
                .map(|r| r.x0)
                .map_err(|e| match e {
                    Error::Divergence { step } => Error::SampleDivergence { sample: i, step },
                    other => other,
                })
        })
        .collect()
}

/// Exact flow of `N(μ, Σ)` from `σ_max` to `t_end`:
/// `μ + U diag(√((λ_k + t_end²)/(λ_k + σ_max²))) Uᵀ (x_T − μ)`.
pub fn analytic_gaussian_flow(
    spec: &GaussianSpec,
    x_t: &[f64],
    sigma_max: f64,
    t_end: f64,
) -> Result<Vec<f64>> {
    check_dim(spec.dim(), x_t.len())?;
    if !(sigma_max >= t_end) || !(t_end >= 0.0) {
        return Err(invalid(format!(
            "analytic flow needs sigma_max >= t_end >= 0, got {sigma_max} and {t_end}"
        )));
    }
    if t_end == sigma_max {
        return Ok(x_t.to_vec());
    }
    let d = spec.dim();
    let eig = spec.eigen();
    let diff: Vec<f64> = x_t.iter().zip(spec.mean()).map(|(x, m)| x - m).collect();
    let mut w = vec![0.0; d];
    eig.project(&diff, &mut w);
    let (te2, tm2) = (t_end * t_end, sigma_max * sigma_max);
    for (wk, &lk) in w.iter_mut().zip(eig.values()) {
        *wk *= ((lk + te2) / (lk + tm2)).sqrt();
    }
    let mut out = vec![0.0; d];
    eig.unproject(&w, &mut out);
    for (o, m) in out.iter_mut().zip(spec.mean()) {
        *o += m;
    }
    Ok(out)
}
