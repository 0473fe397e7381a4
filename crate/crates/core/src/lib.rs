//! Probability flow distance (PFD) between distributions.
//!
//! Each distribution is mapped through its own backward probability-flow ODE
//! from shared Gaussian noise; the PFD is the RMS distance between the two
//! images. The crate ships:
//!
//! - [`dist`]: Gaussian, Gaussian-mixture and empirical distributions with
//!   exact noised scores.
//! - [`flow`]: EDM time grids, Euler/Heun integration of the flow, and the
//!   closed-form Gaussian flow.
//! - [`pfd`]: the coupled Monte-Carlo estimator, descriptors, the Gaussian
//!   closed form and the sample-size planner.
//! - [`baselines`]: Gaussian W2/KL and sample-based W2.
//! - [`gen_eval`]: generalization, memorization, M-distance and bias-variance.
//! - [`experiments`]: reproducible synthetic studies and result tables.
//!
//! See the `examples/` directory for one runnable program per capability.

#![forbid(unsafe_code)]

pub mod baselines;
pub mod cli;
pub mod dist;
mod error;
pub mod experiments;
pub mod flow;
pub mod gen_eval;
pub mod linalg;
pub mod pfd;
pub mod rng;

pub use dist::{
    DistributionSpec, EmpiricalSpec, GaussianMixtureSpec, GaussianSpec, ScoreField, ZeroScore,
};
pub use error::{Error, Result};
pub use flow::{
    analytic_gaussian_flow, integrate_flow, FlowMapResult, NoiseSchedule, SolverConfig,
    SolverMethod, TimeGrid,
};
pub use pfd::{
    closed_form_gaussian_pfd, estimate_pfd, gronwall_gap_bound, sample_size_bound,
    CoupledNoiseSet, Descriptor, LipschitzProfile, PFDEstimate,
};
pub use rng::StreamKey;
