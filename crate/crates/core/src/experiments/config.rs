use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::EXACT_ASSIGNMENT_LIMIT;
use crate::error::{invalid, Error, Result};
use crate::flow::{
    SolverConfig, SolverMethod, TimeGrid, DEFAULT_RHO, DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN,
};
use crate::gen_eval::ModelBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SampleEfficiency,
    Correlation,
    BiasVariance,
    #[serde(alias = "mtog")]
    MtogSweep,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SampleEfficiency => "sample-efficiency",
            Self::Correlation => "correlation",
            Self::BiasVariance => "bias-variance",
            Self::MtogSweep => "mtog-sweep",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample-efficiency" => Ok(Self::SampleEfficiency),
            "correlation" => Ok(Self::Correlation),
            "bias-variance" => Ok(Self::BiasVariance),
            "mtog" | "mtog-sweep" => Ok(Self::MtogSweep),
            other => Err(invalid(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Flow solver settings as they appear in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverFlags {
    pub method: SolverMethod,
    pub steps: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub rho: f64,
}

impl Default for SolverFlags {
    fn default() -> Self {
        Self {
            method: SolverMethod::Heun,
            steps: 64,
            sigma_max: DEFAULT_SIGMA_MAX,
            sigma_min: DEFAULT_SIGMA_MIN,
            rho: DEFAULT_RHO,
        }
    }
}

impl SolverFlags {
    pub fn to_solver(&self) -> Result<SolverConfig> {
        let grid = TimeGrid::edm(self.sigma_max, self.sigma_min, self.steps, self.rho)?;
        Ok(SolverConfig::new(self.method, grid))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    /// Mixture components per random GMM.
    pub components: usize,
    /// Monte-Carlo sample counts `M`.
    pub samples: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverFlags,
    /// Scale of random component means.
    pub mean_scale: f64,
    /// Correlation: every `k`-th trial compares a distribution with itself (0 = never).
    pub duplicate_every: usize,
    /// Correlation: keep duplicate pairs in the reported Pearson r.
    pub include_duplicates: bool,
    /// MtoG sweep: training-set sizes `N`.
    pub training_sizes: Vec<usize>,
    /// Bias-variance: size of each training set.
    pub train_size: usize,
    /// Bias-variance: number of independent training sets `J`.
    pub ensemble: usize,
    pub builder: ModelBuilder,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults_for(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            dim: 5,
            components: 5,
            samples: (7..=12).map(|k| 1usize << k).collect(),
            trials: 10,
            seed: 0,
            solver: SolverFlags::default(),
            mean_scale: 1.0,
            duplicate_every: 0,
            include_duplicates: false,
            training_sizes: vec![16, 64, 256, 1024],
            train_size: 64,
            ensemble: 2,
            builder: ModelBuilder::Empirical,
            output: None,
        };
        match experiment {
            ExperimentKind::SampleEfficiency => base,
            ExperimentKind::Correlation => Self {
                samples: vec![4096],
                trials: 100,
                ..base
            },
            ExperimentKind::BiasVariance => Self {
                samples: vec![64],
                ..base
            },
            ExperimentKind::MtogSweep => Self {
                samples: vec![256],
                ..base
            },
        }
    }

    /// Parses a JSON config. Missing fields take the defaults of the named
    /// experiment; unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text)?;
        let Value::Object(user) = user else {
            return Err(invalid("experiment config must be a JSON object"));
        };
        let kind: ExperimentKind = match user.get("experiment") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => return Err(invalid("experiment config needs an 'experiment' field")),
        };
        let Value::Object(mut merged) = serde_json::to_value(Self::defaults_for(kind))? else {
            unreachable!("config serializes to an object");
        };
        merged.extend(user);
        let cfg: Self = serde_json::from_value(Value::Object(merged))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(invalid(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        positive("dim", self.dim)?;
        positive("components", self.components)?;
        positive("trials", self.trials)?;
        positive("train_size", self.train_size)?;
        if self.samples.is_empty() || self.samples.contains(&0) {
            return Err(invalid("samples must be a nonempty list of positive counts"));
        }
        if self.training_sizes.is_empty() || self.training_sizes.contains(&0) {
            return Err(invalid("training_sizes must be a nonempty list of positive counts"));
        }
        if self.ensemble < 2 {
            return Err(invalid("ensemble needs at least 2 training sets"));
        }
        if !(self.mean_scale >= 0.0) || !self.mean_scale.is_finite() {
            return Err(invalid("mean_scale must be finite and nonnegative"));
        }
        let uses_w2 = matches!(
            self.experiment,
            ExperimentKind::SampleEfficiency | ExperimentKind::Correlation
        );
        if uses_w2 && self.max_samples() > EXACT_ASSIGNMENT_LIMIT {
            return Err(Error::CostGuard {
                count: self.max_samples(),
                limit: EXACT_ASSIGNMENT_LIMIT,
            });
        }
        if self.experiment == ExperimentKind::SampleEfficiency && self.samples.iter().any(|&m| m <= self.dim) {
            return Err(invalid("sample-efficiency needs more samples than dimensions to fit covariances"));
        }
        self.solver.to_solver()?;
        Ok(())
    }

    pub fn max_samples(&self) -> usize {
        self.samples.iter().copied().max().unwrap_or(0)
    }
}
