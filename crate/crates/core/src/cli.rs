//! Command-line front end. `pfdist --help` lists the subcommands; every
//! command prints one JSON document on stdout.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::{fit_gaussian, gaussian_kl, gaussian_w2, sample_w2, W2SampleConfig};
use crate::dist::{DistributionSpec, EmpiricalSpec};
use crate::error::{invalid, Error, Result};
use crate::experiments::{self, ExperimentConfig, ExperimentKind, OutputFormat};
use crate::flow::{
    SolverConfig, SolverMethod, TimeGrid, DEFAULT_RHO, DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN,
    DEFAULT_STEPS,
};
use crate::gen_eval::{self, EvaluationScenario, ModelBuilder};
use crate::linalg::matrix_from_rows;
use crate::pfd::{
    estimate_pfd_with, gronwall_gap_bound, sample_size_bound, CoupledNoiseSet, Descriptor,
    EstimateOptions, LipschitzProfile,
};
use crate::rng::StreamKey;

/// Exit code when an experiment finished with flagged (failed) trials.
pub const EXIT_INCOMPLETE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pfdist", version, about = "Probability flow distance between distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo PFD between two distribution specs.
    Estimate(EstimateArgs),
    /// Gaussian closed forms or sample-based W2 / plug-in KL.
    Baseline {
        #[arg(value_enum)]
        metric: BaselineMetric,
        #[command(flatten)]
        args: BaselineArgs,
    },
    /// Sample size from the Hoeffding/Grönwall bound.
    Plan(PlanArgs),
    /// Generalization, memorization, M-distance and bias-variance.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Synthetic studies writing a result table.
    Exp {
        #[arg(value_parser = parse_kind)]
        experiment: ExperimentKind,
        #[command(flatten)]
        args: ExpArgs,
    },
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_SIGMA_MAX)]
    sigma_max: f64,
    #[arg(long, default_value_t = DEFAULT_SIGMA_MIN)]
    sigma_min: f64,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    #[arg(long, default_value = "heun", value_parser = parse_method)]
    solver: SolverMethod,
}

fn parse_method(s: &str) -> std::result::Result<SolverMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl SolverArgs {
    fn to_solver(&self) -> Result<SolverConfig> {
        let grid = TimeGrid::edm(self.sigma_max, self.sigma_min, self.steps, self.rho)?;
        Ok(SolverConfig::new(self.solver, grid))
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// `identity` or `linear:<file>` with a JSON array of matrix rows.
    #[arg(long, default_value = "identity")]
    descriptor: String,
    /// Write the per-sample squared distances to this CSV file.
    #[arg(long)]
    per_sample_csv: Option<PathBuf>,
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Score Lipschitz constant L; enables the concentration halfwidth.
    #[arg(long, requires_all = ["score_gap", "tail_gap", "tail_time"])]
    lipschitz: Option<f64>,
    #[arg(long)]
    score_gap: Option<f64>,
    #[arg(long)]
    tail_gap: Option<f64>,
    #[arg(long)]
    tail_time: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
}

impl ProfileArgs {
    fn profile(&self) -> Result<Option<LipschitzProfile>> {
        match (self.lipschitz, self.score_gap, self.tail_gap, self.tail_time) {
            (Some(l), Some(e), Some(x), Some(t)) => Ok(Some(LipschitzProfile::new(l, e, x, t)?)),
            (None, ..) => Ok(None),
            _ => Err(invalid("--lipschitz needs --score-gap, --tail-gap and --tail-time")),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineMetric {
    W2,
    Kl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum W2MethodArg {
    Exact,
    Entropic,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
    /// Sample count per side; omit for the Gaussian closed form.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    method: W2MethodArg,
    /// Entropic regularisation.
    #[arg(long, default_value_t = 0.05)]
    reg: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    lipschitz: f64,
    #[arg(long)]
    score_gap: f64,
    #[arg(long)]
    tail_gap: f64,
    #[arg(long)]
    tail_time: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// E_gen = PFD(model, data).
    Gen(ScenarioArgs),
    /// E_mem = PFD(model, training set).
    Mem(ScenarioArgs),
    /// Mean distance from model generations to the nearest training atom.
    Mdist(ScenarioArgs),
    /// Bias-variance split of E_gen² over a directory of training sets.
    BiasVariance(BiasVarianceArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Debug, Args)]
struct BiasVarianceArgs {
    /// Directory of training sets (`*.json` empirical specs or `*.csv` atom rows).
    #[arg(long)]
    datasets: PathBuf,
    /// `empirical` or `kernel:<h>`.
    #[arg(long, default_value = "empirical")]
    builder: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct ExpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    components: Option<usize>,
    /// Comma-separated sample counts.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// On-disk evaluation scenario.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub data: DistributionSpec,
    pub model: DistributionSpec,
    /// Training atoms, one row each.
    pub training_set: Vec<Vec<f64>>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: experiments::SolverFlags,
    /// Rows of a linear descriptor matrix; identity when absent.
    #[serde(default)]
    pub descriptor: Option<Vec<Vec<f64>>>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<EvaluationScenario> {
        let dim = self.data.dim();
        let training_set = EmpiricalSpec::new(self.training_set)?.with_sigma_min(self.solver.sigma_min)?;
        let descriptor = match self.descriptor {
            None => Descriptor::Identity,
            Some(rows) => Descriptor::linear(matrix_from_rows(&rows)?)?,
        };
        EvaluationScenario::new(
            self.data,
            self.model,
            training_set,
            CoupledNoiseSet::new(self.seed, self.samples, self.solver.sigma_max, dim)?,
            self.solver.to_solver()?,
            descriptor,
        )
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_descriptor(s: &str) -> Result<Descriptor> {
    if s == "identity" {
        return Ok(Descriptor::Identity);
    }
    let Some(file) = s.strip_prefix("linear:") else {
        return Err(invalid(format!("unknown descriptor '{s}'; use identity or linear:<file>")));
    };
    let rows: Vec<Vec<f64>> = read_json(Path::new(file))?;
    Descriptor::linear(matrix_from_rows(&rows)?)
}

fn load_atoms_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    r.records()
        .map(|rec| {
            rec?.iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        message: format!("not a number: '{f}'"),
                    })
                })
                .collect()
        })
        .collect()
}

/// Training sets from a directory, in file-name order.
pub fn load_datasets(dir: &Path) -> Result<Vec<EmpiricalSpec>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "csv")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            if p.extension().and_then(|e| e.to_str()) == Some("csv") {
                EmpiricalSpec::new(load_atoms_csv(p)?)
            } else {
                match DistributionSpec::load(p)? {
                    DistributionSpec::Empirical(e) => Ok(e),
                    _ => Err(Error::Parse {
                        path: p.clone(),
                        message: "training set must be an empirical spec".into(),
                    }),
                }
            }
        })
        .collect()
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

/// Parses `args` (including the program name) and runs the command, writing
/// JSON to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            e.print().ok();
            return Ok(code);
        }
    };
    match cli.command {
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Baseline { metric, args } => cmd_baseline(metric, args, out),
        Command::Plan(a) => cmd_plan(a, out),
        Command::Eval(e) => cmd_eval(e, out),
        Command::Exp { experiment, args } => cmd_exp(experiment, args, out),
    }
}

fn cmd_estimate(a: EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let p = DistributionSpec::load(&a.p)?;
    let q = DistributionSpec::load(&a.q)?;
    let solver = a.solver.to_solver()?;
    let descriptor = parse_descriptor(&a.descriptor)?;
    let noise = CoupledNoiseSet::new(a.seed, a.samples, solver.grid.sigma_max(), p.dim())?;
    let opts = EstimateOptions {
        profile: a.profile.profile()?,
        eta: a.profile.eta,
    };
    let est = estimate_pfd_with(&p, &q, &noise, &solver, &descriptor, &opts)?;
    if let Some(path) = &a.per_sample_csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "squared_distance"])?;
        for (i, d) in est.squared_distances.iter().enumerate() {
            w.write_record([i.to_string(), d.to_string()])?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    write_json(
        out,
        &json!({
            "value": est.value,
            "M": est.samples,
            "seed": est.seed,
            "solver": est.solver,
            "halfwidth": est.concentration_halfwidth,
            "per_sample_file": a.per_sample_csv,
        }),
    )?;
    Ok(0)
}

fn cmd_baseline(metric: BaselineMetric, a: BaselineArgs, out: &mut dyn Write) -> Result<i32> {
    let p = DistributionSpec::load(&a.p)?;
    let q = DistributionSpec::load(&a.q)?;
    let (value, method) = match a.samples {
        None => {
            let (Some(gp), Some(gq)) = (p.as_gaussian(), q.as_gaussian()) else {
                return Err(invalid("closed-form baselines need Gaussian specs; pass --samples"));
            };
            match metric {
                BaselineMetric::W2 => (gaussian_w2(gp, gq)?, "closed-form"),
                BaselineMetric::Kl => (gaussian_kl(gp, gq)?, "closed-form"),
            }
        }
        Some(m) => {
            let root = StreamKey::new(a.seed);
            let xs = p.sample(m, &root.with_sub(0))?;
            let ys = q.sample(m, &root.with_sub(1))?;
            match metric {
                BaselineMetric::W2 => {
                    let cfg = match a.method {
                        W2MethodArg::Exact => W2SampleConfig::exact(),
                        W2MethodArg::Entropic => W2SampleConfig::entropic(a.reg, a.max_iters)?,
                    };
                    let est = sample_w2(&xs, &ys, &cfg)?;
                    if !est.converged {
                        write_json(out, &json!({"value": est.value, "method": est.method, "converged": false}))?;
                        return Ok(EXIT_INCOMPLETE);
                    }
                    (est.value, est.method)
                }
                BaselineMetric::Kl => (gaussian_kl(&fit_gaussian(&xs)?, &fit_gaussian(&ys)?)?, "plug-in"),
            }
        }
    };
    write_json(out, &json!({"value": value, "method": method}))?;
    Ok(0)
}

fn cmd_plan(a: PlanArgs, out: &mut dyn Write) -> Result<i32> {
    let profile = LipschitzProfile::new(a.lipschitz, a.score_gap, a.tail_gap, a.tail_time)?;
    let m = sample_size_bound(&profile, a.gamma, a.eta)?;
    write_json(
        out,
        &json!({"kappa": gronwall_gap_bound(&profile), "samples": m, "gamma": a.gamma, "eta": a.eta}),
    )?;
    Ok(0)
}

fn cmd_eval(e: EvalCommand, out: &mut dyn Write) -> Result<i32> {
    let scenario = |args: &ScenarioArgs| -> Result<EvaluationScenario> {
        let file: ScenarioFile = read_json(&args.scenario)?;
        file.into_scenario()
    };
    match e {
        EvalCommand::Gen(a) => {
            let est = gen_eval::generalization_error(&scenario(&a)?)?;
            write_json(out, &json!({"metric": "e_gen", "value": est.value, "M": est.samples, "solver": est.solver}))?;
        }
        EvalCommand::Mem(a) => {
            let est = gen_eval::memorization_error(&scenario(&a)?)?;
            write_json(out, &json!({"metric": "e_mem", "value": est.value, "M": est.samples, "solver": est.solver}))?;
        }
        EvalCommand::Mdist(a) => {
            let s = scenario(&a)?;
            let value = gen_eval::m_distance(&s)?;
            write_json(out, &json!({"metric": "m_distance", "value": value, "M": s.noise.len()}))?;
        }
        EvalCommand::BiasVariance(a) => {
            let builder: ModelBuilder = a.builder.parse()?;
            let data = DistributionSpec::load(&a.data)?;
            let solver = a.solver.to_solver()?;
            let datasets = load_datasets(&a.datasets)?
                .into_iter()
                .map(|d| d.with_sigma_min(a.solver.sigma_min))
                .collect::<Result<Vec<_>>>()?;
            let noise = CoupledNoiseSet::new(a.seed, a.samples, a.solver.sigma_max, data.dim())?;
            let rep = gen_eval::bias_variance(
                &datasets,
                |d| builder.build(d),
                &data,
                &noise,
                &solver,
                &Descriptor::Identity,
            )?;
            write_json(out, &serde_json::to_value(rep)?)?;
        }
    }
    Ok(0)
}

fn cmd_exp(kind: ExperimentKind, a: ExpArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &a.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if cfg.experiment != kind {
                return Err(invalid(format!(
                    "{} configures '{}', not '{}'",
                    path.display(),
                    cfg.experiment,
                    kind
                )));
            }
            cfg
        }
        None => ExperimentConfig::defaults_for(kind),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.dim {
        cfg.dim = v;
    }
    if let Some(v) = a.components {
        cfg.components = v;
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.out {
        cfg.output = Some(v);
    }
    cfg.validate()?;
    let path = cfg
        .output
        .clone()
        .ok_or_else(|| invalid("no output path: pass --out or set 'output' in the config"))?;
    let format = a.format.unwrap_or_else(|| {
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            OutputFormat::Json
        } else {
            OutputFormat::Csv
        }
    });
    let table = experiments::run(&cfg)?;
    table.emit(format, &path)?;
    write_json(
        out,
        &json!({
            "experiment": table.experiment,
            "rows": table.len(),
            "out": path,
            "seed": table.seed,
            "solver": table.solver_fingerprint,
            "failed_trials": table.failed_trials,
        }),
    )?;
    Ok(if table.completed() { 0 } else { EXIT_INCOMPLETE })
}
