//! Synthetic studies with deterministic seeding and tabular output.
//!
//! Every study is a pure function of its [`ExperimentConfig`]. Trial `t` draws
//! all randomness from stream keys `(seed, experiment tag, t, purpose)`, and
//! rows are sorted before they are returned, so thread count and scheduling
//! never change the output.

mod config;
mod table;

use rayon::prelude::*;

pub use config::{ExperimentConfig, ExperimentKind, SolverFlags};
pub use table::{read_csv, read_json, OutputFormat, ResultRow, ResultTable, SCHEMA_VERSION};

use crate::baselines::{fit_gaussian, gaussian_kl, gaussian_w2, sample_w2, W2SampleConfig};
use crate::dist::random::{random_gaussian, random_gmm};
use crate::dist::{DistributionSpec, EmpiricalSpec};
use crate::error::{Error, Result};
use crate::flow::SolverConfig;
use crate::gen_eval::bias_variance;
use crate::linalg::sq_dist;
use crate::pfd::{
    coupled_squared_distances, finite_horizon_gaussian_pfd, descriptor_flows, CoupledNoiseSet,
    Descriptor,
};
use crate::rng::{tags, StreamKey};

// purpose coordinates inside a trial key
const SUB_PROBLEM: u64 = 0;
const SUB_NOISE: u64 = 1;
const SUB_SAMPLES_P: u64 = 2;
const SUB_SAMPLES_Q: u64 = 3;
const SUB_TRAIN: u64 = 4;
const SUB_DATASET: u64 = 1 << 32;
/// Trial coordinate reserved for objects shared by all trials.
const SHARED_TRIAL: u64 = u64::MAX;

type Measurement = (String, String, String, f64);

fn measure(key: &str, value: impl ToString, metric: &str, v: f64) -> Measurement {
    (key.to_owned(), value.to_string(), metric.to_owned(), v)
}

/// Runs the study named in `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.experiment {
        ExperimentKind::SampleEfficiency => run_sample_efficiency(cfg),
        ExperimentKind::Correlation => run_correlation(cfg),
        ExperimentKind::BiasVariance => run_bias_variance(cfg),
        ExperimentKind::MtogSweep => run_mtog_sweep(cfg),
    }
}

fn check_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(crate::error::invalid(format!(
            "config is for '{}', not '{}'",
            cfg.experiment, kind
        )));
    }
    cfg.validate()
}

fn trial_key(cfg: &ExperimentConfig, tag: u64, trial: usize) -> StreamKey {
    StreamKey::new(cfg.seed).with_tag(tag).with_trial(trial as u64)
}

fn flaggable(e: &Error) -> bool {
    matches!(e, Error::Divergence { .. } | Error::SampleDivergence { .. })
}

/// Runs `trial` for every index in parallel and gathers the rows. Flow
/// divergence turns into a flagged row; any other error aborts the run.
fn run_trials<F>(cfg: &ExperimentConfig, solver: &SolverConfig, trial: F) -> Result<ResultTable>
where
    F: Fn(usize) -> Result<Vec<Measurement>> + Sync,
{
    let outcomes: Vec<Result<Vec<Measurement>>> = (0..cfg.trials).into_par_iter().map(&trial).collect();
    let mut table = ResultTable::new(cfg.experiment.name(), cfg.seed, solver.fingerprint());
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(rows) => {
                for (k, v, m, x) in rows {
                    table.push(Some(t), &k, v, &m, x);
                }
            }
            Err(e) if flaggable(&e) => {
                table.push(Some(t), "error", e.to_string(), "flow_divergence", 1.0);
                table.failed_trials.push(t);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

fn sorted_samples(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut ms = cfg.samples.clone();
    ms.sort_unstable();
    ms.dedup();
    ms
}

/// RMS of the first `m` coupled distances, for every `m` in `counts`.
fn prefix_rms(sq: &[f64], counts: &[usize]) -> Vec<f64> {
    counts
        .iter()
        .map(|&m| (sq[..m].iter().sum::<f64>() / m as f64).sqrt())
        .collect()
}

/// Relative errors of PFD, sample-W2 and plug-in KL against closed forms on
/// random Gaussian pairs, for each sample count. The PFD reference is the
/// closed form at the solver's `σ_max`, not the `σ_max → ∞` limit, which
/// differs from it by about 1% at `σ_max = 80`. The noise points and the
/// data samples at a smaller `M` are prefixes of those at a larger `M`.
pub fn run_sample_efficiency(cfg: &ExperimentConfig) -> Result<ResultTable> {
    check_kind(cfg, ExperimentKind::SampleEfficiency)?;
    let solver = cfg.solver.to_solver()?;
    let counts = sorted_samples(cfg);
    let m_max = cfg.max_samples();
    let mut table = run_trials(cfg, &solver, |t| {
        let key = trial_key(cfg, tags::SAMPLE_EFFICIENCY, t);
        let mut rng = key.with_sub(SUB_PROBLEM).rng(0);
        let p = random_gaussian(cfg.dim, cfg.mean_scale, &mut rng)?;
        let q = random_gaussian(cfg.dim, cfg.mean_scale, &mut rng)?;
        // exact PFD of the finite-horizon flow the estimator integrates
        let truth_pfd = finite_horizon_gaussian_pfd(&p, &q, cfg.solver.sigma_max)?;
        let truth_w2 = gaussian_w2(&p, &q)?;
        let truth_kl = gaussian_kl(&p, &q)?;

        let noise = CoupledNoiseSet::with_key(key.with_sub(SUB_NOISE), m_max, cfg.solver.sigma_max, cfg.dim)?;
        let sq = coupled_squared_distances(&p, &q, &noise, &solver, &Descriptor::Identity)?;
        let pfd = prefix_rms(&sq, &counts);

        let xs = DistributionSpec::from(p).sample(m_max, &key.with_sub(SUB_SAMPLES_P))?;
        let ys = DistributionSpec::from(q).sample(m_max, &key.with_sub(SUB_SAMPLES_Q))?;
        let rel = |est: f64, truth: f64| (est - truth).abs() / truth;

        let mut rows = Vec::with_capacity(3 * counts.len());
        for (&m, &pfd_m) in counts.iter().zip(&pfd) {
            let w2 = sample_w2(&xs[..m], &ys[..m], &W2SampleConfig::exact())?.value;
            let kl = gaussian_kl(&fit_gaussian(&xs[..m])?, &fit_gaussian(&ys[..m])?)?;
            rows.push(measure("samples", m, "pfd_rel_error", rel(pfd_m, truth_pfd)));
            rows.push(measure("samples", m, "w2_rel_error", rel(w2, truth_w2)));
            rows.push(measure("samples", m, "kl_rel_error", rel(kl, truth_kl)));
        }
        Ok(rows)
    })?;
    table.sort();
    Ok(table)
}

/// Pearson correlation coefficient; `None` for fewer than two points or a
/// constant input.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// PFD and sample-W2 between random GMM pairs, with the Pearson r across
/// trials appended as summary rows (`trial` empty).
pub fn run_correlation(cfg: &ExperimentConfig) -> Result<ResultTable> {
    check_kind(cfg, ExperimentKind::Correlation)?;
    let solver = cfg.solver.to_solver()?;
    let counts = sorted_samples(cfg);
    let m_max = cfg.max_samples();
    let is_duplicate = |t: usize| cfg.duplicate_every > 0 && t % cfg.duplicate_every == cfg.duplicate_every - 1;
    let mut table = run_trials(cfg, &solver, |t| {
        let key = trial_key(cfg, tags::CORRELATION, t);
        let mut rng = key.with_sub(SUB_PROBLEM).rng(0);
        let p = random_gmm(cfg.components, cfg.dim, cfg.mean_scale, &mut rng)?;
        let q = if is_duplicate(t) {
            p.clone()
        } else {
            random_gmm(cfg.components, cfg.dim, cfg.mean_scale, &mut rng)?
        };
        let noise = CoupledNoiseSet::with_key(key.with_sub(SUB_NOISE), m_max, cfg.solver.sigma_max, cfg.dim)?;
        let sq = coupled_squared_distances(&p, &q, &noise, &solver, &Descriptor::Identity)?;
        let pfd = prefix_rms(&sq, &counts);
        let xs = DistributionSpec::from(p).sample(m_max, &key.with_sub(SUB_SAMPLES_P))?;
        let ys = DistributionSpec::from(q).sample(m_max, &key.with_sub(SUB_SAMPLES_Q))?;

        let mut rows = vec![measure("pair", "-", "duplicate", if is_duplicate(t) { 1.0 } else { 0.0 })];
        for (&m, &pfd_m) in counts.iter().zip(&pfd) {
            let w2 = sample_w2(&xs[..m], &ys[..m], &W2SampleConfig::exact())?.value;
            rows.push(measure("samples", m, "pfd", pfd_m));
            rows.push(measure("samples", m, "w2", w2));
        }
        Ok(rows)
    })?;
    for &m in &counts {
        if let Some(r) = correlation_from_rows(&table.rows, m, cfg.include_duplicates) {
            table.push(None, "samples", m, "pearson_r", r);
        }
    }
    table.sort();
    Ok(table)
}

/// Pearson r between the `pfd` and `w2` rows at sample count `m`, recomputed
/// from emitted rows. Trials flagged as duplicates are skipped unless
/// `include_duplicates` is set.
pub fn correlation_from_rows(rows: &[ResultRow], m: usize, include_duplicates: bool) -> Option<f64> {
    use std::collections::BTreeMap;
    let m = m.to_string();
    let mut pairs: BTreeMap<usize, (Option<f64>, Option<f64>, bool)> = BTreeMap::new();
    for r in rows {
        let Some(t) = r.trial else { continue };
        let e = pairs.entry(t).or_insert((None, None, false));
        match r.metric.as_str() {
            "duplicate" => e.2 = r.value != 0.0,
            "pfd" if r.param_value == m => e.0 = Some(r.value),
            "w2" if r.param_value == m => e.1 = Some(r.value),
            _ => {}
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .values()
        .filter(|(_, _, dup)| include_duplicates || !dup)
        .filter_map(|&(a, b, _)| Some((a?, b?)))
        .unzip();
    pearson(&xs, &ys)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn rms_between(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let total: f64 = a.iter().zip(b).map(|(x, y)| sq_dist(x, y)).sum();
    (total / a.len() as f64).sqrt()
}

/// Memorization-to-generalization sweep: a fixed teacher GMM, nested training
/// sets of each size `N` per seed, and the student built from each set.
/// Emits `e_gen`, `e_mem` and `m_distance` per (seed, N) plus per-N medians.
pub fn run_mtog_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    check_kind(cfg, ExperimentKind::MtogSweep)?;
    let solver = cfg.solver.to_solver()?;
    let shared = StreamKey::new(cfg.seed).with_tag(tags::MTOG).with_trial(SHARED_TRIAL);
    let teacher: DistributionSpec = random_gmm(
        cfg.components,
        cfg.dim,
        cfg.mean_scale,
        &mut shared.with_sub(SUB_PROBLEM).rng(0),
    )?
    .into();
    let m = cfg.samples[0];
    let id = Descriptor::Identity;
    let mut table = run_trials(cfg, &solver, |t| {
        let key = trial_key(cfg, tags::MTOG, t);
        let noise = CoupledNoiseSet::with_key(key.with_sub(SUB_NOISE), m, cfg.solver.sigma_max, cfg.dim)?;
        let teacher_flows = descriptor_flows(&teacher, &noise, &solver, &id)?;
        let n_max = cfg.training_sizes.iter().copied().max().unwrap_or(0);
        let pool = teacher.sample(n_max, &key.with_sub(SUB_TRAIN))?;
        let mut rows = Vec::new();
        for &n in &cfg.training_sizes {
            let train = EmpiricalSpec::new(pool[..n].to_vec())?.with_sigma_min(cfg.solver.sigma_min)?;
            let model = cfg.builder.build(&train)?;
            let model_flows = descriptor_flows(&model, &noise, &solver, &id)?;
            let e_mem = match &model {
                DistributionSpec::Empirical(e) if *e == train => 0.0,
                _ => rms_between(&model_flows, &descriptor_flows(&train, &noise, &solver, &id)?),
            };
            let m_dist = model_flows
                .iter()
                .map(|g| train.nearest(g).1)
                .sum::<f64>()
                / model_flows.len() as f64;
            rows.push(measure("n_train", n, "e_gen", rms_between(&model_flows, &teacher_flows)));
            rows.push(measure("n_train", n, "e_mem", e_mem));
            rows.push(measure("n_train", n, "m_distance", m_dist));
        }
        Ok(rows)
    })?;
    let mut sizes = cfg.training_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    for &n in &sizes {
        for metric in ["e_gen", "e_mem", "m_distance"] {
            let mut vals: Vec<f64> = table
                .metric(metric)
                .filter(|r| r.param_value == n.to_string() && r.trial.is_some())
                .map(|r| r.value)
                .collect();
            if !vals.is_empty() {
                let med = median(&mut vals);
                table.push(None, "n_train", n, &format!("median_{metric}"), med);
            }
        }
    }
    table.sort();
    Ok(table)
}

/// Bias-variance split of `E_gen²` over `J` independent training sets drawn
/// from a random teacher GMM per trial.
pub fn run_bias_variance(cfg: &ExperimentConfig) -> Result<ResultTable> {
    check_kind(cfg, ExperimentKind::BiasVariance)?;
    let solver = cfg.solver.to_solver()?;
    let m = cfg.samples[0];
    let mut table = run_trials(cfg, &solver, |t| {
        let key = trial_key(cfg, tags::BIAS_VARIANCE, t);
        let teacher: DistributionSpec =
            random_gmm(cfg.components, cfg.dim, cfg.mean_scale, &mut key.with_sub(SUB_PROBLEM).rng(0))?.into();
        let datasets = (0..cfg.ensemble)
            .map(|j| {
                let atoms = teacher.sample(cfg.train_size, &key.with_sub(SUB_DATASET + j as u64))?;
                EmpiricalSpec::new(atoms)?.with_sigma_min(cfg.solver.sigma_min)
            })
            .collect::<Result<Vec<_>>>()?;
        let noise = CoupledNoiseSet::with_key(key.with_sub(SUB_NOISE), m, cfg.solver.sigma_max, cfg.dim)?;
        let rep = bias_variance(
            &datasets,
            |d| cfg.builder.build(d),
            &teacher,
            &noise,
            &solver,
            &Descriptor::Identity,
        )?;
        let j = cfg.ensemble;
        Ok(vec![
            measure("ensemble", j, "e_gen_sq_mean", rep.e_gen_sq_mean),
            measure("ensemble", j, "e_bias_sq", rep.e_bias_sq),
            measure("ensemble", j, "e_var", rep.e_var),
            measure("ensemble", j, "residual", rep.residual),
        ])
    })?;
    table.sort();
    Ok(table)
}
