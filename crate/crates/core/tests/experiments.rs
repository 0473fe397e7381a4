use std::collections::BTreeSet;

use pfdist::experiments::{
    correlation_from_rows, pearson, read_csv, read_json, run, ExperimentConfig, ExperimentKind,
    OutputFormat, ResultTable,
};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults_for(kind);
    cfg.dim = 2;
    cfg.components = 2;
    cfg.trials = 4;
    cfg.seed = 9;
    cfg.solver.steps = 16;
    match kind {
        ExperimentKind::SampleEfficiency => cfg.samples = vec![16, 32, 64],
        ExperimentKind::Correlation => cfg.samples = vec![32, 64],
        ExperimentKind::BiasVariance => {
            cfg.samples = vec![16];
            cfg.train_size = 8;
            cfg.ensemble = 3;
        }
        ExperimentKind::MtogSweep => {
            cfg.samples = vec![16];
            cfg.training_sizes = vec![2, 8, 32];
        }
    }
    cfg
}

/// Two-pass Pearson correlation, written independently of the library.
fn reference_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn sample_efficiency_table_shape() {
    let cfg = small(ExperimentKind::SampleEfficiency);
    let table = run(&cfg).unwrap();
    assert!(table.completed());
    assert_eq!(table.len(), cfg.trials * cfg.samples.len() * 3);
    let metrics: BTreeSet<&str> = table.rows.iter().map(|r| r.metric.as_str()).collect();
    assert_eq!(
        metrics,
        ["kl_rel_error", "pfd_rel_error", "w2_rel_error"].into_iter().collect()
    );
    assert!(table.rows.iter().all(|r| r.value.is_finite() && r.value >= 0.0));
    assert!(table.rows.iter().all(|r| r.seed == 9 && r.experiment == "sample-efficiency"));
    assert!(table.rows.iter().all(|r| r.solver_fingerprint == table.solver_fingerprint));
}

#[test]
fn default_sample_efficiency_config_has_expected_row_count() {
    let cfg = ExperimentConfig::defaults_for(ExperimentKind::SampleEfficiency);
    assert_eq!(cfg.trials * cfg.samples.len() * 3, 180);
    assert_eq!(cfg.dim, 5);
    assert_eq!(cfg.max_samples(), 4096);
}

#[test]
fn csv_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let table = run(&small(ExperimentKind::SampleEfficiency)).unwrap();
    let csv_path = dir.path().join("t.csv");
    let json_path = dir.path().join("t.json");
    table.emit(OutputFormat::Csv, &csv_path).unwrap();
    table.emit(OutputFormat::Json, &json_path).unwrap();
    assert_eq!(read_csv(&csv_path).unwrap(), table.rows);
    assert_eq!(read_json(&json_path).unwrap(), table.rows);
    let header = std::fs::read_to_string(&csv_path).unwrap();
    assert!(header.starts_with("experiment,trial,param_key,param_value,metric,value,seed,solver_fingerprint\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [
        ExperimentKind::SampleEfficiency,
        ExperimentKind::Correlation,
        ExperimentKind::BiasVariance,
        ExperimentKind::MtogSweep,
    ] {
        let cfg = small(kind);
        let a = dir.path().join(format!("{kind}-a.csv"));
        let b = dir.path().join(format!("{kind}-b.csv"));
        run(&cfg).unwrap().emit(OutputFormat::Csv, &a).unwrap();
        run(&cfg).unwrap().emit(OutputFormat::Csv, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{kind}");
    }
}

#[test]
fn different_seeds_change_the_output() {
    let mut cfg = small(ExperimentKind::Correlation);
    let a = run(&cfg).unwrap();
    cfg.seed += 1;
    let b = run(&cfg).unwrap();
    assert_ne!(a.rows, b.rows);
}

#[test]
fn correlation_summary_matches_recomputation_from_csv() {
    let mut cfg = small(ExperimentKind::Correlation);
    cfg.trials = 8;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corr.csv");
    run(&cfg).unwrap().emit(OutputFormat::Csv, &path).unwrap();
    let rows = read_csv(&path).unwrap();
    for m in &cfg.samples {
        let m_str = m.to_string();
        let pick = |metric: &str| -> Vec<f64> {
            let mut v: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.trial.is_some() && r.metric == metric && r.param_value == m_str)
                .map(|r| (r.trial.unwrap(), r.value))
                .collect();
            v.sort_by_key(|p| p.0);
            v.into_iter().map(|p| p.1).collect()
        };
        let (pfd, w2) = (pick("pfd"), pick("w2"));
        assert_eq!(pfd.len(), 8);
        let summary = rows
            .iter()
            .find(|r| r.trial.is_none() && r.metric == "pearson_r" && r.param_value == m_str)
            .unwrap()
            .value;
        assert!((summary - reference_pearson(&pfd, &w2)).abs() <= 1e-12);
    }
}

#[test]
fn duplicate_pairs_are_flagged_and_excluded() {
    let mut cfg = small(ExperimentKind::Correlation);
    cfg.trials = 9;
    cfg.duplicate_every = 3;
    let table = run(&cfg).unwrap();
    let dups: Vec<usize> = table
        .metric("duplicate")
        .filter(|r| r.value == 1.0)
        .map(|r| r.trial.unwrap())
        .collect();
    assert_eq!(dups.len(), 3);
    for t in &dups {
        let pfd = table
            .metric("pfd")
            .find(|r| r.trial == Some(*t))
            .unwrap()
            .value;
        assert_eq!(pfd, 0.0);
    }
    let m = *cfg.samples.last().unwrap();
    let excluded = correlation_from_rows(&table.rows, m, false).unwrap();
    let included = correlation_from_rows(&table.rows, m, true).unwrap();
    assert_ne!(excluded, included);
    let reported = table
        .metric("pearson_r")
        .find(|r| r.param_value == m.to_string())
        .unwrap()
        .value;
    assert_eq!(reported, excluded);
}

#[test]
fn mtog_and_bias_variance_emit_expected_metrics() {
    let mt = run(&small(ExperimentKind::MtogSweep)).unwrap();
    for metric in ["e_gen", "e_mem", "m_distance", "median_e_gen", "median_e_mem"] {
        assert!(mt.metric(metric).next().is_some(), "missing {metric}");
    }
    // the empirical student memorizes its training set exactly
    assert!(mt.metric("e_mem").all(|r| r.value == 0.0));

    let bv = run(&small(ExperimentKind::BiasVariance)).unwrap();
    for r in bv.metric("residual") {
        let gen = bv
            .metric("e_gen_sq_mean")
            .find(|g| g.trial == r.trial)
            .unwrap()
            .value;
        assert!(r.value.abs() <= 1e-12 * gen);
    }
}

#[test]
fn empty_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let table = ResultTable::new("x", 0, "fp".into());
    assert!(table.emit(OutputFormat::Csv, &dir.path().join("x.csv")).is_err());
}

#[test]
fn config_parsing() {
    let cfg = ExperimentConfig::from_json(r#"{"experiment": "correlation", "trials": 7}"#).unwrap();
    assert_eq!(cfg.trials, 7);
    assert_eq!(cfg.samples, vec![4096]);
    assert!(ExperimentConfig::from_json(r#"{"trials": 7}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"experiment": "correlation", "bogus": 1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"experiment": "correlation", "samples": [8192]}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"experiment": "bias-variance", "ensemble": 1}"#).is_err());
    let round = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
    assert_eq!(round, cfg);
}

#[test]
fn pearson_edge_cases() {
    assert_eq!(pearson(&[1.0], &[2.0]), None);
    assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
    let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap();
    assert!((r - reference_pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5])).abs() < 1e-15);
}
