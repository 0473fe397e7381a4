mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::{diag, gmm};
use pfdist::baselines::gaussian_w2;
use pfdist::cli;
use pfdist::experiments::read_csv;
use pfdist::{closed_form_gaussian_pfd, DistributionSpec, GaussianSpec};
use serde_json::Value;

fn write_spec(dir: &Path, name: &str, spec: &DistributionSpec) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, spec.to_json().unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, Value) {
    let mut out = Vec::new();
    let code = cli::run(std::iter::once("pfdist").chain(args.iter().copied()), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let value = if text.trim().is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).unwrap()
    };
    (code, value)
}

fn shifted_pair(dir: &Path) -> (PathBuf, PathBuf) {
    let p = GaussianSpec::new(vec![3.0, 4.0], diag(&[1.0, 1.0])).unwrap();
    let q = GaussianSpec::new(vec![0.0, 0.0], diag(&[1.0, 1.0])).unwrap();
    (
        write_spec(dir, "p.json", &p.into()),
        write_spec(dir, "q.json", &q.into()),
    )
}

#[test]
fn estimate_reports_value_and_writes_per_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = shifted_pair(dir.path());
    let per = dir.path().join("per.csv");
    let (code, v) = run(&[
        "estimate",
        "--p",
        p.to_str().unwrap(),
        "--q",
        q.to_str().unwrap(),
        "--samples",
        "16",
        "--seed",
        "3",
        "--sigma-max",
        "800",
        "--steps",
        "128",
        "--per-sample-csv",
        per.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!((v["value"].as_f64().unwrap() - 5.0).abs() < 0.05);
    assert_eq!(v["M"], 16);
    assert_eq!(v["seed"], 3);
    assert!(v["halfwidth"].is_null());
    let lines = std::fs::read_to_string(&per).unwrap();
    assert_eq!(lines.lines().count(), 17);
}

#[test]
fn estimate_with_profile_reports_halfwidth() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = shifted_pair(dir.path());
    let (code, v) = run(&[
        "estimate", "--p", p.to_str().unwrap(), "--q", q.to_str().unwrap(), "--samples", "8",
        "--lipschitz", "1", "--score-gap", "0.5", "--tail-gap", "0.1", "--tail-time", "1",
    ]);
    assert_eq!(code, 0);
    assert!(v["halfwidth"].as_f64().unwrap() > 0.0);
}

#[test]
fn estimate_with_linear_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = shifted_pair(dir.path());
    let desc = dir.path().join("desc.json");
    std::fs::write(&desc, "[[1.0, 0.0]]").unwrap();
    let arg = format!("linear:{}", desc.display());
    let (code, v) = run(&[
        "estimate", "--p", p.to_str().unwrap(), "--q", q.to_str().unwrap(), "--samples", "8",
        "--sigma-max", "800", "--steps", "64", "--descriptor", &arg,
    ]);
    assert_eq!(code, 0);
    // only the first coordinate (shift 3) survives the projection
    assert!((v["value"].as_f64().unwrap() - 3.0).abs() < 0.05);
}

#[test]
fn baselines_closed_form_and_sampled() {
    let dir = tempfile::tempdir().unwrap();
    let a = GaussianSpec::new(vec![0.0, 1.0], diag(&[1.0, 2.0])).unwrap();
    let b = GaussianSpec::new(vec![1.0, 0.0], diag(&[3.0, 0.5])).unwrap();
    let pa = write_spec(dir.path(), "a.json", &a.clone().into());
    let pb = write_spec(dir.path(), "b.json", &b.clone().into());
    let (code, v) = run(&["baseline", "w2", "--p", pa.to_str().unwrap(), "--q", pb.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!((v["value"].as_f64().unwrap() - gaussian_w2(&a, &b).unwrap()).abs() < 1e-12);
    assert_eq!(v["method"], "closed-form");

    let (code, v) = run(&["baseline", "kl", "--p", pa.to_str().unwrap(), "--q", pb.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(v["value"].as_f64().unwrap() > 0.0);

    let (code, v) = run(&[
        "baseline", "w2", "--p", pa.to_str().unwrap(), "--q", pb.to_str().unwrap(), "--samples", "256",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["method"], "exact");
    assert!(v["value"].as_f64().unwrap() >= gaussian_w2(&a, &b).unwrap() * 0.8);

    // a starved Sinkhorn run is reported with its own exit code
    let (code, v) = run(&[
        "baseline", "w2", "--p", pa.to_str().unwrap(), "--q", pb.to_str().unwrap(), "--samples", "64",
        "--method", "entropic", "--reg", "0.01", "--max-iters", "1",
    ]);
    assert_eq!(code, cli::EXIT_INCOMPLETE);
    assert_eq!(v["converged"], false);
}

#[test]
fn closed_form_baselines_need_gaussians() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_spec(dir.path(), "m.json", &gmm(1, 2, 2).into());
    let mut out = Vec::new();
    let r = cli::run(["pfdist", "baseline", "w2", "--p", m.to_str().unwrap(), "--q", m.to_str().unwrap()], &mut out);
    assert!(r.is_err());
}

#[test]
fn plan_matches_library() {
    let (code, v) = run(&[
        "plan", "--lipschitz", "1", "--score-gap", "0.1", "--tail-gap", "0.1", "--tail-time", "1",
        "--gamma", "0.1", "--eta", "0.05",
    ]);
    assert_eq!(code, 0);
    let prof = pfdist::LipschitzProfile::new(1.0, 0.1, 0.1, 1.0).unwrap();
    assert_eq!(v["samples"].as_u64().unwrap(), pfdist::sample_size_bound(&prof, 0.1, 0.05).unwrap());
    assert!((v["kappa"].as_f64().unwrap() - 0.2297).abs() < 1e-4);
}

#[test]
fn eval_commands_on_a_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let atoms = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![-1.0, 0.5]];
    let data: DistributionSpec = gmm(4, 2, 2).into();
    let model: DistributionSpec = pfdist::EmpiricalSpec::new(atoms.clone()).unwrap().into();
    let scenario = serde_json::json!({
        "data": serde_json::from_str::<Value>(&data.to_json().unwrap()).unwrap(),
        "model": serde_json::from_str::<Value>(&model.to_json().unwrap()).unwrap(),
        "training_set": atoms,
        "samples": 16,
        "seed": 2,
        "solver": {"steps": 32},
    });
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, scenario.to_string()).unwrap();
    let s = path.to_str().unwrap();

    let (code, mem) = run(&["eval", "mem", "--scenario", s]);
    assert_eq!(code, 0);
    assert_eq!(mem["value"].as_f64().unwrap(), 0.0);
    let (_, gen) = run(&["eval", "gen", "--scenario", s]);
    assert!(gen["value"].as_f64().unwrap() > 0.0);
    let (_, md) = run(&["eval", "mdist", "--scenario", s]);
    assert!(md["value"].as_f64().unwrap() < 0.05);
}

#[test]
fn eval_bias_variance_over_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sets = dir.path().join("sets");
    std::fs::create_dir(&sets).unwrap();
    std::fs::write(sets.join("a.csv"), "0.0,0.0\n1.0,0.5\n").unwrap();
    std::fs::write(sets.join("b.csv"), "0.5,0.0\n-1.0,0.5\n2.0,2.0\n").unwrap();
    let data = write_spec(dir.path(), "data.json", &gmm(2, 2, 2).into());
    let (code, v) = run(&[
        "eval", "bias-variance", "--datasets", sets.to_str().unwrap(), "--builder", "kernel:0.3",
        "--data", data.to_str().unwrap(), "--samples", "16", "--steps", "24",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["ensemble_size"], 2);
    let gen = v["e_gen_sq_mean"].as_f64().unwrap();
    let sum = v["e_bias_sq"].as_f64().unwrap() + v["e_var"].as_f64().unwrap();
    assert!((gen - sum).abs() <= 1e-12 * gen);
}

#[test]
fn exp_writes_table_and_applies_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": "sample-efficiency", "solver": {"steps": 12}}"#).unwrap();
    let out = dir.path().join("se.csv");
    let (code, v) = run(&[
        "exp", "sample-efficiency", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--trials", "2", "--dim", "2", "--samples", "8,16", "--seed", "5",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["rows"], 12);
    let rows = read_csv(&out).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.seed == 5 && r.solver_fingerprint.contains("n=12")));

    // config for another experiment is refused
    let mut sink = Vec::new();
    assert!(cli::run(
        ["pfdist", "exp", "correlation", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &mut sink
    )
    .is_err());
}

#[test]
fn usage_errors_return_clap_exit_code() {
    let (code, _) = run(&["estimate", "--p", "x.json"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["exp", "nonsense"]);
    assert_eq!(code, 2);
}

#[test]
fn binary_runs_and_reports_errors() {
    let bin = env!("CARGO_BIN_EXE_pfdist");
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = shifted_pair(dir.path());
    let ok = Command::new(bin)
        .args(["estimate", "--p", p.to_str().unwrap(), "--q", q.to_str().unwrap(), "--samples", "4", "--steps", "16"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() > 4.0);

    let missing = Command::new(bin)
        .args(["estimate", "--p", "/nonexistent.json", "--q", q.to_str().unwrap(), "--samples", "4"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));
}

#[test]
fn closed_form_reference_for_cli_pair() {
    let p = GaussianSpec::new(vec![3.0, 4.0], diag(&[1.0, 1.0])).unwrap();
    let q = GaussianSpec::new(vec![0.0, 0.0], diag(&[1.0, 1.0])).unwrap();
    assert_eq!(closed_form_gaussian_pfd(&p, &q).unwrap(), 5.0);
}
