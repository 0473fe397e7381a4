//! Runs a reduced correlation study and writes the result table as CSV and JSON.

use pfdist::experiments::{self, ExperimentConfig, ExperimentKind, OutputFormat};

fn main() -> pfdist::Result<()> {
    let mut cfg = ExperimentConfig::defaults_for(ExperimentKind::Correlation);
    cfg.trials = 12;
    cfg.samples = vec![64, 256];
    cfg.dim = 3;
    cfg.seed = 42;
    cfg.duplicate_every = 6;

    let table = experiments::run(&cfg)?;
    for row in table.metric("pearson_r") {
        println!("M={:<4} pearson r = {:.4}", row.param_value, row.value);
    }

    let dir = std::env::temp_dir();
    let csv = dir.join("pfdist-correlation.csv");
    let json = dir.join("pfdist-correlation.json");
    table.emit(OutputFormat::Csv, &csv)?;
    table.emit(OutputFormat::Json, &json)?;
    println!("{} rows -> {} and {}", table.len(), csv.display(), json.display());
    println!("config:\n{}", cfg.to_json()?);
    Ok(())
}
