use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One emitted measurement. `trial` is empty for run-level summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub trial: Option<usize>,
    pub param_key: String,
    pub param_value: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
    pub solver_fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(invalid(format!("unknown output format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub solver_fingerprint: String,
    pub rows: Vec<ResultRow>,
    /// Trials that ended in a flagged failure (flow divergence).
    pub failed_trials: Vec<usize>,
}

impl ResultTable {
    pub fn new(experiment: &str, seed: u64, solver_fingerprint: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_owned(),
            seed,
            solver_fingerprint,
            rows: Vec::new(),
            failed_trials: Vec::new(),
        }
    }

    pub fn push(&mut self, trial: Option<usize>, param_key: &str, param_value: impl ToString, metric: &str, value: f64) {
        self.rows.push(ResultRow {
            experiment: self.experiment.clone(),
            trial,
            param_key: param_key.to_owned(),
            param_value: param_value.to_string(),
            metric: metric.to_owned(),
            value,
            seed: self.seed,
            solver_fingerprint: self.solver_fingerprint.clone(),
        });
    }

    pub fn completed(&self) -> bool {
        self.failed_trials.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows with the given metric, in table order.
    pub fn metric(&self, metric: &str) -> impl Iterator<Item = &ResultRow> {
        let metric = metric.to_owned();
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// Orders rows by (trial, parameter, metric); summaries go last and
    /// numeric parameter values compare numerically.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            let trial = match (a.trial, b.trial) {
                (Some(x), Some(y)) => x.cmp(&y),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            };
            trial
                .then_with(|| a.param_key.cmp(&b.param_key))
                .then_with(|| cmp_param(&a.param_value, &b.param_value))
                .then_with(|| a.metric.cmp(&b.metric))
        });
    }

    /// Writes the rows to `path`. CSV columns are exactly the [`ResultRow`]
    /// fields; JSON is an array of row objects.
    pub fn emit(&self, format: OutputFormat, path: &Path) -> Result<()> {
        if self.rows.is_empty() {
            return Err(invalid("refusing to emit an empty result table"));
        }
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        match format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(&mut out);
                for row in &self.rows {
                    w.serialize(row)?;
                }
                w.flush().map_err(io_err)?;
            }
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut out, &self.rows)?;
                out.write_all(b"\n").map_err(io_err)?;
            }
        }
        out.flush().map_err(io_err)
    }
}

fn cmp_param(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Reads rows written by [`ResultTable::emit`] in CSV format.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Reads rows written by [`ResultTable::emit`] in JSON format.
pub fn read_json(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
