use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{Checkpoint, RunResult};

/// Across-run mean and standard error at one checkpoint of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub t: u64,
    pub regret_mean: f64,
    pub regret_stderr: f64,
    pub violations_mean: f64,
    pub violations_stderr: f64,
}

/// Aggregated series, sorted by `(algorithm, t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateSeries {
    pub rows: Vec<AggregateRow>,
}

impl AggregateSeries {
    pub fn algorithms(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.rows.iter().map(|r| r.algorithm.as_str()).collect();
        names.dedup();
        names
    }

    pub fn rows_for<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a AggregateRow> {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    /// Final checkpoint row of `algorithm`.
    pub fn last(&self, algorithm: &str) -> Option<&AggregateRow> {
        self.rows.iter().rfind(|r| r.algorithm == algorithm)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| csv_err("aggregate.csv", e))?;
        }
        finish_csv(w, "aggregate.csv")
    }

    pub fn from_csv<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<AggregateRow>, _>>()
            .map_err(|e| csv_err(origin, e))?;
        Ok(AggregateSeries { rows })
    }
}

/// Mean and standard error (sample sd over sqrt(n)); the error is 0 for one sample.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-algorithm, per-checkpoint mean and standard error.
///
/// All runs must share one checkpoint grid.
pub fn aggregate(results: &[RunResult]) -> Result<AggregateSeries> {
    let first = results
        .first()
        .ok_or_else(|| Error::input("no runs to aggregate"))?;
    let grid: Vec<u64> = first.checkpoints.iter().map(|c| c.t).collect();
    let mut by_algorithm: BTreeMap<&str, Vec<&RunResult>> = BTreeMap::new();
    for run in results {
        if run.checkpoints.len() != grid.len()
            || run.checkpoints.iter().zip(&grid).any(|(c, &t)| c.t != t)
        {
            return Err(Error::input(format!(
                "run ({}, seed {}) has a different checkpoint grid",
                run.algorithm, run.seed
            )));
        }
        by_algorithm.entry(&run.algorithm).or_default().push(run);
    }

    let mut rows = Vec::with_capacity(by_algorithm.len() * grid.len());
    for (algorithm, runs) in by_algorithm {
        for (idx, &t) in grid.iter().enumerate() {
            let regret: Vec<f64> = runs.iter().map(|r| r.checkpoints[idx].cum_regret).collect();
            let violations: Vec<f64> = runs
                .iter()
                .map(|r| r.checkpoints[idx].cum_violations as f64)
                .collect();
            let (regret_mean, regret_stderr) = mean_stderr(&regret);
            let (violations_mean, violations_stderr) = mean_stderr(&violations);
            rows.push(AggregateRow {
                algorithm: algorithm.to_string(),
                t,
                regret_mean,
                regret_stderr,
                violations_mean,
                violations_stderr,
            });
        }
    }
    Ok(AggregateSeries { rows })
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRow {
    algorithm: String,
    seed: u64,
    t: u64,
    cum_regret: f64,
    cum_violations: u64,
}

/// Serializes runs as `algorithm,seed,t,cum_regret,cum_violations`.
pub fn runs_to_csv(results: &[RunResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for run in results {
        for c in &run.checkpoints {
            w.serialize(RunRow {
                algorithm: run.algorithm.clone(),
                seed: run.seed,
                t: c.t,
                cum_regret: c.cum_regret,
                cum_violations: c.cum_violations,
            })
            .map_err(|e| csv_err("runs.csv", e))?;
        }
    }
    finish_csv(w, "runs.csv")
}

/// Parses `runs.csv`; consecutive rows with the same `(algorithm, seed)` form one run.
pub fn runs_from_csv<R: Read>(reader: R, origin: &Path) -> Result<Vec<RunResult>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out: Vec<RunResult> = Vec::new();
    for row in r.deserialize() {
        let row: RunRow = row.map_err(|e| csv_err(origin, e))?;
        let checkpoint = Checkpoint {
            t: row.t,
            cum_regret: row.cum_regret,
            cum_violations: row.cum_violations,
        };
        match out.last_mut() {
            Some(run)
                if run.algorithm == row.algorithm
                    && run.seed == row.seed
                    && run.checkpoints.last().is_some_and(|c| c.t < row.t) =>
            {
                run.checkpoints.push(checkpoint)
            }
            _ => out.push(RunResult {
                algorithm: row.algorithm,
                seed: row.seed,
                checkpoints: vec![checkpoint],
            }),
        }
    }
    Ok(out)
}

fn csv_err(origin: impl AsRef<Path>, source: csv::Error) -> Error {
    Error::Csv {
        path: origin.as_ref().to_path_buf(),
        source,
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>, name: &str) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(name, e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
