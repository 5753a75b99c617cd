//! Batch execution of many conditions and the files it leaves behind.
//!
//! ```text
//! OUT/
//!   comparison.json
//!   00_<label>/aggregate.json
//!   00_<label>/run_000.csv
//!   ...
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, AggregateCurves};
use super::config::ExperimentConfig;
use super::run::{run_one, RunLog};
use crate::error::{Error, Result};
use crate::stats::{mann_whitney_u, MannWhitney};

/// Runs every seeded run of `config`, in run-index order.
pub fn run_config(config: &ExperimentConfig, parallel: bool) -> Result<Vec<RunLog>> {
    config.validate()?;
    let indices = 0..config.runs as u64;
    if parallel {
        indices.into_par_iter().map(|i| run_one(config, i)).collect()
    } else {
        indices.map(|i| run_one(config, i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub label: String,
    pub directory: String,
    pub config: ExperimentConfig,
    pub runs: usize,
    pub median_final_reward: f64,
    pub median_final_work_units: f64,
    pub median_first_reward_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub a: String,
    pub b: String,
    pub final_reward: MannWhitney,
    pub final_work_units: MannWhitney,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub conditions: Vec<ConditionSummary>,
    pub pairwise: Vec<PairwiseComparison>,
}

impl ComparisonReport {
    pub fn from_curves(entries: &[(ConditionSummary, AggregateCurves)]) -> Result<Self> {
        let mut pairwise = Vec::new();
        for (i, (sa, ca)) in entries.iter().enumerate() {
            for (sb, cb) in &entries[i + 1..] {
                pairwise.push(PairwiseComparison {
                    a: sa.label.clone(),
                    b: sb.label.clone(),
                    final_reward: mann_whitney_u(&ca.final_reward, &cb.final_reward)?,
                    final_work_units: mann_whitney_u(&ca.final_work_units, &cb.final_work_units)?,
                });
            }
        }
        Ok(ComparisonReport {
            conditions: entries.iter().map(|(s, _)| s.clone()).collect(),
            pairwise,
        })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes `run_XXX.csv` for each log into `dir`.
pub fn write_run_csvs(dir: &Path, logs: &[RunLog], config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for log in logs {
        let path = dir.join(format!("run_{:03}.csv", log.run_index));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        log.write_csv(BufWriter::new(file), config.cost_mode)
            .map_err(|source| Error::Csv {
                path: path.clone(),
                source,
            })?;
    }
    Ok(())
}

/// Runs one condition and writes its directory. Returns its summary and curves.
pub fn run_condition(
    config: &ExperimentConfig,
    dir: &Path,
    parallel: bool,
) -> Result<(ConditionSummary, AggregateCurves)> {
    let logs = run_config(config, parallel)?;
    write_run_csvs(dir, &logs, config)?;
    let curves = aggregate(&logs, config.selection_window)?;
    write_json(&dir.join("aggregate.json"), &curves)?;
    let summary = ConditionSummary {
        label: config.label(),
        directory: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        config: config.clone(),
        runs: curves.runs,
        median_final_reward: curves.median_final_reward(),
        median_final_work_units: curves.median_final_work(),
        median_first_reward_step: curves.median_first_reward_step(),
    };
    Ok((summary, curves))
}

pub fn condition_dir(out: &Path, index: usize, config: &ExperimentConfig) -> PathBuf {
    out.join(format!("{index:02}_{}", config.label()))
}

/// Runs all conditions (runs of a condition in parallel when asked) and
/// writes `comparison.json`. An empty list yields an empty report.
pub fn run_suite(configs: &[ExperimentConfig], out: &Path, parallel: bool) -> Result<ComparisonReport> {
    for c in configs {
        c.validate()?;
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut entries = Vec::with_capacity(configs.len());
    for (i, config) in configs.iter().enumerate() {
        entries.push(run_condition(config, &condition_dir(out, i, config), parallel)?);
    }
    let report = ComparisonReport::from_curves(&entries)?;
    write_json(&out.join("comparison.json"), &report)?;
    Ok(report)
}
