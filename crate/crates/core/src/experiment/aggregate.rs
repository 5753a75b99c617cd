use serde::{Deserialize, Serialize};

use super::run::RunLog;
use crate::error::{Error, Result};
use crate::meta::ExpertTag;
use crate::stats::{median, quantile_sorted};

/// Per-step quartiles across runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub q25: Vec<f64>,
    pub q50: Vec<f64>,
    pub q75: Vec<f64>,
}

impl Bands {
    /// `series[run][step]`, all of equal length.
    pub fn from_series(series: &[Vec<f64>]) -> Bands {
        let len = series.first().map_or(0, Vec::len);
        let mut bands = Bands {
            q25: Vec::with_capacity(len),
            q50: Vec::with_capacity(len),
            q75: Vec::with_capacity(len),
        };
        let mut column = Vec::with_capacity(series.len());
        for t in 0..len {
            column.clear();
            column.extend(series.iter().map(|s| s[t]));
            column.sort_by(f64::total_cmp);
            bands.q25.push(quantile_sorted(&column, 0.25));
            bands.q50.push(quantile_sorted(&column, 0.5));
            bands.q75.push(quantile_sorted(&column, 0.75));
        }
        bands
    }

    pub fn len(&self) -> usize {
        self.q50.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q50.is_empty()
    }
}

/// Learning-phase curves of one condition, plus the per-run outcomes the
/// comparisons are computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurves {
    pub runs: usize,
    pub steps: usize,
    pub selection_window: usize,
    pub cumulative_reward: Bands,
    pub cumulative_work_units: Bands,
    /// Share of the trailing `selection_window` steps in which MF acted.
    pub p_mf: Bands,
    pub p_mb: Bands,
    pub final_reward: Vec<f64>,
    pub final_work_units: Vec<f64>,
    /// Learning step of the first reward, `None` for runs never rewarded.
    pub first_reward_step: Vec<Option<usize>>,
    pub wall_seconds: Vec<f64>,
}

/// Trailing-window frequency with which `expert` acted.
pub fn selection_frequency(log: &RunLog, expert: ExpertTag, window: usize) -> Vec<f64> {
    let hits: Vec<u32> = log
        .learning()
        .iter()
        .map(|r| u32::from(r.expert == Some(expert)))
        .collect();
    let mut out = Vec::with_capacity(hits.len());
    let mut sum = 0u32;
    for t in 0..hits.len() {
        sum += hits[t];
        if t >= window {
            sum -= hits[t - window];
        }
        out.push(sum as f64 / (t + 1).min(window) as f64);
    }
    out
}

pub fn aggregate(logs: &[RunLog], selection_window: usize) -> Result<AggregateCurves> {
    let Some(first) = logs.first() else {
        return Err(Error::EmptySample);
    };
    if selection_window == 0 {
        return Err(Error::Config("selection window must be positive".into()));
    }
    let steps = first.learning().len();
    if let Some(bad) = logs.iter().find(|l| l.learning().len() != steps) {
        return Err(Error::MismatchedLengths {
            expected: steps,
            found: bad.learning().len(),
        });
    }
    let series = |f: &dyn Fn(&RunLog) -> Vec<f64>| -> Vec<Vec<f64>> { logs.iter().map(f).collect() };
    let reward = series(&|l| l.learning().iter().map(|r| r.cumulative_reward).collect());
    let work = series(&|l| l.learning().iter().map(|r| r.cumulative_work_units as f64).collect());
    let p_mf = series(&|l| selection_frequency(l, ExpertTag::Mf, selection_window));
    let p_mb = series(&|l| selection_frequency(l, ExpertTag::Mb, selection_window));
    Ok(AggregateCurves {
        runs: logs.len(),
        steps,
        selection_window,
        cumulative_reward: Bands::from_series(&reward),
        cumulative_work_units: Bands::from_series(&work),
        p_mf: Bands::from_series(&p_mf),
        p_mb: Bands::from_series(&p_mb),
        final_reward: logs.iter().map(RunLog::final_reward).collect(),
        final_work_units: logs.iter().map(|l| l.final_work() as f64).collect(),
        first_reward_step: logs.iter().map(RunLog::first_reward_step).collect(),
        wall_seconds: logs.iter().map(RunLog::total_wall_seconds).collect(),
    })
}

impl AggregateCurves {
    pub fn median_final_reward(&self) -> f64 {
        median(&self.final_reward)
    }

    pub fn median_final_work(&self) -> f64 {
        median(&self.final_work_units)
    }

    /// Median first-reward step, unrewarded runs counting as the horizon.
    pub fn median_first_reward_step(&self) -> f64 {
        let steps: Vec<f64> = self
            .first_reward_step
            .iter()
            .map(|s| s.unwrap_or(self.steps) as f64)
            .collect();
        median(&steps)
    }
}
