use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experts::{MbParams, MfParams, RewardModel};
use crate::human::{default_budget, InteractionMode};
use crate::meta::ControllerKind;
use crate::tidy::TaskKind;

/// What the meta-controller sees as an expert's inference cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// Deterministic work units times `cost_per_unit`.
    #[default]
    Units,
    /// Measured wall-clock time of the inference call.
    Wallclock,
}

impl FromStr for CostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "units" => Ok(CostMode::Units),
            "wallclock" => Ok(CostMode::Wallclock),
            _ => Err(Error::Config(format!("unknown cost mode {s:?}"))),
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMode::Units => "units",
            CostMode::Wallclock => "wallclock",
        })
    }
}

/// Whether the inhibited expert's entropy average follows its stored values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdleEntropy {
    /// Only the acting expert's averages move.
    Frozen,
    /// The inhibited expert's entropy is refreshed from the action values it
    /// already holds (no inference, no cost).
    #[default]
    Refresh,
}

/// One experimental condition. Every field has a default, so a JSON config
/// only needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used for output directories; derived from the condition if absent.
    pub name: Option<String>,
    pub task: TaskKind,
    pub controller: ControllerKind,
    pub interaction: InteractionMode,
    /// Interaction budget; the per-condition default when absent.
    pub budget: Option<u32>,
    /// Learning steps after babbling; 10 000 for `tidy1`, 20 000 for `tidy2`
    /// when absent.
    pub steps: Option<usize>,
    pub babble_steps: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub gamma_mf: f64,
    pub gamma_mb: f64,
    pub tau: f64,
    pub tau_mc: f64,
    pub zeta: f64,
    pub forget_prob: f64,
    pub window: usize,
    pub ema_smoothing: f64,
    pub vi_epsilon: f64,
    pub vi_max_sweeps: u32,
    pub reward_model: RewardModel,
    pub cost_mode: CostMode,
    pub cost_per_unit: f64,
    pub idle_entropy: IdleEntropy,
    /// Sliding window, in steps, of the expert-selection curves.
    pub selection_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: None,
            task: TaskKind::Tidy1,
            controller: ControllerKind::Ec,
            interaction: InteractionMode::None,
            budget: None,
            steps: None,
            babble_steps: 1000,
            runs: 50,
            master_seed: 0,
            alpha: 0.6,
            gamma_mf: 0.9,
            gamma_mb: 0.95,
            tau: 0.02,
            tau_mc: 0.02,
            zeta: 0.1,
            forget_prob: 0.1,
            window: 10,
            ema_smoothing: 0.1,
            vi_epsilon: 1e-4,
            vi_max_sweeps: 100,
            reward_model: RewardModel::Literal,
            cost_mode: CostMode::Units,
            cost_per_unit: 1.0,
            idle_entropy: IdleEntropy::Refresh,
            selection_window: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn new(task: TaskKind, controller: ControllerKind, interaction: InteractionMode) -> Self {
        ExperimentConfig {
            task,
            controller,
            interaction,
            ..ExperimentConfig::default()
        }
    }

    pub fn resolved_steps(&self) -> usize {
        self.steps.unwrap_or(match self.task {
            TaskKind::Tidy1 => 10_000,
            TaskKind::Tidy2 => 20_000,
        })
    }

    pub fn resolved_budget(&self) -> u32 {
        match self.interaction {
            InteractionMode::None => 0,
            _ => self
                .budget
                .unwrap_or_else(|| default_budget(self.controller, self.interaction, self.task)),
        }
    }

    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!(
                "{}_{}_{}_b{}",
                self.task,
                self.controller,
                self.interaction,
                self.resolved_budget()
            ),
        }
    }

    pub fn mf_params(&self) -> MfParams {
        MfParams {
            alpha: self.alpha,
            gamma: self.gamma_mf,
            tau: self.tau,
        }
    }

    pub fn mb_params(&self) -> MbParams {
        MbParams {
            gamma: self.gamma_mb,
            tau: self.tau,
            window: self.window,
            vi_epsilon: self.vi_epsilon,
            vi_max_sweeps: self.vi_max_sweeps,
            reward_model: self.reward_model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.resolved_steps() == 0 {
            return bad("steps must be positive".into());
        }
        if self.runs == 0 {
            return bad("runs must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        for (name, g) in [("gamma_mf", self.gamma_mf), ("gamma_mb", self.gamma_mb)] {
            if !(0.0..1.0).contains(&g) {
                return bad(format!("{name} {g} outside [0, 1)"));
            }
        }
        for (name, t) in [("tau", self.tau), ("tau_mc", self.tau_mc)] {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("{name} {t} must be positive"));
            }
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return bad(format!("zeta {} must be non-negative", self.zeta));
        }
        if !(0.0..=1.0).contains(&self.forget_prob) {
            return bad(format!("forget_prob {} outside [0, 1]", self.forget_prob));
        }
        if self.window == 0 {
            return bad("window must be positive".into());
        }
        if !(self.ema_smoothing > 0.0 && self.ema_smoothing <= 1.0) {
            return bad(format!("ema_smoothing {} outside (0, 1]", self.ema_smoothing));
        }
        if !(self.vi_epsilon >= 0.0) || self.vi_max_sweeps == 0 {
            return bad("vi_epsilon must be non-negative and vi_max_sweeps positive".into());
        }
        if !(self.cost_per_unit >= 0.0 && self.cost_per_unit.is_finite()) {
            return bad(format!("cost_per_unit {} must be non-negative", self.cost_per_unit));
        }
        if self.selection_window == 0 {
            return bad("selection_window must be positive".into());
        }
        Ok(())
    }
}

/// `suite --config` file: a list of conditions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub configs: Vec<ExperimentConfig>,
}
