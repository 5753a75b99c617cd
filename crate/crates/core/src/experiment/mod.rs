//! Seeded batch experiments: the run loop, aggregation and suite output.

mod aggregate;
mod config;
mod run;
mod sim;
mod suite;

pub use aggregate::{aggregate, selection_frequency, AggregateCurves, Bands};
pub use config::{CostMode, ExperimentConfig, IdleEntropy, SuiteFile};
pub use run::{run_one, RunLog, StepRecord};
pub use sim::{AgentState, Executed, Phase, Proposal, Simulation, LANE_AGENT, LANE_HUMAN, LANE_META};
pub use suite::{
    condition_dir, run_condition, run_config, run_suite, write_run_csvs, ComparisonReport, ConditionSummary,
    PairwiseComparison,
};
