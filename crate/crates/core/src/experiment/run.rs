use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{CostMode, ExperimentConfig};
use super::sim::{AgentState, Phase, Simulation, LANE_HUMAN};
use crate::error::Result;
use crate::human::{HumanEvent, HumanModel, InteractionMode};
use crate::mdp::{ActionId, RngStream, StateId};
use crate::meta::ExpertTag;

/// One row of a run log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub phase: Phase,
    pub state: StateId,
    pub proposed: Option<ActionId>,
    pub executed: ActionId,
    pub expert: Option<ExpertTag>,
    /// `[P(MF), P(MB)]` of the arbitration, absent while babbling.
    pub expert_probs: Option<[f64; 2]>,
    pub reward: f64,
    pub cumulative_reward: f64,
    pub work_units: u64,
    pub cumulative_work_units: u64,
    pub wall_seconds: f64,
    pub human: HumanEvent,
    pub budget_left: u32,
}

/// Complete trace of one run: `babble_steps + steps` records and the agent
/// as it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub run_index: u64,
    pub babble_steps: usize,
    pub records: Vec<StepRecord>,
    pub final_agent: AgentState,
}

impl RunLog {
    /// Records after babbling.
    pub fn learning(&self) -> &[StepRecord] {
        &self.records[self.babble_steps.min(self.records.len())..]
    }

    pub fn final_reward(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cumulative_reward)
    }

    pub fn final_work(&self) -> u64 {
        self.records.last().map_or(0, |r| r.cumulative_work_units)
    }

    pub fn total_wall_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.wall_seconds).sum()
    }

    /// Copy with every wall-clock measurement zeroed, for comparing runs.
    pub fn without_timing(&self) -> RunLog {
        let mut log = self.clone();
        for r in &mut log.records {
            r.wall_seconds = 0.0;
        }
        log.final_agent.cumulative_wall_seconds = 0.0;
        log
    }

    /// Learning-phase step (0-based) of the first reward.
    pub fn first_reward_step(&self) -> Option<usize> {
        self.learning().iter().position(|r| r.reward > 0.0)
    }

    /// Header of the per-run CSV. `wall_seconds` is only written in
    /// wall-clock cost mode so that unit-mode logs are reproducible byte for
    /// byte.
    pub fn csv_header(cost_mode: CostMode) -> Vec<&'static str> {
        let mut h = vec![
            "step",
            "phase",
            "state",
            "proposed",
            "executed",
            "expert",
            "p_mf",
            "p_mb",
            "reward",
            "cumulative_reward",
            "work_units",
            "cumulative_work_units",
            "human_event",
            "budget_left",
        ];
        if cost_mode == CostMode::Wallclock {
            h.push("wall_seconds");
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W, cost_mode: CostMode) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(cost_mode))?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.records {
            let mut row = vec![
                r.step.to_string(),
                match r.phase {
                    Phase::Babble => "babble".to_string(),
                    Phase::Learn => "learn".to_string(),
                },
                r.state.to_string(),
                opt(r.proposed.map(|a| a.index().to_string())),
                r.executed.index().to_string(),
                opt(r.expert.map(|e| e.name().to_string())),
                opt(r.expert_probs.map(|p| p[0].to_string())),
                opt(r.expert_probs.map(|p| p[1].to_string())),
                r.reward.to_string(),
                r.cumulative_reward.to_string(),
                r.work_units.to_string(),
                r.cumulative_work_units.to_string(),
                r.human.name().to_string(),
                r.budget_left.to_string(),
            ];
            if cost_mode == CostMode::Wallclock {
                row.push(r.wall_seconds.to_string());
            }
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs babbling then learning for one seeded run.
pub fn run_one(config: &ExperimentConfig, run_index: u64) -> Result<RunLog> {
    let mut sim = Simulation::new(config, run_index)?;
    let mut human = HumanModel::new(
        config.interaction,
        config.resolved_budget(),
        config.forget_prob,
        RngStream::for_run(config.master_seed, run_index, LANE_HUMAN),
    )?;
    let steps = config.resolved_steps();
    let mut records = Vec::with_capacity(config.babble_steps + steps);

    for _ in 0..config.babble_steps {
        let step = sim.step_index();
        let ex = sim.babble_step()?;
        records.push(StepRecord {
            step,
            phase: Phase::Babble,
            state: ex.state,
            proposed: None,
            executed: ex.action,
            expert: None,
            expert_probs: None,
            reward: 0.0,
            cumulative_reward: 0.0,
            work_units: 0,
            cumulative_work_units: 0,
            wall_seconds: 0.0,
            human: HumanEvent::None,
            budget_left: human.budget(),
        });
    }

    for _ in 0..steps {
        let step = sim.step_index();
        let proposal = sim.propose()?;
        let (executed, mut event) = match config.interaction {
            InteractionMode::Takeover => {
                let (over, ev) = human.maybe_takeover(sim.task(), proposal.state, proposal.action);
                (over.unwrap_or(proposal.action), ev)
            }
            _ => (proposal.action, HumanEvent::None),
        };
        let ex = sim.execute(&proposal, executed)?;
        if config.interaction == InteractionMode::Congrats {
            event = sim.congratulate(&mut human, ex.state, ex.action);
        }
        let agent = sim.agent();
        records.push(StepRecord {
            step,
            phase: Phase::Learn,
            state: ex.state,
            proposed: Some(proposal.action),
            executed: ex.action,
            expert: Some(proposal.outcome.chosen),
            expert_probs: Some(proposal.outcome.expert_probs),
            reward: ex.reward,
            cumulative_reward: agent.cumulative_reward,
            work_units: proposal.report.work_units,
            cumulative_work_units: agent.cumulative_work,
            wall_seconds: proposal.report.wall_clock_seconds,
            human: event,
            budget_left: human.budget(),
        });
    }

    Ok(RunLog {
        run_index,
        babble_steps: config.babble_steps,
        records,
        final_agent: sim.agent().clone(),
    })
}
