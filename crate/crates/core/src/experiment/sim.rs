//! One agent acting in one task: the step loop shared by batch runs and
//! live teaching sessions.
//!
//! A learning step is split in two so a teacher can intervene in between:
//! [`Simulation::propose`] arbitrates and lets the chosen expert infer and
//! decide, then [`Simulation::execute`] applies whatever action was finally
//! executed, trains both experts on it and updates the monitors.

use serde::{Deserialize, Serialize};

use super::config::{CostMode, ExperimentConfig, IdleEntropy};
use crate::error::Result;
use crate::experts::{decide, Expert, InferenceReport, MbExpert, MfExpert};
use crate::human::{CongratsFlags, HumanEvent, HumanModel};
use crate::mdp::{softmax, ActionDistribution, ActionId, RngStream, StateId};
use crate::meta::{ArbitrationOutcome, ExpertTag, MetaMonitor};
use crate::tidy::TidyTask;

/// Random-stream lanes within a run.
pub const LANE_AGENT: u64 = 0;
pub const LANE_META: u64 = 1;
pub const LANE_HUMAN: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Babble,
    Learn,
}

/// Everything about an agent that changes while it runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub mf: MfExpert,
    pub mb: MbExpert,
    pub monitor: MetaMonitor,
    pub flags: CongratsFlags,
    pub state: StateId,
    /// Steps taken so far, babbling included.
    pub step_index: usize,
    pub cumulative_reward: f64,
    pub cumulative_work: u64,
    pub cumulative_wall_seconds: f64,
    agent_rng: RngStream,
    meta_rng: RngStream,
}

/// Result of arbitration plus the acting expert's inference and decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub state: StateId,
    pub outcome: ArbitrationOutcome,
    pub action: ActionId,
    pub distribution: ActionDistribution,
    pub report: InferenceReport,
}

/// One executed step, as written to run logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Executed {
    pub state: StateId,
    pub action: ActionId,
    pub next: StateId,
    pub reward: f64,
    pub terminal: bool,
}

pub struct Simulation {
    config: ExperimentConfig,
    task: TidyTask,
    agent: AgentState,
}

impl Simulation {
    pub fn new(config: &ExperimentConfig, run_index: u64) -> Result<Self> {
        config.validate()?;
        let task = TidyTask::new(config.task);
        let n = task.num_states();
        let seed = config.master_seed;
        let agent = AgentState {
            mf: MfExpert::new(n, config.mf_params()),
            mb: MbExpert::new(n, config.mb_params()),
            monitor: MetaMonitor::new(n, config.ema_smoothing, config.tau_mc)?,
            flags: CongratsFlags::new(n),
            state: task.initial(),
            step_index: 0,
            cumulative_reward: 0.0,
            cumulative_work: 0,
            cumulative_wall_seconds: 0.0,
            agent_rng: RngStream::for_run(seed, run_index, LANE_AGENT),
            meta_rng: RngStream::for_run(seed, run_index, LANE_META),
        };
        Ok(Simulation {
            config: config.clone(),
            task,
            agent,
        })
    }

    /// Rebuilds a simulation from a saved agent.
    pub fn restore(config: &ExperimentConfig, agent: AgentState) -> Result<Self> {
        config.validate()?;
        let task = TidyTask::new(config.task);
        let n = task.num_states();
        let consistent = agent.mf.num_states() == n
            && agent.mb.num_states() == n
            && agent.monitor.num_states() == n
            && agent.flags.num_states() == n
            && agent.state.0 < n
            && agent.mf.is_consistent()
            && agent.mb.is_consistent()
            && agent.monitor.is_consistent()
            && agent.cumulative_reward.is_finite()
            && agent.cumulative_reward >= 0.0;
        if !consistent {
            return Err(crate::error::Error::Config(
                "agent snapshot does not match the task's state space".into(),
            ));
        }
        Ok(Simulation {
            config: config.clone(),
            task,
            agent,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn task(&self) -> &TidyTask {
        &self.task
    }

    pub fn agent(&self) -> &AgentState {
        &self.agent
    }

    pub fn flags_mut(&mut self) -> &mut CongratsFlags {
        &mut self.agent.flags
    }

    /// Lets a simulated teacher react to the executed `(s, a)`.
    pub fn congratulate(&mut self, human: &mut HumanModel, s: StateId, a: ActionId) -> HumanEvent {
        human.observe_and_congratulate(&mut self.agent.flags, &self.task, s, a)
    }

    pub fn state(&self) -> StateId {
        self.agent.state
    }

    pub fn step_index(&self) -> usize {
        self.agent.step_index
    }

    pub fn is_babbling(&self) -> bool {
        self.agent.step_index < self.config.babble_steps
    }

    /// One uniformly random action. Both experts learn from it with a zero
    /// reward; nothing is monitored or counted. The cubes are put back on
    /// the table after the last babbling step.
    pub fn babble_step(&mut self) -> Result<Executed> {
        let uniform = ActionDistribution::uniform();
        let a = ActionId::new(self.agent.agent_rng.sample_index(uniform.probs())?).expect("seven actions");
        let s = self.agent.state;
        let step = self.task.step(s, a)?;
        self.agent.mf.learn(s, a, 0.0, step.next);
        self.agent.mb.learn(s, a, 0.0, step.next);
        self.agent.state = step.next;
        self.agent.step_index += 1;
        if self.agent.step_index == self.config.babble_steps {
            // learning starts from a tidy-able table
            self.agent.state = self.task.initial();
        }
        Ok(Executed {
            state: s,
            action: a,
            next: step.next,
            reward: 0.0,
            terminal: step.terminal,
        })
    }

    pub fn propose(&mut self) -> Result<Proposal> {
        let s = self.agent.state;
        let outcome = self
            .agent
            .monitor
            .select(self.config.controller, s, &mut self.agent.meta_rng)?;
        let report = match outcome.chosen {
            ExpertTag::Mf => self.agent.mf.infer(s),
            ExpertTag::Mb => self.agent.mb.infer(s),
        };
        let (action, distribution) = decide(
            &report.action_values,
            self.config.tau,
            self.agent.flags.row(s),
            self.config.zeta,
            &mut self.agent.agent_rng,
        )?;
        Ok(Proposal {
            state: s,
            outcome,
            action,
            distribution,
            report,
        })
    }

    fn cost_of(&self, report: &InferenceReport) -> f64 {
        match self.config.cost_mode {
            CostMode::Units => report.work_units as f64 * self.config.cost_per_unit,
            CostMode::Wallclock => report.wall_clock_seconds,
        }
    }

    /// Decision distribution an expert would produce from the values it
    /// already holds.
    fn idle_distribution(&self, expert: ExpertTag, s: StateId) -> Result<ActionDistribution> {
        let mut values = match expert {
            ExpertTag::Mf => self.agent.mf.stored_values(s),
            ExpertTag::Mb => self.agent.mb.stored_values(s),
        };
        let flags = self.agent.flags.row(s);
        for (v, &g) in values.iter_mut().zip(flags.iter()) {
            if g {
                *v += self.config.zeta;
            }
        }
        softmax(&values, self.config.tau)
    }

    /// Applies `executed` (the proposal or a teacher's override) in the
    /// proposal's state.
    pub fn execute(&mut self, proposal: &Proposal, executed: ActionId) -> Result<Executed> {
        let s = proposal.state;
        debug_assert_eq!(s, self.agent.state);
        let acting = proposal.outcome.chosen;
        let idle = match acting {
            ExpertTag::Mf => ExpertTag::Mb,
            ExpertTag::Mb => ExpertTag::Mf,
        };
        // the idle expert is judged on the values it held when the proposal was made
        let idle_dist = if self.config.idle_entropy == IdleEntropy::Refresh && self.config.controller_uses_monitor() {
            Some(self.idle_distribution(idle, s)?)
        } else {
            None
        };

        let step = self.task.step(s, executed)?;
        self.agent.mf.learn(s, executed, step.reward, step.next);
        self.agent.mb.learn(s, executed, step.reward, step.next);

        let cost = self.cost_of(&proposal.report);
        if let Some(dist) = idle_dist {
            self.agent.monitor.observe_entropy(s, idle, &dist);
        }
        self.agent.monitor.update(s, acting, &proposal.distribution, cost);

        self.agent.state = step.next;
        self.agent.step_index += 1;
        self.agent.cumulative_reward += step.reward;
        self.agent.cumulative_work += proposal.report.work_units;
        self.agent.cumulative_wall_seconds += proposal.report.wall_clock_seconds;
        Ok(Executed {
            state: s,
            action: executed,
            next: step.next,
            reward: step.reward,
            terminal: step.terminal,
        })
    }
}

impl ExperimentConfig {
    /// Only the arbitrating controllers read the monitors.
    pub(crate) fn controller_uses_monitor(&self) -> bool {
        use crate::meta::ControllerKind::*;
        matches!(self.controller, Rnd | Ec)
    }
}
