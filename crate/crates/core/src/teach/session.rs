use serde::{Deserialize, Serialize};

use super::protocol::{
    ErrorCode, ProposalView, ServerBody, ServerMessage, SessionStats, StateUpdate, StepView, PROTOCOL_VERSION,
};
use crate::experiment::{AgentState, ExperimentConfig, Proposal, Simulation};
use crate::meta::ExpertTag;
use crate::tidy::{Action, TidyState};

/// Failure of a session operation, reported to the client as an `error`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionError {
    pub code: ErrorCode,
    pub message: String,
}

impl SessionError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        SessionError {
            code,
            message: message.into(),
        }
    }
}

/// Everything needed to resume a session with identical behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSnapshot {
    pub protocol: u32,
    pub config: ExperimentConfig,
    pub agent: AgentState,
    pub last_step: Option<StepView>,
    pub congratulate_open: bool,
    pub stats: SessionStats,
}

/// What `advance` produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Advance {
    /// A cube is held; the proposal waits for a takeover or the deadline.
    AwaitingTakeover(ServerMessage),
    /// The proposal was executed at once.
    Executed {
        proposal: ServerMessage,
        update: ServerMessage,
    },
}

/// One live-teaching session: a simulation advanced one step per request.
///
/// The simulated teacher of the configuration is not used; the client is
/// the teacher. At most one step is in flight at a time.
pub struct Session {
    id: String,
    sim: Simulation,
    pending: Option<Proposal>,
    last_step: Option<StepView>,
    congratulate_open: bool,
    stats: SessionStats,
}

impl Session {
    /// Validates `config` and runs the babbling phase.
    pub fn create(id: String, config: &ExperimentConfig) -> Result<Session, SessionError> {
        let mut sim =
            Simulation::new(config, 0).map_err(|e| SessionError::new(ErrorCode::InvalidConfig, e.to_string()))?;
        while sim.is_babbling() {
            sim.babble_step()
                .map_err(|e| SessionError::new(ErrorCode::InvalidConfig, e.to_string()))?;
        }
        Ok(Session {
            id,
            sim,
            pending: None,
            last_step: None,
            congratulate_open: false,
            stats: SessionStats::default(),
        })
    }

    pub fn restore(id: String, snapshot: SessionSnapshot) -> Result<Session, SessionError> {
        let invalid = |m: String| SessionError::new(ErrorCode::InvalidSnapshot, m);
        if snapshot.protocol != PROTOCOL_VERSION {
            return Err(invalid(format!("snapshot protocol {}", snapshot.protocol)));
        }
        if snapshot.agent.step_index < snapshot.config.babble_steps {
            return Err(invalid("snapshot taken before babbling finished".into()));
        }
        if snapshot.congratulate_open && snapshot.last_step.is_none() {
            return Err(invalid("open congratulation without a step".into()));
        }
        let sim = Simulation::restore(&snapshot.config, snapshot.agent).map_err(|e| invalid(e.to_string()))?;
        Ok(Session {
            id,
            sim,
            pending: None,
            last_step: snapshot.last_step,
            congratulate_open: snapshot.congratulate_open,
            stats: snapshot.stats,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn step_index(&self) -> usize {
        self.sim.step_index()
    }

    pub fn in_flight(&self) -> bool {
        self.pending.is_some()
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn last_step(&self) -> Option<&StepView> {
        self.last_step.as_ref()
    }

    fn envelope(&self, body: ServerBody) -> ServerMessage {
        ServerMessage {
            protocol: PROTOCOL_VERSION,
            session_id: Some(self.id.clone()),
            step_index: Some(self.step_index()),
            body,
        }
    }

    pub fn error(&self, e: SessionError) -> ServerMessage {
        ServerMessage::error(Some(&self.id), Some(self.step_index()), e.code, e.message)
    }

    fn world(&self) -> TidyState {
        *self.sim.task().state(self.sim.state()).expect("simulation state is valid")
    }

    pub fn state_update(&self) -> ServerMessage {
        let agent = self.sim.agent();
        self.envelope(ServerBody::StateUpdate(StateUpdate {
            task: self.sim.task().kind(),
            state_id: self.sim.state().0,
            world: self.world(),
            last_step: self.last_step,
            cumulative_reward: agent.cumulative_reward,
            cumulative_work_units: agent.cumulative_work,
            expert_probs: self.last_step.map(|s| s.expert_probs),
            congratulate_open: self.congratulate_open,
        }))
    }

    pub fn summary(&self) -> ServerMessage {
        self.envelope(ServerBody::SessionSummary(self.stats))
    }

    fn proposal_message(&self, p: &Proposal, takeover_possible: bool, window_ms: Option<u64>) -> ServerMessage {
        self.envelope(ServerBody::Proposal(ProposalView {
            proposed_action: Action::from_id(p.action),
            expert: p.outcome.chosen,
            expert_probs: p.outcome.expert_probs,
            takeover_possible,
            takeover_window_ms: window_ms.filter(|_| takeover_possible),
        }))
    }

    /// Arbitrates and proposes. Executes immediately when the hand is empty;
    /// otherwise the step stays in flight until [`Session::takeover`] or
    /// [`Session::resolve`].
    pub fn advance(&mut self, takeover_window_ms: Option<u64>) -> Result<Advance, SessionError> {
        if self.pending.is_some() {
            return Err(SessionError::new(ErrorCode::InFlight, "a step is already in flight"));
        }
        self.congratulate_open = false;
        let proposal = self
            .sim
            .propose()
            .map_err(|e| SessionError::new(ErrorCode::Malformed, e.to_string()))?;
        if self.sim.task().holding(proposal.state) {
            let msg = self.proposal_message(&proposal, true, takeover_window_ms);
            self.pending = Some(proposal);
            return Ok(Advance::AwaitingTakeover(msg));
        }
        let msg = self.proposal_message(&proposal, false, None);
        let update = self.execute(proposal, None)?;
        Ok(Advance::Executed { proposal: msg, update })
    }

    /// Executes the in-flight proposal with the teacher's drop instead.
    pub fn takeover(&mut self, drop: Action) -> Result<ServerMessage, SessionError> {
        if self.pending.is_none() {
            return Err(SessionError::new(ErrorCode::NoPendingTakeover, "no takeover window is open"));
        }
        if drop.destination().is_none() {
            return Err(SessionError::new(ErrorCode::InvalidDrop, format!("{drop} is not a drop")));
        }
        let proposal = self.pending.take().expect("checked above");
        self.execute(proposal, Some(drop))
    }

    /// Executes the in-flight proposal unchanged (the takeover window passed).
    pub fn resolve(&mut self) -> Option<ServerMessage> {
        let proposal = self.pending.take()?;
        Some(self.execute(proposal, None).unwrap_or_else(|e| self.error(e)))
    }

    fn execute(&mut self, proposal: Proposal, drop: Option<Action>) -> Result<ServerMessage, SessionError> {
        let step_index = self.step_index();
        let executed = drop.map_or(proposal.action, Action::id);
        let ex = self
            .sim
            .execute(&proposal, executed)
            .map_err(|e| SessionError::new(ErrorCode::Malformed, e.to_string()))?;
        // G reflects the latest execution of (s, a) only
        self.sim.flags_mut().set(ex.state, ex.action, false);
        let world = *self.sim.task().state(ex.state).expect("valid state");
        self.last_step = Some(StepView {
            step_index,
            state_id: ex.state.0,
            world,
            proposed_action: Action::from_id(proposal.action),
            executed_action: Action::from_id(ex.action),
            overridden: drop.is_some(),
            expert: proposal.outcome.chosen,
            expert_probs: proposal.outcome.expert_probs,
            reward: ex.reward,
            work_units: proposal.report.work_units,
            congratulated: false,
        });
        self.congratulate_open = true;
        let stats = &mut self.stats;
        stats.learning_steps += 1;
        stats.cumulative_reward += ex.reward;
        stats.cumulative_work_units += proposal.report.work_units;
        if ex.reward > 0.0 {
            stats.rewards += 1;
        }
        match proposal.outcome.chosen {
            ExpertTag::Mf => stats.mf_selections += 1,
            ExpertTag::Mb => stats.mb_selections += 1,
        }
        if drop.is_some() {
            stats.takeovers += 1;
        }
        Ok(self.state_update())
    }

    /// Sets `G(s,a)` for the step just executed.
    pub fn congratulate(&mut self, step_index: Option<usize>) -> Result<ServerMessage, SessionError> {
        if self.pending.is_some() {
            return Err(SessionError::new(ErrorCode::InFlight, "a step is in flight"));
        }
        if let Some(k) = step_index {
            if k != self.step_index() {
                return Err(SessionError::new(
                    ErrorCode::StaleStep,
                    format!("congratulation for step {k}, current step is {}", self.step_index()),
                ));
            }
        }
        let Some(last) = self.last_step.as_mut().filter(|_| self.congratulate_open) else {
            return Err(SessionError::new(
                ErrorCode::NothingToCongratulate,
                "no executed step awaits a congratulation",
            ));
        };
        last.congratulated = true;
        let (s, a) = (crate::StateId(last.state_id), last.executed_action.id());
        self.congratulate_open = false;
        self.stats.congratulations += 1;
        self.sim.flags_mut().set(s, a, true);
        Ok(self.state_update())
    }

    pub fn snapshot(&self) -> Result<SessionSnapshot, SessionError> {
        if self.pending.is_some() {
            return Err(SessionError::new(ErrorCode::InFlight, "cannot snapshot while a step is in flight"));
        }
        Ok(SessionSnapshot {
            protocol: PROTOCOL_VERSION,
            config: self.sim.config().clone(),
            agent: self.sim.agent().clone(),
            last_step: self.last_step,
            congratulate_open: self.congratulate_open,
            stats: self.stats,
        })
    }

    pub fn snapshot_message(&self) -> Result<ServerMessage, SessionError> {
        let snapshot = self.snapshot()?;
        Ok(self.envelope(ServerBody::Snapshot {
            snapshot: Box::new(snapshot),
        }))
    }
}
