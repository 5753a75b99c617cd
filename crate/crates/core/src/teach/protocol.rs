//! Wire messages, protocol version 1.
//!
//! Messages are JSON objects with a `type` tag. Field names are camelCase.
//! Every server message carries `protocol`, `sessionId` and `stepIndex`
//! (the latter two are `null` only on errors not tied to a session).
//! Unknown fields in client messages are ignored.

use serde::{Deserialize, Serialize};

use super::session::SessionSnapshot;
use crate::experiment::ExperimentConfig;
use crate::meta::ExpertTag;
use crate::tidy::{Action, TaskKind, TidyState};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum ClientMessage {
    /// Starts a session from a configuration, or resumes one from a snapshot.
    Create {
        #[serde(default)]
        config: Option<ExperimentConfig>,
        #[serde(default)]
        snapshot: Option<Box<SessionSnapshot>>,
    },
    Advance {
        session_id: String,
    },
    /// Congratulates the step that has just been executed. `stepIndex`, when
    /// given, must be the one of the latest `state_update`.
    Congratulate {
        session_id: String,
        #[serde(default)]
        step_index: Option<usize>,
    },
    /// Replaces the pending proposal by a drop chosen by the teacher.
    Takeover {
        session_id: String,
        drop_action: Action,
    },
    Snapshot {
        session_id: String,
    },
    /// Asks for the current `state_update` again, e.g. after a reconnect.
    Resync {
        session_id: String,
    },
    Summary {
        session_id: String,
    },
    /// Ends the session; answered with its `session_summary`.
    Close {
        session_id: String,
    },
}

impl ClientMessage {
    pub fn session_id(&self) -> Option<&str> {
        match self {
            ClientMessage::Create { .. } => None,
            ClientMessage::Advance { session_id }
            | ClientMessage::Congratulate { session_id, .. }
            | ClientMessage::Takeover { session_id, .. }
            | ClientMessage::Snapshot { session_id }
            | ClientMessage::Resync { session_id }
            | ClientMessage::Summary { session_id }
            | ClientMessage::Close { session_id } => Some(session_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServerMessage {
    pub protocol: u32,
    pub session_id: Option<String>,
    pub step_index: Option<usize>,
    #[serde(flatten)]
    pub body: ServerBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerBody {
    StateUpdate(StateUpdate),
    Proposal(ProposalView),
    SessionSummary(SessionStats),
    Snapshot { snapshot: Box<SessionSnapshot> },
    Error(ErrorView),
}

/// The world and the agent's running metrics after a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateUpdate {
    pub task: TaskKind,
    pub state_id: usize,
    pub world: TidyState,
    pub last_step: Option<StepView>,
    pub cumulative_reward: f64,
    pub cumulative_work_units: u64,
    /// `[P(MF), P(MB)]` of the latest arbitration.
    pub expert_probs: Option<[f64; 2]>,
    /// Whether a `congratulate` would be accepted now.
    pub congratulate_open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepView {
    /// Index of this step; the update carrying it reports `stepIndex + 1`.
    pub step_index: usize,
    pub state_id: usize,
    pub world: TidyState,
    pub proposed_action: Action,
    pub executed_action: Action,
    pub overridden: bool,
    pub expert: ExpertTag,
    pub expert_probs: [f64; 2],
    pub reward: f64,
    pub work_units: u64,
    pub congratulated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProposalView {
    pub proposed_action: Action,
    pub expert: ExpertTag,
    pub expert_probs: [f64; 2],
    /// A cube is held: the server now waits for a `takeover`.
    pub takeover_possible: bool,
    pub takeover_window_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionStats {
    pub learning_steps: usize,
    pub rewards: u64,
    pub cumulative_reward: f64,
    pub cumulative_work_units: u64,
    pub mf_selections: usize,
    pub mb_selections: usize,
    pub congratulations: usize,
    pub takeovers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnsupportedProtocol,
    InvalidConfig,
    InvalidSnapshot,
    UnknownSession,
    InFlight,
    NoPendingTakeover,
    InvalidDrop,
    NothingToCongratulate,
    StaleStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorView {
    pub code: ErrorCode,
    pub message: String,
}

impl ServerMessage {
    pub fn error(session_id: Option<&str>, step_index: Option<usize>, code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage {
            protocol: PROTOCOL_VERSION,
            session_id: session_id.map(str::to_owned),
            step_index,
            body: ServerBody::Error(ErrorView {
                code,
                message: message.into(),
            }),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.body {
            ServerBody::StateUpdate(_) => "state_update",
            ServerBody::Proposal(_) => "proposal",
            ServerBody::SessionSummary(_) => "session_summary",
            ServerBody::Snapshot { .. } => "snapshot",
            ServerBody::Error(_) => "error",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// Parses one client frame. A `protocol` field, when present, must be 1.
pub fn parse_client(text: &str) -> Result<ClientMessage, ServerMessage> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ServerMessage::error(None, None, ErrorCode::Malformed, format!("not JSON: {e}")))?;
    let session = value.get("sessionId").and_then(|v| v.as_str()).map(str::to_owned);
    if let Some(p) = value.get("protocol") {
        if p.as_u64() != Some(PROTOCOL_VERSION as u64) {
            return Err(ServerMessage::error(
                session.as_deref(),
                None,
                ErrorCode::UnsupportedProtocol,
                format!("unsupported protocol {p}"),
            ));
        }
    }
    if value.get("type").and_then(|t| t.as_str()) == Some("create") {
        return parse_create(&value);
    }
    serde_json::from_value(value)
        .map_err(|e| ServerMessage::error(session.as_deref(), None, ErrorCode::Malformed, e.to_string()))
}

fn parse_create(value: &serde_json::Value) -> Result<ClientMessage, ServerMessage> {
    let field = |name: &str| value.get(name).filter(|v| !v.is_null()).cloned();
    let config = field("config")
        .map(serde_json::from_value::<ExperimentConfig>)
        .transpose()
        .map_err(|e| ServerMessage::error(None, None, ErrorCode::InvalidConfig, format!("config: {e}")))?;
    let snapshot = field("snapshot")
        .map(serde_json::from_value::<SessionSnapshot>)
        .transpose()
        .map_err(|e| ServerMessage::error(None, None, ErrorCode::InvalidSnapshot, format!("snapshot: {e}")))?;
    Ok(ClientMessage::Create {
        config,
        snapshot: snapshot.map(Box::new),
    })
}
