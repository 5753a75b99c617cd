use std::collections::HashMap;

use super::protocol::{ClientMessage, ErrorCode, ServerMessage};
use super::session::{Advance, Session, SessionError};
use crate::experiment::ExperimentConfig;

/// Builds a session from a `create` request.
pub fn create_session(
    config: Option<ExperimentConfig>,
    snapshot: Option<Box<super::SessionSnapshot>>,
) -> Result<Session, ServerMessage> {
    let id = uuid::Uuid::new_v4().to_string();
    let made = match (config, snapshot) {
        (Some(_), Some(_)) => Err(SessionError {
            code: ErrorCode::Malformed,
            message: "give either a config or a snapshot".into(),
        }),
        (None, Some(snapshot)) => Session::restore(id, *snapshot),
        (config, None) => Session::create(id, &config.unwrap_or_default()),
    };
    made.map_err(|e| ServerMessage::error(None, None, e.code, e.message))
}

/// Applies one request to a session, returning the messages to send back.
/// `takeover_window_ms` is only reported to the client; enforcing the window
/// is up to the caller (see [`Session::resolve`]).
pub fn apply(session: &mut Session, msg: ClientMessage, takeover_window_ms: Option<u64>) -> Vec<ServerMessage> {
    let result = match msg {
        ClientMessage::Create { .. } => Ok(vec![session.state_update()]),
        ClientMessage::Advance { .. } => session.advance(takeover_window_ms).map(|a| match a {
            Advance::AwaitingTakeover(p) => vec![p],
            Advance::Executed { proposal, update } => vec![proposal, update],
        }),
        ClientMessage::Congratulate { step_index, .. } => session.congratulate(step_index).map(|m| vec![m]),
        ClientMessage::Takeover { drop_action, .. } => session.takeover(drop_action).map(|m| vec![m]),
        ClientMessage::Snapshot { .. } => session.snapshot_message().map(|m| vec![m]),
        ClientMessage::Resync { .. } => Ok(vec![session.state_update()]),
        ClientMessage::Summary { .. } | ClientMessage::Close { .. } => Ok(vec![session.summary()]),
    };
    result.unwrap_or_else(|e| vec![session.error(e)])
}

/// Synchronous session table: the reference implementation of the protocol,
/// also used by tools and tests that need no timer.
#[derive(Default)]
pub struct SessionRegistry {
    sessions: HashMap<String, Session>,
    pub takeover_window_ms: Option<u64>,
}

impl SessionRegistry {
    pub fn new() -> Self {
        SessionRegistry::default()
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match super::parse_client(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![e],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        if let ClientMessage::Create { config, snapshot } = msg {
            return match create_session(config, snapshot) {
                Ok(session) => {
                    let update = session.state_update();
                    self.sessions.insert(session.id().to_owned(), session);
                    vec![update]
                }
                Err(e) => vec![e],
            };
        }
        let id = msg.session_id().expect("non-create messages name a session").to_owned();
        let close = matches!(msg, ClientMessage::Close { .. });
        let Some(session) = self.sessions.get_mut(&id) else {
            return vec![ServerMessage::error(
                Some(&id),
                None,
                ErrorCode::UnknownSession,
                format!("no session {id}"),
            )];
        };
        let out = apply(session, msg, self.takeover_window_ms);
        if close {
            self.sessions.remove(&id);
        }
        out
    }

    /// Lets the takeover window of `id` expire.
    pub fn expire_takeover(&mut self, id: &str) -> Option<ServerMessage> {
        self.sessions.get_mut(id)?.resolve()
    }
}
