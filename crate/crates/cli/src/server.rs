//! WebSocket transport for live-teaching sessions.
//!
//! Clients connect to `/ws` and exchange protocol-v1 JSON text frames. Every
//! session lives in its own task that handles one message at a time and
//! owns the takeover timer; sessions are addressed by id, so a client can
//! reconnect and `resync`. Other paths serve the static UI bundle.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use mbmf::teach::protocol::ServerBody;
use mbmf::teach::{apply, create_session, parse_client, ClientMessage, ErrorCode, ServerMessage, Session};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::time::Instant;
use tower_http::services::ServeDir;

pub const DEFAULT_TAKEOVER_WINDOW: Duration = Duration::from_secs(5);

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub static_dir: Option<PathBuf>,
    pub takeover_window: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            static_dir: None,
            takeover_window: DEFAULT_TAKEOVER_WINDOW,
        }
    }
}

type Outbox = mpsc::UnboundedSender<ServerMessage>;

struct Request {
    msg: ClientMessage,
    reply: Outbox,
}

#[derive(Clone)]
struct Hub {
    sessions: Arc<Mutex<HashMap<String, mpsc::UnboundedSender<Request>>>>,
    takeover_window: Duration,
}

impl Hub {
    fn route(&self, msg: ClientMessage, reply: &Outbox) {
        if let ClientMessage::Create { config, snapshot } = msg {
            match create_session(config, snapshot) {
                Ok(session) => {
                    let _ = reply.send(session.state_update());
                    self.spawn(session);
                }
                Err(e) => {
                    let _ = reply.send(e);
                }
            }
            return;
        }
        let id = msg.session_id().unwrap_or_default().to_owned();
        let actor = self.sessions.lock().expect("session table").get(&id).cloned();
        let delivered = actor.is_some_and(|tx| {
            tx.send(Request {
                msg,
                reply: reply.clone(),
            })
            .is_ok()
        });
        if !delivered {
            let _ = reply.send(ServerMessage::error(
                Some(&id),
                None,
                ErrorCode::UnknownSession,
                format!("no session {id}"),
            ));
        }
    }

    fn spawn(&self, session: Session) {
        let (tx, rx) = mpsc::unbounded_channel();
        let id = session.id().to_owned();
        self.sessions.lock().expect("session table").insert(id.clone(), tx);
        tracing::info!(session = %id, step = session.step_index(), "session created");
        let hub = self.clone();
        tokio::spawn(async move {
            run_session(session, rx, hub.takeover_window).await;
            hub.sessions.lock().expect("session table").remove(&id);
            tracing::info!(session = %id, "session closed");
        });
    }
}

fn log_step(session: &Session, msg: &ServerMessage) {
    if let ServerBody::StateUpdate(u) = &msg.body {
        if let Some(step) = &u.last_step {
            tracing::info!(
                session = session.id(),
                step = step.step_index,
                state = step.state_id,
                proposed = %step.proposed_action,
                executed = %step.executed_action,
                overridden = step.overridden,
                congratulated = step.congratulated,
                expert = step.expert.name(),
                reward = step.reward,
                "step"
            );
        }
    }
}

/// Serialized owner of one session.
async fn run_session(mut session: Session, mut rx: mpsc::UnboundedReceiver<Request>, window: Duration) {
    let window_ms = Some(window.as_millis() as u64);
    // pending takeover: deadline and who asked for the step
    let mut waiting: Option<(Instant, Outbox)> = None;
    loop {
        let request = match &waiting {
            Some((deadline, _)) => {
                tokio::select! {
                    r = rx.recv() => r,
                    _ = tokio::time::sleep_until(*deadline) => {
                        let (_, reply) = waiting.take().expect("waiting");
                        if let Some(update) = session.resolve() {
                            log_step(&session, &update);
                            let _ = reply.send(update);
                        }
                        continue;
                    }
                }
            }
            None => rx.recv().await,
        };
        let Some(Request { msg, reply }) = request else {
            return;
        };
        let close = matches!(msg, ClientMessage::Close { .. });
        let is_advance = matches!(msg, ClientMessage::Advance { .. });
        let out = apply(&mut session, msg, window_ms);
        for m in &out {
            log_step(&session, m);
        }
        if session.in_flight() {
            if is_advance && waiting.is_none() {
                waiting = Some((Instant::now() + window, reply.clone()));
            }
        } else {
            waiting = None;
        }
        for m in out {
            let _ = reply.send(m);
        }
        if close {
            return;
        }
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(hub): State<Hub>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, hub))
}

async fn connection(socket: WebSocket, hub: Hub) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<ServerMessage>();
    let writer = tokio::spawn(async move {
        while let Some(m) = rx.recv().await {
            if sink.send(Message::Text(m.to_json().into())).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(frame)) = stream.next().await {
        match frame {
            Message::Text(text) => match parse_client(&text) {
                Ok(msg) => hub.route(msg, &tx),
                Err(e) => {
                    let _ = tx.send(e);
                }
            },
            Message::Close(_) => break,
            _ => {}
        }
    }
    drop(tx);
    let _ = writer.await;
}

pub fn router(options: &ServeOptions) -> Router {
    let hub = Hub {
        sessions: Arc::default(),
        takeover_window: options.takeover_window,
    };
    let app = Router::new().route("/ws", get(ws_handler)).with_state(hub);
    match &options.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until the process is interrupted.
pub async fn serve(listener: TcpListener, options: ServeOptions) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(&options))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
