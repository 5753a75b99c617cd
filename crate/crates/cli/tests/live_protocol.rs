use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use mbmf::teach::protocol::StateUpdate;
use mbmf::teach::{ServerBody, ServerMessage, SessionSnapshot};
use mbmf::tidy::Action;
use mbmf::StateId;
use mbmf_cli::server::{serve, ServeOptions};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn start(options: ServeOptions) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, options));
    format!("{addr}")
}

async fn connect(addr: &str) -> Socket {
    tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

async fn send(ws: &mut Socket, v: serde_json::Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

async fn recv(ws: &mut Socket) -> ServerMessage {
    loop {
        let frame = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("server answered")
            .unwrap()
            .unwrap();
        if let Message::Text(t) = frame {
            let raw: serde_json::Value = serde_json::from_str(&t).unwrap();
            assert_eq!(raw["protocol"], 1);
            assert!(raw.get("sessionId").is_some() && raw.get("stepIndex").is_some());
            return serde_json::from_value(raw).unwrap();
        }
    }
}

fn update(m: &ServerMessage) -> &StateUpdate {
    match &m.body {
        ServerBody::StateUpdate(u) => u,
        other => panic!("expected a state update, got {other:?}"),
    }
}

async fn snapshot(ws: &mut Socket, id: &str) -> SessionSnapshot {
    send(ws, serde_json::json!({"type": "snapshot", "sessionId": id})).await;
    match recv(ws).await.body {
        ServerBody::Snapshot { snapshot } => *snapshot,
        other => panic!("{other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn scripted_teaching_session() {
    let addr = start(ServeOptions {
        static_dir: None,
        takeover_window: Duration::from_millis(50),
    })
    .await;
    let mut ws = connect(&addr).await;
    send(&mut ws, serde_json::json!({"type": "create", "protocol": 1, "config": {"task": "tidy1"}})).await;
    let created = recv(&mut ws).await;
    let id = created.session_id.clone().unwrap();
    assert_eq!(created.step_index, Some(1000));

    let mut chart: Vec<usize> = Vec::new();
    let mut overridden = None;
    let mut congratulated = None;
    for _ in 0..50 {
        send(&mut ws, serde_json::json!({"type": "advance", "sessionId": id})).await;
        let proposal = recv(&mut ws).await;
        let ServerBody::Proposal(view) = proposal.body else {
            panic!("expected a proposal")
        };
        if view.takeover_possible && overridden.is_none() {
            let drop = if view.proposed_action == Action::PlaceInRed {
                Action::PlaceOnTable
            } else {
                Action::PlaceInRed
            };
            send(&mut ws, serde_json::json!({"type": "takeover", "sessionId": id, "dropAction": drop})).await;
            overridden = Some(drop);
        }
        let msg = recv(&mut ws).await;
        let u = update(&msg).clone();
        chart.push(msg.step_index.unwrap());
        let last = u.last_step.unwrap();
        if let Some(drop) = overridden.filter(|_| last.overridden) {
            assert_eq!(last.executed_action, drop);
            assert_ne!(last.proposed_action, drop);
        }
        if overridden.is_some() && congratulated.is_none() && !last.overridden {
            let before = snapshot(&mut ws, &id).await;
            send(&mut ws, serde_json::json!({"type": "congratulate", "sessionId": id, "stepIndex": msg.step_index})).await;
            let ack = recv(&mut ws).await;
            assert!(update(&ack).last_step.unwrap().congratulated);
            let (s, a) = (StateId(last.state_id), last.executed_action.id());
            congratulated = Some((s, a));
            // exactly G(s, a) changed
            let after = snapshot(&mut ws, &id).await;
            let mut expected = before.agent.flags.clone();
            assert!(!expected.get(s, a));
            expected.set(s, a, true);
            assert_eq!(after.agent.flags, expected);
            assert_eq!(after.agent.mf, before.agent.mf);
        }
    }
    assert!(overridden.is_some(), "no cube was held during the script");
    assert!(congratulated.is_some(), "no step was congratulated");
    let after = snapshot(&mut ws, &id).await;
    assert_eq!(after.stats.takeovers, 1);
    assert_eq!(after.stats.congratulations, 1);
    assert_eq!(after.stats.learning_steps, 50);
    assert_eq!(chart, (1001..=1050).collect::<Vec<_>>());

    // a second connection resynchronizes to the same step without duplicating points
    drop(ws);
    let mut again = connect(&addr).await;
    send(&mut again, serde_json::json!({"type": "resync", "sessionId": id})).await;
    let m = recv(&mut again).await;
    assert_eq!(m.step_index, Some(1050));
    let replayed = m.step_index.unwrap();
    if !chart.contains(&replayed) {
        chart.push(replayed);
    }
    assert_eq!(chart.len(), 50);

    send(&mut again, serde_json::json!({"type": "close", "sessionId": id})).await;
    assert!(matches!(recv(&mut again).await.body, ServerBody::SessionSummary(_)));
    send(&mut again, serde_json::json!({"type": "advance", "sessionId": id})).await;
    assert!(matches!(recv(&mut again).await.body, ServerBody::Error(_)));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn silence_executes_the_proposal_after_the_window() {
    let addr = start(ServeOptions {
        static_dir: None,
        takeover_window: Duration::from_millis(100),
    })
    .await;
    let mut ws = connect(&addr).await;
    send(&mut ws, serde_json::json!({"type": "create"})).await;
    let id = recv(&mut ws).await.session_id.unwrap();
    for _ in 0..200 {
        send(&mut ws, serde_json::json!({"type": "advance", "sessionId": id})).await;
        let ServerBody::Proposal(view) = recv(&mut ws).await.body else { panic!() };
        let started = std::time::Instant::now();
        let u = recv(&mut ws).await;
        if view.takeover_possible {
            assert!(started.elapsed() >= Duration::from_millis(80));
            assert_eq!(view.takeover_window_ms, Some(100));
            let last = update(&u).last_step.unwrap();
            assert_eq!(last.executed_action, view.proposed_action);
            assert!(!last.overridden);
            return;
        }
    }
    panic!("no cube was ever held");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_are_isolated_and_errors_reported() {
    let addr = start(ServeOptions::default()).await;
    let mut ws = connect(&addr).await;
    send(&mut ws, serde_json::json!({"type": "create", "config": {"master_seed": 4}})).await;
    let a = recv(&mut ws).await.session_id.unwrap();
    send(&mut ws, serde_json::json!({"type": "create", "config": {"master_seed": 4}})).await;
    let b = recv(&mut ws).await.session_id.unwrap();
    assert_ne!(a, b);

    ws.send(Message::Text("{not json".into())).await.unwrap();
    assert!(matches!(recv(&mut ws).await.body, ServerBody::Error(_)));
    send(&mut ws, serde_json::json!({"type": "create", "config": {"task": "tidy9"}})).await;
    let e = recv(&mut ws).await;
    assert!(matches!(e.body, ServerBody::Error(_)));
    assert_eq!(e.session_id, None);

    // identical seeds and inputs: interleaved sessions step identically
    let mut seen_a = Vec::new();
    let mut seen_b = Vec::new();
    for _ in 0..20 {
        for (id, seen) in [(&a, &mut seen_a), (&b, &mut seen_b)] {
            send(&mut ws, serde_json::json!({"type": "advance", "sessionId": id})).await;
            let ServerBody::Proposal(view) = recv(&mut ws).await.body else { panic!() };
            if view.takeover_possible {
                send(&mut ws, serde_json::json!({"type": "takeover", "sessionId": id, "dropAction": "PLACE_ON_TABLE"})).await;
            }
            let u = recv(&mut ws).await;
            seen.push(serde_json::to_string(&update(&u).last_step).unwrap());
        }
    }
    assert_eq!(seen_a, seen_b);
}

#[tokio::test]
async fn static_bundle_is_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>teach</h1>").unwrap();
    let addr = start(ServeOptions {
        static_dir: Some(dir.path().to_owned()),
        ..ServeOptions::default()
    })
    .await;
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut tcp = tokio::net::TcpStream::connect(&addr).await.unwrap();
    tcp.write_all(b"GET /index.html HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut body = String::new();
    tcp.read_to_string(&mut body).await.unwrap();
    assert!(body.starts_with("HTTP/1.1 200"), "{body}");
    assert!(body.contains("<h1>teach</h1>"));
}
