mod common;

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use navrl_core::irl::{demo_file, load_demo_file};
use navrl_core::TargetBranch;
use navrl_service::server::{router, AppState, ServerConfig};
use navrl_service::session::SessionManager;
use navrl_service::wire::{ActionMessage, ClientMessage, Frame, FrameStatus, ServerMessage};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Client = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn spawn_server(config: ServerConfig) -> std::net::SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(AppState::new(common::context(), config));
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

async fn connect(addr: std::net::SocketAddr) -> Client {
    connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

async fn send(c: &mut Client, msg: &ClientMessage) {
    c.send(Message::text(serde_json::to_string(msg).unwrap())).await.unwrap();
}

async fn recv(c: &mut Client) -> ServerMessage {
    loop {
        let m = tokio::time::timeout(Duration::from_secs(20), c.next()).await.unwrap().unwrap().unwrap();
        if let Message::Text(t) = m {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn recv_frame(c: &mut Client) -> Frame {
    match recv(c).await {
        ServerMessage::Frame(f) => f,
        other => panic!("expected frame, got {other:?}"),
    }
}

fn fast(dir: &std::path::Path, tick_ms: u64) -> ServerConfig {
    ServerConfig { tick: Duration::from_millis(tick_ms), ..ServerConfig::new(dir.to_path_buf()) }
}

fn schedule(i: usize) -> ActionMessage {
    let table = [[0.2, 1.0, 0.0, 0.6], [-0.8, 0.9, 0.3, 1.0], [0.0, 0.0, 0.0, 0.0], [1.0, -0.3, -0.5, 0.2]];
    let a = table[(i / 9) % table.len()];
    ActionMessage { session: None, gw_rot: a[0], gw_trans: a[1], cath_rot: a[2], cath_trans: a[3] }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn headless_client_frames_replay_bitwise_from_the_saved_record() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_server(fast(dir.path(), 5)).await;
    let mut c = connect(addr).await;
    send(&mut c, &ClientMessage::Start { branch: TargetBranch::LICA, seed: 4 }).await;
    let first = recv_frame(&mut c).await;
    assert_eq!((first.tick, first.status), (0, FrameStatus::Running));
    let mut frames = vec![first.clone()];
    let mut i = 0;
    loop {
        let mut a = schedule(i);
        a.session = Some(first.session);
        send(&mut c, &ClientMessage::Action(a)).await;
        let f = recv_frame(&mut c).await;
        assert_eq!(f.tick, frames.last().unwrap().tick + 1);
        i += 1;
        let done = f.status != FrameStatus::Running;
        frames.push(f);
        if done {
            break;
        }
    }
    send(&mut c, &ClientMessage::Save { session: None }).await;
    match recv(&mut c).await {
        ServerMessage::Saved { session, records, .. } => assert_eq!((session, records), (first.session, 1)),
        other => panic!("expected saved, got {other:?}"),
    }
    let demo = load_demo_file(&demo_file(dir.path(), TargetBranch::LICA), TargetBranch::LICA).unwrap().remove(0);
    assert_eq!(demo.steps.len() + 1, frames.len());

    let mut m = SessionManager::new(common::context());
    let mut replay = vec![m.start(demo.branch, demo.seed.unwrap()).unwrap()];
    for s in &demo.steps {
        let a = navrl_core::env::Action::from_slice(&s.action).unwrap();
        replay.push(m.session_step(replay[0].session, a).unwrap());
    }
    for (got, want) in frames.iter().zip(&replay) {
        let bits = |f: &Frame| {
            let mut v: Vec<u64> = f.gw.iter().chain(&f.cath).flatten().map(|x| x.to_bits()).collect();
            v.extend(f.target.iter().map(|x| x.to_bits()));
            v
        };
        assert_eq!((got.tick, got.status), (want.tick, want.status));
        assert_eq!(bits(got), bits(want));
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn actions_faster_than_ticks_are_not_queued() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_server(fast(dir.path(), 150)).await;
    let mut c = connect(addr).await;
    send(&mut c, &ClientMessage::Start { branch: TargetBranch::RICA, seed: 1 }).await;
    let first = recv_frame(&mut c).await;
    for i in 0..60 {
        send(&mut c, &ClientMessage::Action(schedule(i))).await;
    }
    let f1 = recv_frame(&mut c).await;
    let f2 = recv_frame(&mut c).await;
    assert_eq!((f1.tick, f2.tick), (1, 2));
    send(&mut c, &ClientMessage::Abort { session: Some(first.session) }).await;
    loop {
        match recv(&mut c).await {
            ServerMessage::Aborted { session } => {
                assert_eq!(session, first.session);
                break;
            }
            ServerMessage::Frame(f) => assert!(f.tick <= 4, "ticks ran ahead: {}", f.tick),
            other => panic!("unexpected {other:?}"),
        }
    }
    send(&mut c, &ClientMessage::Save { session: None }).await;
    match recv(&mut c).await {
        ServerMessage::Error { message } => assert!(message.contains("domain error"), "{message}"),
        other => panic!("expected error, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_and_foreign_messages_get_errors_and_keep_the_connection() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_server(fast(dir.path(), 1000)).await;
    let mut c = connect(addr).await;
    c.send(Message::text("{not json")).await.unwrap();
    assert!(matches!(recv(&mut c).await, ServerMessage::Error { message } if message.contains("protocol error")));
    send(&mut c, &ClientMessage::Action(ActionMessage::zero(None))).await;
    assert!(matches!(recv(&mut c).await, ServerMessage::Error { message } if message.contains("no session")));
    c.send(Message::text(r#"{"type":"start","branch":"MCA","seed":1}"#)).await.unwrap();
    assert!(matches!(recv(&mut c).await, ServerMessage::Error { .. }));
    send(&mut c, &ClientMessage::Start { branch: TargetBranch::RICA, seed: 1 }).await;
    let f = recv_frame(&mut c).await;
    send(&mut c, &ClientMessage::Action(ActionMessage::zero(Some(f.session + 100)))).await;
    assert!(matches!(recv(&mut c).await, ServerMessage::Error { message } if message.contains("unknown session")));
    send(&mut c, &ClientMessage::Start { branch: TargetBranch::RICA, seed: 2 }).await;
    assert!(matches!(recv(&mut c).await, ServerMessage::Error { message } if message.contains("still live")));
}

#[test]
fn wire_messages_match_the_documented_schema() {
    let action: ClientMessage = serde_json::from_str(
        r#"{"type":"action","session":3,"gw_rot":0.5,"gw_trans":-1,"cath_rot":0,"cath_trans":1}"#,
    )
    .unwrap();
    assert_eq!(
        action,
        ClientMessage::Action(ActionMessage { session: Some(3), gw_rot: 0.5, gw_trans: -1.0, cath_rot: 0.0, cath_trans: 1.0 })
    );
    let start: ClientMessage = serde_json::from_str(r#"{"type":"start","branch":"LICA","seed":7}"#).unwrap();
    assert_eq!(start, ClientMessage::Start { branch: TargetBranch::LICA, seed: 7 });
    let save: ClientMessage = serde_json::from_str(r#"{"type":"save"}"#).unwrap();
    assert_eq!(save, ClientMessage::Save { session: None });

    let frame = ServerMessage::Frame(Frame {
        session: 1,
        tick: 2,
        gw: vec![[1.0, 2.0]],
        cath: vec![[3.0, 4.0]],
        target: [5.0, 6.0],
        status: FrameStatus::Success,
    });
    let v: serde_json::Value = serde_json::from_str(&frame.to_json()).unwrap();
    assert_eq!(
        v,
        serde_json::json!({"type":"frame","session":1,"tick":2,"gw":[[1.0,2.0]],"cath":[[3.0,4.0]],"target":[5.0,6.0],"status":"success"})
    );
    let err: serde_json::Value = serde_json::from_str(&ServerMessage::Error { message: "x".into() }.to_json()).unwrap();
    assert_eq!(err, serde_json::json!({"type":"error","message":"x"}));
}

async fn http_get(addr: std::net::SocketAddr, path: &str) -> String {
    let mut s = TcpStream::connect(addr).await.unwrap();
    s.write_all(format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").as_bytes()).await.unwrap();
    let mut out = String::new();
    s.read_to_string(&mut out).await.unwrap();
    out
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn console_assets_are_served_statically() {
    let corpus = tempfile::tempdir().unwrap();
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<p>console</p>").unwrap();
    std::fs::write(assets.path().join("app.js"), "console.log(1)").unwrap();
    let config = ServerConfig { static_dir: Some(assets.path().to_path_buf()), ..fast(corpus.path(), 100) };
    let addr = spawn_server(config).await;
    let index = http_get(addr, "/").await;
    assert!(index.starts_with("HTTP/1.1 200") && index.contains("<p>console</p>"), "{index}");
    let js = http_get(addr, "/app.js").await;
    assert!(js.contains("console.log(1)"));
    assert!(http_get(addr, "/missing.css").await.starts_with("HTTP/1.1 404"));

    let bare = spawn_server(fast(corpus.path(), 100)).await;
    assert!(http_get(bare, "/").await.contains("/ws"));
}
