//! WebSocket session server with server-driven ticks.
//!
//! Each connection drives at most one live session. The latest action
//! received is applied at every tick (hold-last-action); actions arriving
//! between ticks overwrite each other instead of queueing.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use navrl_core::device::CONTROL_DT;
use navrl_core::env::Action;
use navrl_core::{NavError, Result};
use tokio::net::TcpListener;
use tokio::time::{interval, MissedTickBehavior};
use tower_http::services::ServeDir;

use crate::session::{Phase, SessionContext, SessionManager};
use crate::wire::{ClientMessage, ServerMessage, SessionId};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Where saved demonstrations are appended.
    pub corpus_dir: PathBuf,
    /// Console assets served at `/`.
    pub static_dir: Option<PathBuf>,
    pub tick: Duration,
}

impl ServerConfig {
    pub fn new(corpus_dir: PathBuf) -> Self {
        Self { corpus_dir, static_dir: None, tick: Duration::from_secs_f64(CONTROL_DT) }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub sessions: Arc<Mutex<SessionManager>>,
    pub config: Arc<ServerConfig>,
}

impl AppState {
    pub fn new(ctx: SessionContext, config: ServerConfig) -> Self {
        Self { sessions: Arc::new(Mutex::new(SessionManager::new(ctx))), config: Arc::new(config) }
    }

    fn with_sessions<R>(&self, f: impl FnOnce(&mut SessionManager) -> R) -> R {
        let mut guard = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut guard)
    }
}

const NO_CONSOLE: &str = "<!doctype html><title>navrl</title><p>Session endpoint at <code>/ws</code>; \
console assets not installed (pass --static-dir).</p>";

pub fn router(state: AppState) -> Router {
    let ws = Router::new().route("/ws", get(ws_handler)).with_state(state.clone());
    match &state.config.static_dir {
        Some(dir) => ws.fallback_service(ServeDir::new(dir)),
        None => ws.route("/", get(|| async { Html(NO_CONSOLE) })),
    }
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, state: AppState) -> Result<()> {
    axum::serve(listener, router(state)).await.map_err(NavError::Io)
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

struct Connection {
    session: Option<SessionId>,
    held: Action,
}

impl Connection {
    fn live(&self, state: &AppState) -> Option<SessionId> {
        let id = self.session?;
        state.with_sessions(|m| m.phase(id).ok()).filter(|p| *p == Phase::Live).map(|_| id)
    }

    fn check(&self, claimed: Option<SessionId>) -> Result<SessionId> {
        let own = self.session.ok_or_else(|| NavError::Protocol("no session started".into()))?;
        match claimed {
            Some(id) if id != own => Err(NavError::Protocol(format!("unknown session {id}"))),
            _ => Ok(own),
        }
    }

    fn handle(&mut self, state: &AppState, msg: ClientMessage) -> Result<Option<ServerMessage>> {
        match msg {
            ClientMessage::Start { branch, seed } => {
                if let Some(id) = self.live(state) {
                    return Err(NavError::Protocol(format!("session {id} is still live")));
                }
                let frame = state.with_sessions(|m| m.start(branch, seed))?;
                self.session = Some(frame.session);
                self.held = Action::zero();
                Ok(Some(ServerMessage::Frame(frame)))
            }
            ClientMessage::Action(a) => {
                let id = self.check(a.session)?;
                if self.live(state) != Some(id) {
                    return Err(NavError::Protocol(format!("session {id} is not live")));
                }
                self.held = a.to_action()?;
                Ok(None)
            }
            ClientMessage::Save { session } => {
                let id = self.check(session)?;
                let dir = &state.config.corpus_dir;
                let (records, path) = state.with_sessions(|m| m.save_demonstration(id, dir))?;
                Ok(Some(ServerMessage::Saved { session: id, records, path: path.display().to_string() }))
            }
            ClientMessage::Abort { session } => {
                let id = self.check(session)?;
                state.with_sessions(|m| m.abort(id))?;
                Ok(Some(ServerMessage::Aborted { session: id }))
            }
        }
    }
}

async fn connection(mut socket: WebSocket, state: AppState) {
    let mut conn = Connection { session: None, held: Action::zero() };
    let mut ticker = interval(state.config.tick);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        let reply = tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    let before = conn.live(&state);
                    let reply = ClientMessage::parse(&text).and_then(|m| conn.handle(&state, m));
                    if before.is_none() && conn.live(&state).is_some() {
                        ticker.reset();
                    }
                    match reply {
                        Ok(r) => r,
                        Err(e) => Some(ServerMessage::error(&e)),
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    Some(ServerMessage::Error { message: "protocol error: binary messages are not supported".into() })
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => None,
            },
            _ = ticker.tick() => match conn.live(&state) {
                Some(id) => match state.with_sessions(|m| m.session_step(id, conn.held)) {
                    Ok(frame) => Some(ServerMessage::Frame(frame)),
                    Err(e) => Some(ServerMessage::error(&e)),
                },
                None => None,
            },
        };
        if let Some(msg) = reply {
            if socket.send(Message::Text(msg.to_json().into())).await.is_err() {
                break;
            }
        }
    }
    if let Some(id) = conn.live(&state) {
        let _ = state.with_sessions(|m| m.abort(id));
    }
}
