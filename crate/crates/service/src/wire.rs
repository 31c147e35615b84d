//! JSON text messages exchanged with the demonstration console.

use navrl_core::env::Action;
use navrl_core::{NavError, Result, TargetBranch};
use serde::{Deserialize, Serialize};

pub type SessionId = u64;

/// Device velocity command as sent by the console.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionMessage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionId>,
    pub gw_rot: f64,
    pub gw_trans: f64,
    pub cath_rot: f64,
    pub cath_trans: f64,
}

impl ActionMessage {
    pub fn zero(session: Option<SessionId>) -> Self {
        Self { session, gw_rot: 0.0, gw_trans: 0.0, cath_rot: 0.0, cath_trans: 0.0 }
    }

    /// Environment action; rejects non-finite channels.
    pub fn to_action(&self) -> Result<Action> {
        let v = [self.gw_rot, self.gw_trans, self.cath_rot, self.cath_trans];
        if v.iter().any(|x| !x.is_finite()) {
            return Err(NavError::Protocol("action channels must be finite".into()));
        }
        Ok(Action::new(v[0], v[1], v[2], v[3]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Action(ActionMessage),
    Start {
        branch: TargetBranch,
        seed: u64,
    },
    Save {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<SessionId>,
    },
    Abort {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<SessionId>,
    },
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NavError::Protocol(format!("malformed message: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Running,
    Success,
    Timeout,
}

/// Render state after a tick: device polylines and target projected onto the image plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub session: SessionId,
    pub tick: u64,
    pub gw: Vec<[f64; 2]>,
    pub cath: Vec<[f64; 2]>,
    pub target: [f64; 2],
    pub status: FrameStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Frame(Frame),
    Saved { session: SessionId, records: usize, path: String },
    Aborted { session: SessionId },
    Error { message: String },
}

impl ServerMessage {
    pub fn error(e: &NavError) -> Self {
        ServerMessage::Error { message: e.to_string() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}
