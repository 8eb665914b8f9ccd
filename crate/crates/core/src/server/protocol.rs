//! JSON messages exchanged with cockpit clients over the web socket.

use serde::{Deserialize, Serialize};

use crate::dynamics::{SpeedCmd, Turn, Vertical};
use crate::engine::{AgentKind, AgentStatus, AiDebug, HumanAction, RadioEntry, World};
use crate::geo::PatternLeg;
use crate::radio::IntentKind;

/// Number of most recent calls carried in every snapshot.
pub const RADIO_TAIL: usize = 10;
pub const MIN_TIMESCALE: f64 = 0.1;
pub const MAX_TIMESCALE: f64 = 10.0;

pub fn clamp_timescale(factor: f64) -> f64 {
    if factor.is_nan() {
        1.0
    } else {
        factor.clamp(MIN_TIMESCALE, MAX_TIMESCALE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotAgent {
    pub id: String,
    pub kind: AgentKind,
    pub callsign: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading_deg: f64,
    pub speed_mps: f64,
    pub status: AgentStatus,
    pub current_leg: Option<PatternLeg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time_s: f64,
    pub tick: u64,
    pub paused: bool,
    pub timescale: f64,
    pub agents: Vec<SnapshotAgent>,
    pub radio_tail: Vec<RadioEntry>,
    /// One entry per AI agent.
    pub ai_debug: Vec<AiDebug>,
}

impl Snapshot {
    pub fn of(world: &World, paused: bool, timescale: f64) -> Snapshot {
        let agents = world
            .agents
            .iter()
            .map(|a| SnapshotAgent {
                id: a.id.clone(),
                kind: a.kind,
                callsign: a.callsign.clone(),
                x: a.state.position.x,
                y: a.state.position.y,
                z: a.state.position.z,
                heading_deg: a.state.heading_deg,
                speed_mps: a.state.speed_mps,
                status: a.status,
                current_leg: a.current_leg(&world.airfield),
            })
            .collect();
        let tail = world.radio_log.len().saturating_sub(RADIO_TAIL);
        Snapshot {
            time_s: world.time_s,
            tick: world.tick,
            paused,
            timescale,
            agents,
            radio_tail: world.radio_log[tail..].to_vec(),
            ai_debug: world.ai_debug(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CommandBody {
    Control { turn: Turn, vertical: Vertical, speed_cmd: SpeedCmd },
    Radio { text: String },
    Intent {
        intent: IntentKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        runway: Option<String>,
    },
    Pause,
    Resume,
    Timescale { factor: f64 },
}

impl CommandBody {
    /// The engine action for commands that fly an aircraft.
    pub fn pilot_action(&self) -> Option<HumanAction> {
        match self {
            CommandBody::Control { turn, vertical, speed_cmd } => {
                Some(HumanAction::Control { turn: *turn, vertical: *vertical, speed_cmd: *speed_cmd })
            }
            CommandBody::Radio { text } => Some(HumanAction::Radio { text: text.clone() }),
            CommandBody::Intent { intent, runway } => Some(HumanAction::Intent { intent: *intent, runway: runway.clone() }),
            CommandBody::Pause | CommandBody::Resume | CommandBody::Timescale { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientCommand {
    #[serde(flatten)]
    pub body: CommandBody,
    /// Required for pilot commands, ignored for session commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_id: Option<String>,
    pub client_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Command(ClientCommand),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// Sent once on connect with the HUMAN agents nobody controls yet.
    Hello { agents: Vec<String> },
    Snapshot(Snapshot),
    Reject { seq: u64, reason: String },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}
