//! Append-only event records and their newline-delimited JSON form.

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::{AgentStatus, EngineError, HumanCommand};
use crate::geo::LocalPoint;
use crate::planner::PlanStatus;
use crate::radio::{PilotIntent, RadioCall};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading_deg: f64,
    pub speed_mps: f64,
    pub status: AgentStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg: Option<String>,
}

impl AgentSnapshot {
    pub fn position(&self) -> LocalPoint {
        LocalPoint::new(self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Event {
    /// First record of every log: everything needed to replay the run.
    Header { scenario: Box<Scenario>, seed: u64 },
    /// A human command, logged at the tick it was applied.
    Command { command: HumanCommand },
    State { tick: u64, agents: Vec<AgentSnapshot> },
    Radio {
        from: String,
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        call: Option<RadioCall>,
    },
    /// A listener updated its belief about another agent from a call.
    Belief { agent: String, about: String, intent: PilotIntent },
    Plan {
        agent: String,
        goal_runway: String,
        primitives: Vec<u8>,
        robustness: f64,
        status: PlanStatus,
        branch: Vec<[f64; 3]>,
    },
    Safety {
        agent: String,
        modified: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_distance_m: Option<f64>,
        status: PlanStatus,
    },
    Stage { stage: u8, description: String },
    Finished { agent: String, runway: String },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Header { .. } => "HEADER",
            Event::Command { .. } => "COMMAND",
            Event::State { .. } => "STATE",
            Event::Radio { .. } => "RADIO",
            Event::Belief { .. } => "BELIEF",
            Event::Plan { .. } => "PLAN",
            Event::Safety { .. } => "SAFETY",
            Event::Stage { .. } => "STAGE",
            Event::Finished { .. } => "FINISHED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, t: f64, event: Event) {
        self.records.push(EventRecord { t, event });
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).unwrap_or_default());
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<EventLog, EngineError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: EventRecord = serde_json::from_str(line)
                .map_err(|e| EngineError::invalid(&format!("line {}", i + 1), e.to_string()))?;
            records.push(r);
        }
        Ok(EventLog { records })
    }

    pub fn header(&self) -> Option<(&Scenario, u64)> {
        match self.records.first().map(|r| &r.event) {
            Some(Event::Header { scenario, seed }) => Some((scenario, *seed)),
            _ => None,
        }
    }

    /// Stage numbers with their times, in log order.
    pub fn stages(&self) -> Vec<(u8, f64)> {
        self.records
            .iter()
            .filter_map(|r| match &r.event {
                Event::Stage { stage, .. } => Some((*stage, r.t)),
                _ => None,
            })
            .collect()
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.records.iter().filter(move |r| r.event.kind() == kind)
    }

    pub fn commands(&self) -> Vec<HumanCommand> {
        self.records
            .iter()
            .filter_map(|r| match &r.event {
                Event::Command { command } => Some(command.clone()),
                _ => None,
            })
            .collect()
    }
}
