//! Detects the six milestones of a coordinated landing after a runway
//! disagreement.

use super::scenario::AgentKind;
use crate::radio::{IntentKind, PilotIntent, RadioCall};

pub const STAGE_DESCRIPTIONS: [&str; 6] = [
    "human declares landing on a non-preferred runway",
    "AI belief records the declared runway",
    "AI broadcasts its goal on the preferred runway",
    "human announces a change to the preferred runway",
    "AI replans for the preferred runway",
    "all aircraft landed on the preferred runway",
];

/// Fires stages strictly in order; each hook returns the stage it fired.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDetector {
    preferred: String,
    declared: Option<String>,
    reached: u8,
}

impl StageDetector {
    pub fn new(preferred_runway: &str) -> Self {
        StageDetector { preferred: preferred_runway.to_string(), declared: None, reached: 0 }
    }

    pub fn reached(&self) -> u8 {
        self.reached
    }

    fn fire(&mut self, stage: u8, ok: bool) -> Option<u8> {
        (ok && self.reached + 1 == stage).then(|| {
            self.reached = stage;
            stage
        })
    }

    pub fn on_broadcast(&mut self, kind: AgentKind, call: Option<&RadioCall>) -> Option<u8> {
        let intent = call.map(|c| &c.intent)?;
        let rwy = intent.runway.as_deref();
        if kind == AgentKind::Ai {
            return self.fire(3, rwy == Some(self.preferred.as_str()));
        }
        if self.reached == 0 && intent.kind == IntentKind::Landing && rwy.is_some_and(|r| r != self.preferred) {
            self.declared = rwy.map(str::to_string);
            return self.fire(1, true);
        }
        self.fire(4, intent.kind == IntentKind::ChangeRunway && rwy == Some(self.preferred.as_str()))
    }

    pub fn on_ai_belief(&mut self, intent: &PilotIntent) -> Option<u8> {
        let ok = self.declared.is_some() && intent.runway == self.declared;
        self.fire(2, ok)
    }

    pub fn on_ai_plan(&mut self, goal_runway: &str) -> Option<u8> {
        self.fire(5, goal_runway == self.preferred)
    }

    /// `finished_on` holds the landing runway of every agent, `None` while
    /// still flying.
    pub fn on_finished(&mut self, finished_on: &[Option<&str>]) -> Option<u8> {
        let ok = finished_on.iter().all(|r| *r == Some(self.preferred.as_str()));
        self.fire(6, ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(kind: IntentKind, rwy: &str) -> RadioCall {
        RadioCall::new("BUTLER", "N1", None, PilotIntent::new(kind, Some(rwy)))
    }

    #[test]
    fn stages_fire_in_order_only() {
        let mut d = StageDetector::new("26");
        assert_eq!(d.on_ai_plan("26"), None);
        assert_eq!(d.on_broadcast(AgentKind::Ai, Some(&call(IntentKind::Landing, "26"))), None);
        assert_eq!(d.on_broadcast(AgentKind::Scripted, Some(&call(IntentKind::Landing, "08"))), Some(1));
        assert_eq!(d.on_ai_belief(&PilotIntent::landing("26")), None);
        assert_eq!(d.on_ai_belief(&PilotIntent::landing("08")), Some(2));
        assert_eq!(d.on_broadcast(AgentKind::Human, None), None);
        assert_eq!(d.on_broadcast(AgentKind::Ai, Some(&call(IntentKind::Landing, "26"))), Some(3));
        assert_eq!(d.on_ai_plan("26"), None);
        assert_eq!(d.on_broadcast(AgentKind::Scripted, Some(&call(IntentKind::ChangeRunway, "26"))), Some(4));
        assert_eq!(d.on_finished(&[Some("26"), Some("26")]), None);
        assert_eq!(d.on_ai_plan("26"), Some(5));
        assert_eq!(d.on_finished(&[Some("26"), None]), None);
        assert_eq!(d.on_finished(&[Some("26"), Some("26")]), Some(6));
        assert_eq!(d.reached(), 6);
    }
}
