//! Scenario files: airfield, weather, agents and their scripts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::dynamics::{AircraftState, ControlLimits};
use crate::geo::{preferred_runway, AirfieldModel, LocalPoint, WindState};
use crate::planner::PlannerConfig;
use crate::predict::PredictConfig;
use crate::radio::{parse_metar, IntentKind, PilotIntent};
use crate::safety::SafetyConfig;
use crate::stl::RulesConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentKind {
    Ai,
    Scripted,
    Human,
}

/// A built-in airfield by name, or a full model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AirfieldSpec {
    Named(String),
    Model(AirfieldModel),
}

impl AirfieldSpec {
    pub fn resolve(&self) -> Result<AirfieldModel, EngineError> {
        let af = match self {
            AirfieldSpec::Named(n) if matches!(n.to_ascii_uppercase().as_str(), "BUTLER" | "KBTP") => {
                AirfieldModel::butler()
            }
            AirfieldSpec::Named(n) => return Err(EngineError::invalid("airfield", format!("unknown airfield {n:?}"))),
            AirfieldSpec::Model(m) => m.clone(),
        };
        af.validate().map_err(|e| EngineError::invalid("airfield", e.to_string()))?;
        Ok(af)
    }
}

impl Default for AirfieldSpec {
    fn default() -> Self {
        AirfieldSpec::Named("KBTP".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindSpec {
    pub direction_deg: f64,
    pub speed_kt: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub kind: IntentKind,
    /// `None` lets the agent pick the preferred runway for the wind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runway: Option<String>,
}

impl GoalSpec {
    pub fn intent(&self) -> PilotIntent {
        PilotIntent { kind: self.kind, runway: self.runway.clone() }
    }
}

/// Trigger for a script directive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Condition {
    /// A call from another agent (optionally a given one) whose intent names
    /// `runway` (and optionally has `intent`) has been heard.
    Heard {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intent: Option<IntentKind>,
        runway: String,
    },
    /// The agent is within `distance_m` of the point, horizontally.
    Near { x: f64, y: f64, distance_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    /// Broadcasts `text` verbatim, or a call composed from the agent's
    /// position and `intent`.
    Broadcast {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intent: Option<GoalSpec>,
    },
    SetGoal { goal: GoalSpec },
    /// Flies the listed `[x, y, z]` points, then resumes the goal route.
    FollowWaypoints { points: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Directive {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<Condition>,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    pub kind: AgentKind,
    /// Radio callsign; defaults to the upper-cased id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub callsign: Option<String>,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading_deg: f64,
    pub speed_mps: f64,
    pub goal: GoalSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<Directive>,
}

impl AgentSpec {
    pub fn callsign(&self) -> String {
        self.callsign.clone().unwrap_or_else(|| self.id.to_ascii_uppercase())
    }

    pub fn initial_state(&self) -> AircraftState {
        AircraftState::new(LocalPoint::new(self.x, self.y, self.z), self.heading_deg, self.speed_mps)
    }
}

/// How AI agents produce their nominal plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanningMode {
    #[default]
    Mcts,
    /// The waypoint follower alone; the safety filter still applies.
    Follow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AiConfig {
    pub replan_period_s: f64,
    pub planning: PlanningMode,
    pub safety_filter: bool,
    /// Seconds between repeated position reports on the same leg.
    pub report_period_s: f64,
}

impl Default for AiConfig {
    fn default() -> Self {
        AiConfig { replan_period_s: 5.0, planning: PlanningMode::Mcts, safety_filter: true, report_period_s: 120.0 }
    }
}

fn default_dt() -> f64 {
    1.0
}

fn default_time_limit() -> f64 {
    1200.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub airfield: AirfieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metar: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind: Option<WindSpec>,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
    /// Treat a loss of separation involving an AI agent as an invariant
    /// breach.
    #[serde(default = "default_true")]
    pub separation_invariant: bool,
    #[serde(default = "ControlLimits::pattern")]
    pub limits: ControlLimits,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub safety: SafetyConfig,
    #[serde(default)]
    pub rules: RulesConfig,
    #[serde(default)]
    pub predict: PredictConfig,
    #[serde(default)]
    pub ai: AiConfig,
    pub agents: Vec<AgentSpec>,
}

/// The runway-disagreement demo: a scripted pilot declares 08 against a
/// 260@12 wind while the AI flies the 26 pattern.
pub const DEMO_SCENARIO_JSON: &str = include_str!("../../scenarios/demo_stage.json");

impl Scenario {
    pub fn demo() -> Scenario {
        Scenario::from_json(DEMO_SCENARIO_JSON).expect("bundled demo scenario is valid")
    }

    /// Parses JSON, reporting the field path of the first error.
    pub fn from_json(text: &str) -> Result<Scenario, EngineError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de)
            .map_err(|e| EngineError::invalid(&e.path().to_string(), e.inner().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn wind(&self) -> Result<WindState, EngineError> {
        match (&self.metar, &self.wind) {
            (Some(m), _) => parse_metar(m).map(|r| r.wind).map_err(|e| EngineError::invalid("metar", e.to_string())),
            (None, Some(w)) => Ok(WindState::from_deg(w.direction_deg, w.speed_kt)),
            (None, None) => Ok(WindState::calm()),
        }
    }

    /// Checks cross-references and numeric ranges.
    pub fn validate(&self) -> Result<(), EngineError> {
        let af = self.airfield.resolve()?;
        let wind = self.wind()?;
        let _ = preferred_runway(&af, &wind);
        if !(self.dt_s > 0.0 && self.dt_s <= 1.0) {
            return Err(EngineError::invalid("dt_s", "must be in (0, 1]"));
        }
        let per_step = 5.0 / self.dt_s;
        if (per_step - per_step.round()).abs() > 1e-9 {
            return Err(EngineError::invalid("dt_s", "must divide the 5 s primitive duration"));
        }
        if !(self.time_limit_s > 0.0 && self.time_limit_s.is_finite()) {
            return Err(EngineError::invalid("time_limit_s", "must be positive"));
        }
        if !(self.ai.replan_period_s > 0.0) {
            return Err(EngineError::invalid("ai.replan_period_s", "must be positive"));
        }
        self.limits.validate().map_err(|e| EngineError::invalid("limits", e.to_string()))?;
        self.planner.validate().map_err(|e| EngineError::invalid("planner", e))?;
        self.safety.validate().map_err(|e| EngineError::invalid("safety", e.to_string()))?;
        if self.safety.d_safe_m > self.rules.d_min_m {
            return Err(EngineError::invalid("safety.d_safe_m", "must not exceed rules.d_min_m"));
        }
        if self.agents.is_empty() {
            return Err(EngineError::invalid("agents", "at least one agent required"));
        }
        let mut ids = BTreeSet::new();
        let mut callsigns = BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            let path = |f: &str| format!("agents[{i}].{f}");
            if a.id.is_empty() || !ids.insert(a.id.clone()) {
                return Err(EngineError::invalid(&path("id"), format!("duplicate or empty id {:?}", a.id)));
            }
            let cs = a.callsign();
            let cs_ok = (2..=10).contains(&cs.len()) && cs.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
            if !cs_ok || !callsigns.insert(cs.clone()) {
                return Err(EngineError::invalid(&path("callsign"), format!("bad or duplicate callsign {cs:?}")));
            }
            let st = a.initial_state();
            if !st.is_finite() || a.z < 0.0 {
                return Err(EngineError::invalid(&path("x"), "initial state must be finite and above ground"));
            }
            if !(a.speed_mps >= 0.0 && a.speed_mps <= self.limits.max_speed_mps) {
                return Err(EngineError::invalid(&path("speed_mps"), "outside the control limits"));
            }
            self.check_goal(&af, &a.goal, &path("goal"))?;
            for (j, d) in a.script.iter().enumerate() {
                let p = |f: &str| path(&format!("script[{j}].{f}"));
                if a.kind != AgentKind::Scripted {
                    return Err(EngineError::invalid(&p("action"), "only SCRIPTED agents carry scripts"));
                }
                if d.at_s.is_none() && d.when.is_none() {
                    return Err(EngineError::invalid(&p("at_s"), "needs at_s or when"));
                }
                match &d.when {
                    Some(Condition::Heard { from, runway, .. }) => {
                        if let Some(f) = from {
                            if !self.agents.iter().any(|o| &o.id == f) {
                                return Err(EngineError::invalid(&p("when.from"), format!("unknown agent {f:?}")));
                            }
                        }
                        af.runway(runway).map_err(|e| EngineError::invalid(&p("when.runway"), e.to_string()))?;
                    }
                    Some(Condition::Near { distance_m, .. }) if !(*distance_m > 0.0) => {
                        return Err(EngineError::invalid(&p("when.distance_m"), "must be positive"));
                    }
                    _ => {}
                }
                match &d.action {
                    Action::Broadcast { text: None, intent: None } => {
                        return Err(EngineError::invalid(&p("action"), "broadcast needs text or intent"));
                    }
                    Action::Broadcast { intent: Some(g), .. } | Action::SetGoal { goal: g } => {
                        self.check_goal(&af, g, &p("action"))?;
                    }
                    Action::FollowWaypoints { points } if points.is_empty() => {
                        return Err(EngineError::invalid(&p("action.points"), "no points"));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn check_goal(&self, af: &AirfieldModel, g: &GoalSpec, path: &str) -> Result<(), EngineError> {
        if let Some(r) = &g.runway {
            af.runway(r).map_err(|e| EngineError::invalid(&format!("{path}.runway"), e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"agents":[{"id":"ai","kind":"AI","x":0,"y":-1000,"z":300,"heading_deg":80,"speed_mps":50,"goal":{"kind":"LANDING"}}]}"#;

    #[test]
    fn minimal_scenario_takes_defaults() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.dt_s, 1.0);
        assert_eq!(s.limits, ControlLimits::pattern());
        assert_eq!(s.wind().unwrap(), WindState::calm());
        assert_eq!(s.agents[0].callsign(), "AI");
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn errors_carry_the_field_path() {
        let bad = MINIMAL.replace("\"z\":300", "\"z\":\"high\"");
        let e = Scenario::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("agents[0].z"), "{e}");
        let bad = MINIMAL.replace("\"goal\":{\"kind\":\"LANDING\"}", "\"goal\":{\"kind\":\"LANDING\",\"runway\":\"17\"}");
        let e = Scenario::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("agents[0].goal.runway"), "{e}");
        let e = Scenario::from_json(&MINIMAL.replace("\"agents\"", "\"dt_s\":0.7,\"agents\"")).unwrap_err();
        assert!(e.to_string().contains("dt_s"), "{e}");
    }

    #[test]
    fn metar_sets_the_wind() {
        let s = MINIMAL.replace("{\"agents\"", "{\"metar\":\"KBTP 121855Z 26012KT 10SM CLR 22/12 A3002\",\"agents\"");
        let s = Scenario::from_json(&s).unwrap();
        assert_eq!(s.wind().unwrap(), WindState::from_deg(260.0, 12.0));
    }
}
