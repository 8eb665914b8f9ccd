//! Fixed-timestep multi-agent world with a shared radio channel.

pub mod encounter;
pub mod export;
pub mod log;
pub mod scenario;
pub mod stages;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{from_csv, to_csv, trajectory_rows, write_run, TrajectoryRow, CSV_HEADER, EVENTS_FILE, TRAJECTORY_FILE};
pub use log::{AgentSnapshot, Event, EventLog, EventRecord};
pub use scenario::{Action, AgentKind, AgentSpec, AiConfig, Condition, Directive, GoalSpec, PlanningMode, Scenario};
pub use stages::{StageDetector, STAGE_DESCRIPTIONS};

use crate::dynamics::{
    apply_for, default_primitive_set, find_primitive, follow_with, step, AircraftState, ControlLimits,
    MotionPrimitive, Route, SpeedCmd, Turn, Vertical, PRIMITIVE_DURATION_S,
};
use crate::geo::{
    angle_diff_deg, classify_leg, preferred_runway, AirfieldModel, LocalPoint, PatternLeg, Runway, WindState,
    NM_TO_M,
};
use crate::planner::{self, OtherTrack, Plan, PlanContext, PlannerConfig};
use crate::predict::{forecast, AgentBelief};
use crate::radio::{
    generate_call, intent_of_call, parse_call, Cardinal, IntentKind, PilotIntent, PositionReport, RadioCall,
};
use crate::route::{is_landed, resync_landing, route_for};
use crate::safety::{check_plan, filter_plan, RiskyManeuver, SafetyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid scenario at {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("invariant breach at t={time_s}: {message}")]
    Invariant { time_s: f64, message: String },
}

impl EngineError {
    pub fn invalid(path: &str, message: impl Into<String>) -> Self {
        EngineError::Invalid { path: path.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentStatus {
    Active,
    Finished,
}

/// A command from a live pilot, applied at the start of the next tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanCommand {
    pub agent_id: String,
    #[serde(flatten)]
    pub action: HumanAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HumanAction {
    /// Held until the next control command.
    Control { turn: Turn, vertical: Vertical, speed_cmd: SpeedCmd },
    /// Free text put on the frequency as typed.
    Radio { text: String },
    /// Sets the pilot's goal and announces it.
    Intent {
        intent: IntentKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        runway: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioEntry {
    pub time_s: f64,
    pub from: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<RadioCall>,
}

#[derive(Debug, Clone, PartialEq)]
struct Transmission {
    from: String,
    text: String,
    call: Option<RadioCall>,
}

/// What an AI agent exposes for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiDebug {
    pub agent_id: String,
    pub goal_runway: String,
    pub most_likely_branch: Vec<[f64; 3]>,
    pub last_robustness: f64,
    pub safety_modified: bool,
}

#[derive(Debug, Clone)]
struct AiState {
    beliefs: BTreeMap<String, AgentBelief>,
    plan: Option<Plan>,
    next_decision_s: f64,
    replan: bool,
    /// Tick at which a call needing a reply was heard.
    reply_due: Option<u64>,
    last_leg: Option<PatternLeg>,
    last_report_s: f64,
    safety_modified: bool,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: String,
    pub kind: AgentKind,
    pub callsign: String,
    pub state: AircraftState,
    pub status: AgentStatus,
    pub goal: PilotIntent,
    pub runway: String,
    pub finished_on: Option<String>,
    route: Route,
    detour: Option<Route>,
    current: MotionPrimitive,
    next_decision_s: f64,
    script: Vec<(Directive, bool)>,
    heard: Vec<(String, RadioCall)>,
    ai: Option<AiState>,
}

impl Agent {
    /// Route the agent is currently following, a detour if one is active.
    pub fn route(&self) -> &Route {
        self.detour.as_ref().unwrap_or(&self.route)
    }

    pub fn current_leg(&self, airfield: &AirfieldModel) -> Option<PatternLeg> {
        let rwy = airfield.runway(&self.runway).ok()?;
        classify_leg(airfield, rwy, &self.state)
    }

    fn snapshot(&self, airfield: &AirfieldModel) -> AgentSnapshot {
        let p = self.state.position;
        AgentSnapshot {
            id: self.id.clone(),
            x: p.x,
            y: p.y,
            z: p.z,
            heading_deg: self.state.heading_deg,
            speed_mps: self.state.speed_mps,
            status: self.status,
            leg: self.current_leg(airfield).map(|l| l.as_str().to_string()),
        }
    }
}

/// The simulated world. One call to [`World::tick`] advances it by `dt`.
#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub airfield: AirfieldModel,
    pub wind: WindState,
    pub preferred_runway: String,
    pub time_s: f64,
    pub tick: u64,
    pub agents: Vec<Agent>,
    pub radio_log: Vec<RadioEntry>,
    /// Ticks during which some pair involving an AI agent was inside the
    /// separation cylinder.
    pub breach_ticks: u64,
    set: Vec<MotionPrimitive>,
    sent: Vec<Transmission>,
    inbound: VecDeque<HumanCommand>,
    stages: StageDetector,
    log: EventLog,
}

fn resolve_runway(airfield: &AirfieldModel, wind: &WindState, goal: &PilotIntent) -> String {
    goal.runway
        .as_deref()
        .and_then(|r| airfield.runway(r).ok())
        .unwrap_or_else(|| preferred_runway(airfield, wind))
        .designator
        .clone()
}

fn goal_route(airfield: &AirfieldModel, runway: &str, goal: &PilotIntent, state: &AircraftState) -> Route {
    airfield
        .runway(runway)
        .ok()
        .and_then(|r| route_for(airfield, r, goal.kind, state).ok())
        .unwrap_or_else(|| Route::new(Vec::new()))
}

/// Self-announce call for an aircraft at `state` heading for `runway`.
pub fn compose_call(airfield: &AirfieldModel, callsign: &str, state: &AircraftState, runway: &Runway, intent: PilotIntent) -> RadioCall {
    let position = match classify_leg(airfield, runway, state) {
        Some(leg) => PositionReport::Leg {
            leg,
            side: (leg == PatternLeg::Downwind).then_some(runway.pattern_side),
            runway: runway.designator.clone(),
        },
        None => {
            let p = state.position;
            let centre = LocalPoint::new(0.0, 0.0, 0.0);
            let bearing = centre.bearing_to(&p);
            PositionReport::Bearing {
                distance_nm: (p.horizontal_distance(&centre) / NM_TO_M).round().clamp(1.0, 99.0) as u32,
                cardinal: Cardinal::from_bearing(bearing),
                inbound: angle_diff_deg(state.heading_deg, bearing + 180.0).abs() < 90.0,
            }
        }
    };
    RadioCall::new(&airfield.name, callsign, Some(position), intent)
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<World, EngineError> {
        scenario.validate()?;
        let airfield = scenario.airfield.resolve()?;
        let wind = scenario.wind()?;
        let preferred = preferred_runway(&airfield, &wind).designator.clone();
        let set = default_primitive_set(&scenario.limits);
        let mut specs: Vec<&AgentSpec> = scenario.agents.iter().collect();
        specs.sort_by(|a, b| a.id.cmp(&b.id));
        let agents = specs
            .iter()
            .map(|a| {
                let state = a.initial_state();
                let goal = a.goal.intent();
                let runway = resolve_runway(&airfield, &wind, &goal);
                let route = goal_route(&airfield, &runway, &goal, &state);
                let ai = (a.kind == AgentKind::Ai).then(|| AiState {
                    beliefs: BTreeMap::new(),
                    plan: None,
                    next_decision_s: 0.0,
                    replan: true,
                    reply_due: None,
                    last_leg: airfield.runway(&runway).ok().and_then(|r| classify_leg(&airfield, r, &state)),
                    last_report_s: 0.0,
                    safety_modified: false,
                });
                Agent {
                    id: a.id.clone(),
                    kind: a.kind,
                    callsign: a.callsign(),
                    state,
                    status: AgentStatus::Active,
                    goal,
                    runway,
                    finished_on: None,
                    route,
                    detour: None,
                    current: set[0],
                    next_decision_s: 0.0,
                    script: a.script.iter().map(|d| (d.clone(), false)).collect(),
                    heard: Vec::new(),
                    ai,
                }
            })
            .collect();
        let mut log = EventLog::default();
        log.push(0.0, Event::Header { scenario: Box::new(scenario.clone()), seed: scenario.seed });
        Ok(World {
            scenario: scenario.clone(),
            airfield,
            wind,
            stages: StageDetector::new(&preferred),
            preferred_runway: preferred,
            time_s: 0.0,
            tick: 0,
            agents,
            radio_log: Vec::new(),
            breach_ticks: 0,
            set,
            sent: Vec::new(),
            inbound: VecDeque::new(),
            log,
        })
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    pub fn agent(&self, id: &str) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// Ids of agents a live pilot may control.
    pub fn human_agents(&self) -> Vec<String> {
        self.agents.iter().filter(|a| a.kind == AgentKind::Human).map(|a| a.id.clone()).collect()
    }

    pub fn snapshots(&self) -> Vec<AgentSnapshot> {
        self.agents.iter().map(|a| a.snapshot(&self.airfield)).collect()
    }

    pub fn ai_debug(&self) -> Vec<AiDebug> {
        self.agents
            .iter()
            .filter_map(|a| {
                let ai = a.ai.as_ref()?;
                let plan = ai.plan.as_ref();
                Some(AiDebug {
                    agent_id: a.id.clone(),
                    goal_runway: a.runway.clone(),
                    most_likely_branch: plan
                        .map(|p| p.most_likely_branch.iter().map(|q| [q.x, q.y, q.z]).collect())
                        .unwrap_or_default(),
                    last_robustness: plan.map(|p| p.robustness).unwrap_or(0.0),
                    safety_modified: ai.safety_modified,
                })
            })
            .collect()
    }

    /// True once every agent has finished or the time limit is reached.
    pub fn done(&self) -> bool {
        self.time_s >= self.scenario.time_limit_s - 1e-9 || self.agents.iter().all(|a| a.status == AgentStatus::Finished)
    }

    /// Queues a live-pilot command for the next tick.
    pub fn push_command(&mut self, cmd: HumanCommand) -> Result<(), String> {
        let a = self.agent(&cmd.agent_id).ok_or_else(|| format!("unknown agent {:?}", cmd.agent_id))?;
        if a.kind != AgentKind::Human {
            return Err(format!("agent {:?} is not human-controlled", a.id));
        }
        if a.status != AgentStatus::Active {
            return Err(format!("agent {:?} has finished", a.id));
        }
        match &cmd.action {
            HumanAction::Control { turn, vertical, speed_cmd } => {
                if find_primitive(&self.set, *turn, *vertical, *speed_cmd).is_none() {
                    return Err("control is not in the primitive set".into());
                }
            }
            HumanAction::Intent { runway: Some(r), .. } if self.airfield.runway(r).is_err() => {
                return Err(format!("unknown runway {r:?}"));
            }
            _ => {}
        }
        self.inbound.push_back(cmd);
        Ok(())
    }

    fn emit(&mut self, event: Event) {
        self.log.push(self.time_s, event);
    }

    fn stage(&mut self, s: Option<u8>) {
        if let Some(n) = s {
            self.emit(Event::Stage { stage: n, description: STAGE_DESCRIPTIONS[n as usize - 1].to_string() });
        }
    }

    fn transmit(&mut self, i: usize, text: String) {
        let call = parse_call(&text).ok();
        let from = self.agents[i].id.clone();
        let kind = self.agents[i].kind;
        self.emit(Event::Radio { from: from.clone(), text: text.clone(), call: call.clone() });
        self.radio_log.push(RadioEntry { time_s: self.time_s, from: from.clone(), text: text.clone(), call: call.clone() });
        let s = self.stages.on_broadcast(kind, call.as_ref());
        self.stage(s);
        self.sent.push(Transmission { from, text, call });
    }

    fn announce(&mut self, i: usize, intent: PilotIntent) {
        let a = &self.agents[i];
        let rwy = intent.runway.clone().unwrap_or_else(|| a.runway.clone());
        let Ok(runway) = self.airfield.runway(&rwy) else { return };
        let call = compose_call(&self.airfield, &a.callsign, &a.state, runway, intent);
        if let Ok(text) = generate_call(&call) {
            self.transmit(i, text);
        }
    }

    fn set_goal(&mut self, i: usize, goal: PilotIntent) {
        let runway = resolve_runway(&self.airfield, &self.wind, &goal);
        let a = &mut self.agents[i];
        a.route = goal_route(&self.airfield, &runway, &goal, &a.state);
        a.detour = None;
        a.goal = goal;
        a.runway = runway;
        a.next_decision_s = self.time_s;
        if let Some(ai) = &mut a.ai {
            ai.replan = true;
        }
    }

    /// Advances the world by one timestep.
    pub fn tick(&mut self) -> Result<(), EngineError> {
        let dt = self.scenario.dt_s;
        self.apply_commands();
        self.deliver();
        for i in 0..self.agents.len() {
            if self.agents[i].kind == AgentKind::Ai && self.agents[i].status == AgentStatus::Active {
                self.ai_step(i)?;
            }
        }
        for i in 0..self.agents.len() {
            if self.agents[i].kind == AgentKind::Scripted && self.agents[i].status == AgentStatus::Active {
                self.scripted_step(i);
            }
        }
        for i in 0..self.agents.len() {
            if self.agents[i].kind == AgentKind::Human && self.agents[i].status == AgentStatus::Active {
                let prim = self.agents[i].current;
                self.advance(i, &prim)?;
            }
        }
        self.record()?;
        self.tick += 1;
        self.time_s = self.tick as f64 * dt;
        Ok(())
    }

    fn apply_commands(&mut self) {
        while let Some(cmd) = self.inbound.pop_front() {
            let Some(i) = self.agents.iter().position(|a| a.id == cmd.agent_id) else { continue };
            if self.agents[i].status != AgentStatus::Active {
                continue;
            }
            self.emit(Event::Command { command: cmd.clone() });
            match cmd.action {
                HumanAction::Control { turn, vertical, speed_cmd } => {
                    if let Some(p) = find_primitive(&self.set, turn, vertical, speed_cmd) {
                        self.agents[i].current = p;
                    }
                }
                HumanAction::Radio { text } => self.transmit(i, text),
                HumanAction::Intent { intent, runway } => {
                    let goal = PilotIntent { kind: intent, runway };
                    self.set_goal(i, goal.clone());
                    self.announce(i, goal);
                }
            }
        }
    }

    /// Hands last tick's transmissions to every other agent, sender-id order.
    fn deliver(&mut self) {
        let mut msgs = std::mem::take(&mut self.sent);
        msgs.sort_by(|a, b| a.from.cmp(&b.from));
        for m in &msgs {
            let Some(call) = &m.call else { continue };
            let sender = self.agents.iter().find(|a| a.callsign == call.callsign).map(|a| a.id.clone());
            for i in 0..self.agents.len() {
                if self.agents[i].id == m.from {
                    continue;
                }
                self.agents[i].heard.push((m.from.clone(), call.clone()));
                if self.agents[i].kind != AgentKind::Ai {
                    continue;
                }
                let Some(about) = sender.clone() else { continue };
                let intent = intent_of_call(call, &self.airfield);
                if intent.kind == IntentKind::None {
                    continue;
                }
                let Some(other) = self.agents.iter().find(|a| a.id == about).map(|a| a.state) else { continue };
                let own_runway = self.agents[i].runway.clone();
                let (t, tick) = (self.time_s, self.tick);
                let ai = self.agents[i].ai.as_mut().expect("AI agent carries AI state");
                let b = ai.beliefs.entry(about.clone()).or_insert_with(|| AgentBelief::new(&about, other));
                b.hear(intent.clone(), t);
                ai.replan = true;
                if intent.runway.as_deref().is_some_and(|r| r != own_runway) {
                    ai.reply_due = ai.reply_due.or(Some(tick));
                }
                let id = self.agents[i].id.clone();
                self.emit(Event::Belief { agent: id, about, intent: intent.clone() });
                let s = self.stages.on_ai_belief(&intent);
                self.stage(s);
            }
        }
    }

    fn others_active(&self, i: usize) -> Vec<(String, AircraftState)> {
        self.agents
            .iter()
            .enumerate()
            .filter(|(j, a)| *j != i && a.status == AgentStatus::Active)
            .map(|(_, a)| (a.id.clone(), a.state))
            .collect()
    }

    fn ai_step(&mut self, i: usize) -> Result<(), EngineError> {
        let t = self.time_s;
        let others = self.others_active(i);
        {
            let ai = self.agents[i].ai.as_mut().expect("AI agent carries AI state");
            ai.beliefs.retain(|id, _| others.iter().any(|o| &o.0 == id));
            for (id, s) in &others {
                ai.beliefs.entry(id.clone()).or_insert_with(|| AgentBelief::new(id, *s)).observe(*s);
            }
        }

        // Announce: a reply to a conflicting call, or a new pattern leg.
        let leg = self.agents[i].current_leg(&self.airfield);
        let (reply, new_leg) = {
            let ai = self.agents[i].ai.as_ref().expect("AI agent carries AI state");
            // Crossing the threshold on a landing is still final.
            let leg = match (leg, ai.last_leg) {
                (Some(PatternLeg::Upwind), Some(PatternLeg::Final)) if self.agents[i].goal.kind.is_landing() => ai.last_leg,
                _ => leg,
            };
            let new_leg = leg.is_some() && leg != ai.last_leg;
            let stale = t - ai.last_report_s >= self.scenario.ai.report_period_s && leg.is_some();
            (ai.reply_due.is_some_and(|k| k < self.tick), new_leg || (stale && ai.last_report_s > 0.0))
        };
        if reply || new_leg {
            let goal = PilotIntent::new(
                match self.agents[i].goal.kind {
                    IntentKind::None => IntentKind::Landing,
                    k => k,
                },
                Some(&self.agents[i].runway),
            );
            self.announce(i, goal);
            let ai = self.agents[i].ai.as_mut().expect("AI agent carries AI state");
            if reply {
                ai.reply_due = None;
            }
            ai.last_report_s = t;
        }
        if let Some(ai) = self.agents[i].ai.as_mut() {
            if leg.is_some() {
                ai.last_leg = leg;
            }
        }

        let beliefs: Vec<AgentBelief> =
            self.agents[i].ai.as_ref().map(|ai| ai.beliefs.values().cloned().collect()).unwrap_or_default();
        let safety = self.safety_config(i);
        let due = {
            let ai = self.agents[i].ai.as_ref().expect("AI agent carries AI state");
            let unsafe_now = self.scenario.ai.safety_filter
                && ai.plan.as_ref().is_some_and(|p| !check_plan(p, &beliefs, &safety, t).safe);
            ai.replan || ai.plan.is_none() || t >= ai.next_decision_s - 1e-9 || unsafe_now
        };
        if due {
            self.decide(i, &beliefs, &safety);
        }
        let prim = self.agents[i].current;
        self.advance(i, &prim)?;
        let limits = self.scenario.limits;
        let a = &mut self.agents[i];
        a.route.capture_for(&a.state, &limits);
        if a.goal.kind.is_landing() {
            if let Ok(rwy) = self.airfield.runway(&a.runway) {
                resync_landing(&mut a.route, &self.airfield, rwy, &a.state);
            }
        }
        Ok(())
    }

    fn safety_config(&self, i: usize) -> SafetyConfig {
        let mut cfg = self.scenario.safety;
        if cfg.risky.is_none() {
            if let Ok(r) = self.airfield.runway(&self.agents[i].runway) {
                cfg.risky = Some(RiskyManeuver::new(r.pattern_side, self.airfield.pattern_altitude_m));
            }
        }
        cfg
    }

    fn decide(&mut self, i: usize, beliefs: &[AgentBelief], safety: &SafetyConfig) {
        let t = self.time_s;
        let a = &self.agents[i];
        let Ok(runway) = self.airfield.runway(&a.runway).cloned() else { return };
        let limits = self.scenario.limits;
        let mut ctx = PlanContext::new(&self.airfield, &runway, a.goal.kind, limits, self.scenario.rules);
        let mut predict = self.scenario.predict;
        predict.limits = limits;
        for b in beliefs {
            if let Ok(f) = forecast(b, &self.airfield, &self.wind, &predict) {
                ctx.others.push(OtherTrack::from_belief(b, f));
            }
        }
        let cfg = PlannerConfig {
            rng_seed: self.scenario.seed ^ (self.tick << 16) ^ i as u64,
            ..self.scenario.planner
        };
        let mut plan = match self.scenario.ai.planning {
            PlanningMode::Mcts => planner::plan(&a.state, &a.route, &ctx, &cfg),
            PlanningMode::Follow => {
                let mut route = a.route.clone();
                let mut s = a.state;
                let mut prims = Vec::with_capacity(cfg.max_depth);
                for _ in 0..cfg.max_depth {
                    let p = planner::social_policy(&s, &mut route, &runway, &limits, &self.set);
                    prims.push(p.id);
                    s = apply_for(&s, &p, PRIMITIVE_DURATION_S, 1.0, &limits);
                    route.capture_for(&s, &limits);
                }
                let mut p = Plan::unscored(&a.state, limits, prims, &runway.designator);
                let (trace, rho) = planner::evaluate(&ctx, &a.state, &p.primitives);
                p.predicted_trace = trace;
                p.robustness = rho;
                p.most_likely_branch = p.path.iter().step_by(5).map(|q| q.1).collect();
                p
            }
        };
        let mut modified = false;
        let mut min_distance = None;
        if self.scenario.ai.safety_filter {
            let out = filter_plan(&plan, beliefs, safety);
            modified = out.modified;
            min_distance = out.report.min_distance_m.is_finite().then_some(out.report.min_distance_m);
            plan = out.plan;
            if modified {
                let (trace, rho) = planner::evaluate(&ctx, &plan.start, &plan.primitives);
                plan.predicted_trace = trace;
                plan.robustness = rho;
            }
        }
        let id = a.id.clone();
        self.emit(Event::Plan {
            agent: id.clone(),
            goal_runway: plan.goal_runway.clone(),
            primitives: plan.primitives.clone(),
            robustness: plan.robustness,
            status: plan.status,
            branch: plan.most_likely_branch.iter().map(|q| [q.x, q.y, q.z]).collect(),
        });
        if self.scenario.ai.safety_filter {
            self.emit(Event::Safety { agent: id, modified, min_distance_m: min_distance, status: plan.status });
        }
        let s = self.stages.on_ai_plan(&plan.goal_runway);
        self.stage(s);
        let first = plan.first().unwrap_or(0);
        let period = self.scenario.ai.replan_period_s;
        let a = &mut self.agents[i];
        a.current = self.set[first as usize];
        let ai = a.ai.as_mut().expect("AI agent carries AI state");
        ai.plan = Some(plan);
        ai.replan = false;
        ai.next_decision_s = t + period;
        ai.safety_modified = modified;
    }

    fn scripted_step(&mut self, i: usize) {
        let t = self.time_s;
        for k in 0..self.agents[i].script.len() {
            let (d, fired) = &self.agents[i].script[k];
            if *fired || d.at_s.is_some_and(|at| t < at - 1e-9) {
                continue;
            }
            let ok = match &d.when {
                None => true,
                Some(Condition::Heard { from, intent, runway }) => self.agents[i].heard.iter().any(|(f, c)| {
                    from.as_ref().is_none_or(|x| x == f)
                        && intent.is_none_or(|k| k == c.intent.kind)
                        && c.intent.runway.as_deref() == Some(runway.as_str())
                }),
                Some(Condition::Near { x, y, distance_m }) => {
                    self.agents[i].state.position.horizontal_distance(&LocalPoint::new(*x, *y, 0.0)) <= *distance_m
                }
            };
            if !ok {
                continue;
            }
            let action = d.action.clone();
            self.agents[i].script[k].1 = true;
            match action {
                Action::Broadcast { text: Some(text), .. } => self.transmit(i, text),
                Action::Broadcast { intent: Some(g), .. } => self.announce(i, g.intent()),
                Action::Broadcast { .. } => {}
                Action::SetGoal { goal } => self.set_goal(i, goal.intent()),
                Action::FollowWaypoints { points } => {
                    let pts: Vec<LocalPoint> = points.iter().map(|p| LocalPoint::new(p[0], p[1], p[2])).collect();
                    let a = &mut self.agents[i];
                    a.detour = Some(Route::from_points(&pts));
                    a.next_decision_s = t;
                }
            }
        }
        let limits = self.scenario.limits;
        let a = &mut self.agents[i];
        if t >= a.next_decision_s - 1e-9 {
            if a.detour.as_ref().is_some_and(|d| d.on_last() && d.passed_active(&a.state.position)) {
                a.detour = None;
                let goal = a.goal.clone();
                a.route = goal_route(&self.airfield, &a.runway, &goal, &a.state);
            }
            let route = a.detour.as_mut().unwrap_or(&mut a.route);
            a.current = follow_with(&a.state, route, &limits, &self.set).unwrap_or(self.set[0]);
            a.next_decision_s = t + PRIMITIVE_DURATION_S;
        }
        let prim = a.current;
        // Scripted agents have no invariants of their own to breach.
        let _ = self.advance(i, &prim);
    }

    fn advance(&mut self, i: usize, prim: &MotionPrimitive) -> Result<(), EngineError> {
        let dt = self.scenario.dt_s;
        let limits: ControlLimits = self.scenario.limits;
        let a = &mut self.agents[i];
        a.state = step(&a.state, prim, dt, &limits).map_err(|e| EngineError::Invariant {
            time_s: self.time_s,
            message: format!("agent {}: {e}", a.id),
        })?;
        if let Some(r) = self.airfield.runways.iter().find(|r| is_landed(r, &a.state)) {
            a.status = AgentStatus::Finished;
            a.finished_on = Some(r.designator.clone());
            let (agent, runway) = (a.id.clone(), r.designator.clone());
            self.emit(Event::Finished { agent, runway });
            let on: Vec<Option<&str>> = self.agents.iter().map(|a| a.finished_on.as_deref()).collect();
            let s = self.stages.on_finished(&on);
            self.stage(s);
        }
        Ok(())
    }

    fn record(&mut self) -> Result<(), EngineError> {
        let cfg = &self.scenario.safety;
        let mut breach = None;
        for (i, a) in self.agents.iter().enumerate() {
            for b in &self.agents[i + 1..] {
                let active = a.status == AgentStatus::Active && b.status == AgentStatus::Active;
                let involves_ai = a.kind == AgentKind::Ai || b.kind == AgentKind::Ai;
                if !(active && involves_ai) {
                    continue;
                }
                let (p, q) = (a.state.position, b.state.position);
                let h = p.horizontal_distance(&q);
                if h < cfg.d_safe_m && (p.z - q.z).abs() < cfg.h_safe_m {
                    breach = Some(format!("{} and {} at {h:.1} m horizontal, {:.1} m vertical", a.id, b.id, (p.z - q.z).abs()));
                }
            }
        }
        let tick = self.tick;
        let agents = self.snapshots();
        self.log.push(self.time_s + self.scenario.dt_s, Event::State { tick, agents });
        if let Some(msg) = breach {
            self.breach_ticks += 1;
            if self.scenario.separation_invariant {
                return Err(EngineError::Invariant { time_s: self.time_s, message: format!("loss of separation: {msg}") });
            }
        }
        Ok(())
    }
}

/// Runs `scenario` to completion and returns its event log.
pub fn run_scenario(scenario: &Scenario) -> Result<EventLog, EngineError> {
    let mut w = World::new(scenario)?;
    while !w.done() {
        w.tick()?;
    }
    Ok(w.into_log())
}

/// Re-runs the scenario in a log's header one tick at a time, re-applying
/// its logged human commands at their original times.
#[derive(Debug, Clone)]
pub struct Replay {
    pub world: World,
    commands: VecDeque<(f64, HumanCommand)>,
}

impl Replay {
    pub fn new(log: &EventLog) -> Result<Replay, EngineError> {
        let (scenario, seed) = log.header().ok_or_else(|| EngineError::invalid("log", "missing header record"))?;
        let mut s = scenario.clone();
        s.seed = seed;
        let commands = log
            .records
            .iter()
            .filter_map(|r| match &r.event {
                Event::Command { command } => Some((r.t, command.clone())),
                _ => None,
            })
            .collect();
        Ok(Replay { world: World::new(&s)?, commands })
    }

    pub fn done(&self) -> bool {
        self.world.done()
    }

    pub fn tick(&mut self) -> Result<(), EngineError> {
        while self.commands.front().is_some_and(|(t, _)| *t <= self.world.time_s + 1e-9) {
            if let Some((_, c)) = self.commands.pop_front() {
                let _ = self.world.push_command(c);
            }
        }
        self.world.tick()
    }
}

pub fn replay(log: &EventLog) -> Result<EventLog, EngineError> {
    let mut r = Replay::new(log)?;
    while !r.done() {
        r.tick()?;
    }
    Ok(r.world.into_log())
}
