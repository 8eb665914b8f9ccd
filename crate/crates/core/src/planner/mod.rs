//! Motion-primitive planning: UCT search with rule-penalized rewards and a
//! pattern-following rollout policy.

pub mod mcts;

pub use mcts::{search, uct_score, Node, SearchConfig, SearchEnv, Tree};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    apply_for, default_primitive_set, follow_with, AircraftState, ControlLimits, MotionPrimitive, Route,
    PRIMITIVE_DURATION_S,
};
use crate::geo::{pattern_corridor_margin, AirfieldModel, LocalPoint, Runway, WindState};
use crate::predict::{forecast, AgentBelief, PredictConfig, PredictError, TrajectoryForecast};
use crate::radio::{IntentKind, PilotIntent};
use crate::route::{is_landed, resync_landing, route_for};
use crate::stl::{pattern_rules, robustness, rule_bodies, Formula, OtherSample, RuleTrace, RulesConfig};

/// Robustness, in meters, that costs one unit of penalty weight.
const ROBUSTNESS_SCALE_M: f64 = 100.0;
const STEP_REWARD_MIN: f64 = -100.0;
const STEP_REWARD_MAX: f64 = 1.0;
/// Audit stride of predicted traces.
pub const TRACE_STRIDE_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub iterations: usize,
    pub max_depth: usize,
    pub uct_c: f64,
    pub discount: f64,
    pub stl_penalty_weight: f64,
    pub progress_weight: f64,
    pub social_weight: f64,
    /// Weight of departing from the pattern-following policy's choice.
    pub prior_weight: f64,
    /// Chance that a rollout step takes a uniformly random primitive.
    pub rollout_epsilon: f64,
    pub rng_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            iterations: 2000,
            max_depth: 12,
            uct_c: 1.414,
            discount: 0.95,
            stl_penalty_weight: 10.0,
            progress_weight: 1.0,
            social_weight: 0.5,
            prior_weight: 0.5,
            rollout_epsilon: 0.0,
            rng_seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.iterations == 0 {
            return Err("iterations must be at least 1".into());
        }
        if self.max_depth == 0 {
            return Err("max_depth must be at least 1".into());
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(format!("discount {} outside (0, 1]", self.discount));
        }
        if !(self.stl_penalty_weight >= 0.0 && self.uct_c >= 0.0) {
            return Err("weights must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.rollout_epsilon) {
            return Err(format!("rollout_epsilon {} outside [0, 1]", self.rollout_epsilon));
        }
        Ok(())
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            iterations: self.iterations,
            max_depth: self.max_depth,
            uct_c: self.uct_c,
            discount: self.discount,
            seed: self.rng_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanStatus {
    Nominal,
    /// Every first primitive breaches separation; the plan is the least bad step.
    Degraded,
}

/// Another aircraft as the planner expects it to move.
#[derive(Debug, Clone, PartialEq)]
pub struct OtherTrack {
    pub start: LocalPoint,
    pub t0: f64,
    pub forecast: TrajectoryForecast,
}

impl OtherTrack {
    pub fn from_belief(b: &AgentBelief, forecast: TrajectoryForecast) -> Self {
        OtherTrack { start: b.last_state.position, t0: b.last_state.time_s, forecast }
    }

    pub fn position_at(&self, t: f64) -> LocalPoint {
        self.forecast.position_at(t, &self.start, self.t0)
    }

    fn sample_at(&self, t: f64) -> OtherSample {
        let p = self.position_at(t);
        let q = self.position_at(t + 1.0);
        OtherSample { position: p, velocity: (q.x - p.x, q.y - p.y, q.z - p.z) }
    }
}

/// Per-step ingredients of the rollout reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Reduction in distance to the targeted waypoint, meters.
    pub progress_m: f64,
    /// Rule robustness over the step.
    pub robustness: f64,
    /// Mean distance outside the pattern corridors as a fraction of pattern width, in `[0, 1]`.
    pub corridor_deviation: f64,
    /// How far the action is from the policy's, in `[0, 1]`.
    pub prior_mismatch: f64,
    /// Distance a cruising aircraft covers in one step; normalizes progress.
    pub nominal_step_m: f64,
}

/// Shaped reward of one step, clamped to `[-100, 1]`.
pub fn step_reward(o: &StepOutcome, cfg: &PlannerConfig) -> f64 {
    let progress = if o.nominal_step_m > 0.0 { o.progress_m / o.nominal_step_m } else { 0.0 };
    let r = cfg.progress_weight * progress
        + cfg.stl_penalty_weight * o.robustness.min(0.0) / ROBUSTNESS_SCALE_M
        - cfg.social_weight * o.corridor_deviation
        - cfg.prior_weight * o.prior_mismatch;
    r.clamp(STEP_REWARD_MIN, STEP_REWARD_MAX)
}

/// Discounted sum of [`step_reward`] over a rollout.
pub fn rollout_reward(steps: &[StepOutcome], cfg: &PlannerConfig) -> f64 {
    let mut g = 0.0;
    let mut disc = 1.0;
    for s in steps {
        g += disc * step_reward(s, cfg);
        disc *= cfg.discount;
    }
    g
}

/// The pattern-following default policy.
///
/// A landed aircraft holds the neutral primitive.
pub fn social_policy(
    state: &AircraftState,
    route: &mut Route,
    runway: &Runway,
    limits: &ControlLimits,
    set: &[MotionPrimitive],
) -> MotionPrimitive {
    if is_landed(runway, state) {
        return set[0];
    }
    follow_with(state, route, limits, set).unwrap_or(set[0])
}

/// Everything the planner needs about the world, frozen for one search.
#[derive(Debug, Clone)]
pub struct PlanContext {
    pub airfield: AirfieldModel,
    pub runway: Runway,
    pub limits: ControlLimits,
    pub rules: RulesConfig,
    pub others: Vec<OtherTrack>,
    pub set: Vec<MotionPrimitive>,
    pub lands: bool,
}

impl PlanContext {
    pub fn new(airfield: &AirfieldModel, runway: &Runway, goal: IntentKind, limits: ControlLimits, rules: RulesConfig) -> Self {
        PlanContext {
            airfield: airfield.clone(),
            runway: runway.clone(),
            limits,
            rules,
            others: Vec::new(),
            set: default_primitive_set(&limits),
            lands: goal.is_landing(),
        }
    }

    fn others_at(&self, t: f64) -> Vec<OtherSample> {
        self.others.iter().map(|o| o.sample_at(t)).collect()
    }

    fn row(&self, s: &AircraftState, prim: &MotionPrimitive) -> [f64; 7] {
        crate::stl::channel_row(&self.rules, &self.airfield, &self.runway, s, prim.turn, &self.others_at(s.time_s))
    }

    fn landed(&self, s: &AircraftState) -> bool {
        self.lands && is_landed(&self.runway, s)
    }

    /// Flies `prim` for one primitive period at the audit stride.
    /// Returns the end state and one row after each sub-step.
    fn fly(&self, s: &AircraftState, prim: &MotionPrimitive) -> (AircraftState, Vec<[f64; 7]>) {
        let mut st = *s;
        let n = (prim.duration_s / TRACE_STRIDE_S).round().max(1.0) as usize;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            if self.landed(&st) {
                st.time_s += TRACE_STRIDE_S;
            } else {
                st = apply_for(&st, prim, TRACE_STRIDE_S, TRACE_STRIDE_S, &self.limits);
            }
            rows.push(self.row(&st, prim));
        }
        (st, rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanState {
    pub ego: AircraftState,
    pub route: Route,
    pub finished: bool,
}

struct Env<'a> {
    ctx: &'a PlanContext,
    cfg: &'a PlannerConfig,
    bodies: Formula,
}

impl Env<'_> {
    fn nominal_step_m(&self) -> f64 {
        self.ctx.limits.cruise_speed_mps * PRIMITIVE_DURATION_S
    }

    fn policy_action(&self, s: &PlanState) -> u8 {
        let mut route = s.route.clone();
        social_policy(&s.ego, &mut route, &self.ctx.runway, &self.ctx.limits, &self.ctx.set).id
    }
}

/// Component-wise distance between two primitives: turn and vertical count
/// 0.4 each, speed 0.2.
pub fn prior_mismatch(policy: &MotionPrimitive, action: &MotionPrimitive) -> f64 {
    let mut d = 0.0;
    if policy.turn != action.turn {
        d += 0.4;
    }
    if policy.vertical != action.vertical {
        d += 0.4;
    }
    if policy.speed_cmd != action.speed_cmd {
        d += 0.2;
    }
    d
}

impl SearchEnv for Env<'_> {
    type State = PlanState;

    fn actions(&self, _: &PlanState) -> Vec<u8> {
        self.ctx.set.iter().map(|p| p.id).collect()
    }

    fn step(&self, s: &PlanState, action: u8, depth: usize, _: &mut ChaCha8Rng) -> (PlanState, f64, bool) {
        let prim = self.ctx.set[action as usize];
        let mut route = s.route.clone();
        let target = route.active_point().map(|p| p.point);
        let (end, rows) = self.ctx.fly(&s.ego, &prim);
        let progress_m = target.map_or(0.0, |t| s.ego.position.horizontal_distance(&t) - end.position.horizontal_distance(&t));
        route.capture_for(&end, &self.ctx.limits);
        if self.ctx.lands {
            resync_landing(&mut route, &self.ctx.airfield, &self.ctx.runway, &end);
        }
        let trace = RuleTrace { stride_s: TRACE_STRIDE_S, rows };
        let rho = (0..trace.rows.len())
            .map(|k| robustness(&self.bodies, &trace, k).unwrap_or(f64::NEG_INFINITY))
            .fold(f64::INFINITY, f64::min);
        let width = self.ctx.airfield.pattern_width_m.max(1.0);
        let dev = trace.rows.iter().map(|r| (-r[1]).max(0.0) / width).sum::<f64>() / trace.rows.len() as f64;
        let outcome = StepOutcome {
            progress_m,
            robustness: rho,
            corridor_deviation: dev.min(1.0),
            prior_mismatch: prior_mismatch(&self.ctx.set[self.policy_action(s) as usize], &prim),
            nominal_step_m: self.nominal_step_m(),
        };
        let mut r = step_reward(&outcome, self.cfg);
        let finished = self.ctx.landed(&end);
        if finished {
            // A landed aircraft keeps earning the maximum for the rest of the horizon.
            let rem = self.cfg.max_depth.saturating_sub(depth) as i32;
            let g = self.cfg.discount;
            r = if (1.0 - g).abs() < 1e-12 { rem as f64 } else { (1.0 - g.powi(rem)) / (1.0 - g) };
        }
        (PlanState { ego: end, route, finished }, r, finished)
    }

    fn rollout_action(&self, s: &PlanState, rng: &mut ChaCha8Rng) -> u8 {
        if rng.random::<f64>() < self.cfg.rollout_epsilon {
            return rng.random_range(0..self.ctx.set.len()) as u8;
        }
        self.policy_action(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub start: AircraftState,
    pub limits: ControlLimits,
    pub primitives: Vec<u8>,
    /// Ego positions at the audit stride, starting at the plan time.
    pub path: Vec<(f64, LocalPoint)>,
    #[serde(skip)]
    pub predicted_trace: RuleTrace,
    pub robustness: f64,
    pub most_likely_branch: Vec<LocalPoint>,
    pub status: PlanStatus,
    pub goal_runway: String,
}

impl Plan {
    /// A nominal plan over `primitives` with its path but no rule trace.
    /// Robustness reads 0 until the plan is evaluated.
    pub fn unscored(start: &AircraftState, limits: ControlLimits, primitives: Vec<u8>, goal_runway: &str) -> Plan {
        let set = default_primitive_set(&limits);
        Plan {
            start: *start,
            limits,
            path: simulate_primitives(start, &primitives, &set, &limits),
            primitives,
            predicted_trace: RuleTrace::new(TRACE_STRIDE_S),
            robustness: 0.0,
            most_likely_branch: Vec::new(),
            status: PlanStatus::Nominal,
            goal_runway: goal_runway.to_string(),
        }
    }

    pub fn first(&self) -> Option<u8> {
        self.primitives.first().copied()
    }
}

/// Positions at the audit stride from flying `primitives` back to back.
pub fn simulate_primitives(
    start: &AircraftState,
    primitives: &[u8],
    set: &[MotionPrimitive],
    limits: &ControlLimits,
) -> Vec<(f64, LocalPoint)> {
    let mut s = *start;
    let mut out = vec![(s.time_s, s.position)];
    for &id in primitives {
        let prim = set[id as usize];
        let n = (prim.duration_s / TRACE_STRIDE_S).round().max(1.0) as usize;
        for _ in 0..n {
            s = apply_for(&s, &prim, TRACE_STRIDE_S, TRACE_STRIDE_S, limits);
            out.push((s.time_s, s.position));
        }
    }
    out
}

/// Recomputes the predicted trace and robustness of `primitives` from `start`.
pub fn evaluate(ctx: &PlanContext, start: &AircraftState, primitives: &[u8]) -> (RuleTrace, f64) {
    let mut s = *start;
    let mut trace = RuleTrace::new(TRACE_STRIDE_S);
    let first = ctx.set[primitives.first().copied().unwrap_or(0) as usize];
    trace.rows.push(ctx.row(&s, &first));
    for &id in primitives {
        let (end, rows) = ctx.fly(&s, &ctx.set[id as usize]);
        trace.rows.extend(rows);
        s = end;
    }
    let rules = pattern_rules(&ctx.airfield, &ctx.runway, &ctx.rules);
    let rho = robustness(&rules, &trace, 0).unwrap_or(f64::NEG_INFINITY);
    (trace, rho)
}

fn hard_breach(ctx: &PlanContext, rows: &[[f64; 7]]) -> bool {
    rows.iter().any(|r| r[0] < ctx.rules.d_min_m)
}

fn assemble(ctx: &PlanContext, start: &AircraftState, primitives: Vec<u8>, branch: Vec<LocalPoint>, status: PlanStatus) -> Plan {
    let (predicted_trace, robustness) = evaluate(ctx, start, &primitives);
    Plan {
        start: *start,
        limits: ctx.limits,
        path: simulate_primitives(start, &primitives, &ctx.set, &ctx.limits),
        primitives,
        predicted_trace,
        robustness,
        most_likely_branch: branch,
        status,
        goal_runway: ctx.runway.designator.clone(),
    }
}

/// Searches from `ego` flying `route` and returns the visit-greedy plan
/// together with the tree.
pub fn plan_with_tree(
    ego: &AircraftState,
    route: &Route,
    ctx: &PlanContext,
    cfg: &PlannerConfig,
) -> (Plan, Tree<PlanState>) {
    let bodies = Formula::all(rule_bodies(&ctx.airfield, &ctx.rules).into_iter().map(|(_, f)| f).collect())
        .unwrap_or_else(|| Formula::ge("sep", f64::NEG_INFINITY));
    let env = Env { ctx, cfg, bodies: bodies.clone() };
    let root = PlanState { ego: *ego, route: route.clone(), finished: ctx.landed(ego) };
    let tree = search(&env, root, &cfg.search());

    // Degraded when every first step breaches the hard separation floor.
    let firsts: Vec<(u8, bool, f64)> = ctx
        .set
        .iter()
        .map(|p| {
            let (_, rows) = ctx.fly(ego, p);
            let trace = RuleTrace { stride_s: TRACE_STRIDE_S, rows };
            let rho = (0..trace.rows.len())
                .map(|k| robustness(&bodies, &trace, k).unwrap_or(f64::NEG_INFINITY))
                .fold(f64::INFINITY, f64::min);
            (p.id, hard_breach(ctx, &trace.rows), rho)
        })
        .collect();
    if !ctx.others.is_empty() && firsts.iter().all(|f| f.1) {
        let mut best = firsts[0];
        for f in &firsts[1..] {
            if f.2 > best.2 {
                best = *f;
            }
        }
        let end = ctx.fly(ego, &ctx.set[best.0 as usize]).0;
        let plan = assemble(ctx, ego, vec![best.0], vec![ego.position, end.position], PlanStatus::Degraded);
        return (plan, tree);
    }
    let branch = most_likely_branch(&tree);
    let mut primitives = tree.greedy_actions();
    if primitives.is_empty() {
        primitives.push(0);
    }
    let plan = assemble(ctx, ego, primitives, branch, PlanStatus::Nominal);
    (plan, tree)
}

/// [`plan_with_tree`] without the tree.
pub fn plan(ego: &AircraftState, route: &Route, ctx: &PlanContext, cfg: &PlannerConfig) -> Plan {
    plan_with_tree(ego, route, ctx, cfg).0
}

/// Ego positions along the most-visited branch, root first.
pub fn most_likely_branch(tree: &Tree<PlanState>) -> Vec<LocalPoint> {
    tree.greedy_path().iter().map(|&i| tree.nodes[i].state.ego.position).collect()
}

/// Builds a context and route for `goal` from beliefs about other traffic,
/// then plans.
#[allow(clippy::too_many_arguments)]
pub fn plan_for_goal(
    ego: &AircraftState,
    goal: &PilotIntent,
    beliefs: &[AgentBelief],
    airfield: &AirfieldModel,
    wind: &WindState,
    limits: ControlLimits,
    predict: &PredictConfig,
    rules: RulesConfig,
    cfg: &PlannerConfig,
) -> Result<Plan, PredictError> {
    let rwy = match goal.runway.as_deref() {
        Some(r) => airfield.runway(r).ok().cloned(),
        None => None,
    }
    .unwrap_or_else(|| crate::geo::preferred_runway(airfield, wind).clone());
    let mut ctx = PlanContext::new(airfield, &rwy, goal.kind, limits, rules);
    for b in beliefs {
        ctx.others.push(OtherTrack::from_belief(b, forecast(b, airfield, wind, predict)?));
    }
    let route = route_for(airfield, &rwy, goal.kind, ego).unwrap_or_else(|_| Route::new(Vec::new()));
    Ok(plan(ego, &route, &ctx, cfg))
}

/// Fraction of the plan horizon over which `p` stays inside a pattern corridor.
pub fn corridor_fraction(airfield: &AirfieldModel, runway: &Runway, states: &[AircraftState]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    states.iter().filter(|s| pattern_corridor_margin(airfield, runway, s) >= 0.0).count() as f64 / states.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{leg_heading, pattern_waypoints, PatternLeg};

    fn ctx(rwy: &str) -> (AirfieldModel, PlanContext) {
        let af = AirfieldModel::butler();
        let r = af.runway(rwy).unwrap().clone();
        let c = PlanContext::new(&af, &r, IntentKind::Landing, ControlLimits::pattern(), RulesConfig::default());
        (af, c)
    }

    fn quick(seed: u64) -> PlannerConfig {
        PlannerConfig { iterations: 300, rng_seed: seed, ..PlannerConfig::default() }
    }

    #[test]
    fn reward_examples() {
        let cfg = PlannerConfig::default();
        let straight = StepOutcome { progress_m: 250.0, robustness: 50.0, corridor_deviation: 0.0, prior_mismatch: 0.0, nominal_step_m: 250.0 };
        assert!(rollout_reward(&[straight; 3], &cfg) > 0.0);
        let breach = StepOutcome { robustness: -200.0, ..straight };
        let r = step_reward(&breach, &cfg);
        assert!(r < 0.0 && r <= cfg.stl_penalty_weight * -200.0 / ROBUSTNESS_SCALE_M + 1.0);
        let still = StepOutcome { progress_m: 0.0, ..straight };
        assert!(rollout_reward(&[still; 4], &cfg) <= 0.0);
        let huge = StepOutcome { robustness: -1e9, ..straight };
        assert_eq!(step_reward(&huge, &cfg), STEP_REWARD_MIN);
    }

    #[test]
    fn downwind_plan_progresses_and_satisfies_rules() {
        let (af, c) = ctx("26");
        let wps = pattern_waypoints(&af, &c.runway).unwrap();
        let ego = AircraftState::new(wps[3].point, leg_heading(&c.runway, PatternLeg::Downwind), 50.0);
        let route = route_for(&af, &c.runway, IntentKind::Landing, &ego).unwrap();
        let p = plan(&ego, &route, &c, &quick(1));
        assert_eq!(p.status, PlanStatus::Nominal);
        assert!(!p.primitives.is_empty() && p.primitives.len() <= 12);
        // Distance to go along the landing route shrinks.
        let to_go = |s: &AircraftState, r: &Route| {
            let mut d = s.position.horizontal_distance(&r.points[r.active].point);
            for w in r.points[r.active..].windows(2) {
                d += w[0].point.horizontal_distance(&w[1].point);
            }
            d
        };
        let mut s = ego;
        let mut r = route.clone();
        let before = to_go(&s, &r);
        for &id in &p.primitives {
            s = apply_for(&s, &c.set[id as usize], 5.0, 1.0, &c.limits);
            r.capture_for(&s, &c.limits);
        }
        assert!((s.position.horizontal_distance(&p.path.last().unwrap().1)) < 1e-6);
        assert!(to_go(&s, &r) < before - 1000.0, "{} -> {}", before, to_go(&s, &r));
        assert!(p.robustness > 0.0, "robustness {}", p.robustness);
        assert_eq!(p.most_likely_branch[0], ego.position);
        assert!(p.most_likely_branch.len() <= 13);
    }

    #[test]
    fn planning_is_deterministic() {
        let (af, c) = ctx("26");
        let wps = pattern_waypoints(&af, &c.runway).unwrap();
        let ego = AircraftState::new(wps[2].point, leg_heading(&c.runway, PatternLeg::Downwind), 50.0);
        let route = route_for(&af, &c.runway, IntentKind::Landing, &ego).unwrap();
        let (a, ta) = plan_with_tree(&ego, &route, &c, &quick(9));
        let (b, tb) = plan_with_tree(&ego, &route, &c, &quick(9));
        assert_eq!(a, b);
        assert_eq!(ta.to_csv(), tb.to_csv());
    }

    #[test]
    fn social_policy_turns_toward_new_runway() {
        let (af, c) = ctx("26");
        // Abeam the 26 threshold on the 08 side, heading east.
        let ego = AircraftState::new(LocalPoint::new(0.0, 2500.0, 300.0), 80.0, 50.0);
        let mut r26 = route_for(&af, &c.runway, IntentKind::Landing, &ego).unwrap();
        let got = social_policy(&ego, &mut r26.clone(), &c.runway, &c.limits, &c.set);
        // One-step oracle: the primitive whose end lies closest to the active 26 waypoint.
        r26.capture_for(&ego, &c.limits);
        let wp = r26.active_point().unwrap().point;
        let best = c
            .set
            .iter()
            .min_by(|a, b| {
                let da = apply_for(&ego, a, 5.0, 1.0, &c.limits).position.horizontal_distance(&wp);
                let db = apply_for(&ego, b, 5.0, 1.0, &c.limits).position.horizontal_distance(&wp);
                da.total_cmp(&db)
            })
            .unwrap();
        assert_eq!(got.turn, best.turn);
    }

    #[test]
    fn landed_policy_is_neutral() {
        let (_, c) = ctx("26");
        let ego = AircraftState::new(c.runway.threshold.offset(c.runway.heading_deg, 300.0), 260.0, 30.0);
        let mut route = Route::new(Vec::new());
        assert!(social_policy(&ego, &mut route, &c.runway, &c.limits, &c.set).is_neutral());
    }

    #[test]
    fn boxed_in_plan_is_degraded() {
        let (_, mut c) = ctx("26");
        let ego = AircraftState::new(LocalPoint::new(0.0, 6000.0, 300.0), 90.0, 50.0);
        for (dx, dy) in [(0.0, 0.0), (150.0, 0.0), (0.0, 150.0), (0.0, -150.0)] {
            let p = LocalPoint::new(dx, 6000.0 + dy, 300.0);
            c.others.push(OtherTrack {
                start: p,
                t0: 0.0,
                forecast: TrajectoryForecast {
                    agent_id: "x".into(),
                    samples: (1..=12).map(|k| (5.0 * k as f64, p)).collect(),
                    mode: crate::predict::ForecastMode::Linear,
                    confidence: 0.5,
                },
            });
        }
        let route = Route::from_points(&[LocalPoint::new(5000.0, 6000.0, 300.0)]);
        let p = plan(&ego, &route, &c, &quick(2));
        assert_eq!(p.status, PlanStatus::Degraded);
        assert_eq!(p.primitives.len(), 1);
    }

    #[test]
    fn safety_dominates_first_step() {
        use rand::SeedableRng;
        let (_, base) = ctx("26");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..50 {
            let mut c = base.clone();
            let hdg = rng.random_range(0.0..360.0);
            let ego = AircraftState::new(LocalPoint::new(rng.random_range(-2000.0..2000.0), 7000.0, 300.0), hdg, 50.0);
            // A parked obstacle ahead and off to one side: holding course or
            // turning toward it breaches, turning away clears.
            let side = if rng.random::<bool>() { 90.0 } else { -90.0 };
            let obstacle = ego.position.offset(hdg, rng.random_range(480.0..520.0)).offset(hdg + side, rng.random_range(120.0..180.0));
            c.others.push(OtherTrack {
                start: obstacle,
                t0: 0.0,
                forecast: TrajectoryForecast {
                    agent_id: "o".into(),
                    samples: (1..=12).map(|k| (5.0 * k as f64, obstacle)).collect(),
                    mode: crate::predict::ForecastMode::Linear,
                    confidence: 0.5,
                },
            });
            let breaching: Vec<bool> = c.set.iter().map(|p| hard_breach(&c, &c.fly(&ego, p).1)).collect();
            if breaching.iter().all(|b| *b) || !breaching.iter().any(|b| *b) {
                continue;
            }
            let route = Route::from_points(&[ego.position.offset(hdg, 5000.0)]);
            let p = plan(&ego, &route, &c, &PlannerConfig { iterations: 200, rng_seed: 3, ..PlannerConfig::default() });
            assert_eq!(p.status, PlanStatus::Nominal);
            let first = p.first().unwrap();
            assert!(!breaching[first as usize], "breaching first step {:?}", c.set[first as usize]);
            checked += 1;
        }
        assert!(checked >= 40, "only {checked} worlds had a clearing primitive");
    }
}
