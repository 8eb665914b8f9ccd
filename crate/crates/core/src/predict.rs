//! Rule-based trajectory forecasts for other aircraft.
//!
//! Three tiers, most informative first: the route implied by a declared
//! radio intent, continuation of the observed traffic pattern, and constant
//! velocity extrapolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{apply_for, follow_waypoints, AircraftState, ControlLimits, Route, PRIMITIVE_DURATION_S};
use crate::geo::{classify_leg, preferred_runway, AirfieldModel, LocalPoint, Runway, WindState};
use crate::radio::{IntentKind, PilotIntent};
use crate::route::{is_landed, route_for};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("stride {stride_s} s does not divide horizon {horizon_s} s")]
    BadStride { horizon_s: f64, stride_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ForecastMode {
    Linear,
    Pattern,
    Declared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryForecast {
    pub agent_id: String,
    /// `(time_s, position)` at a fixed stride after the belief time.
    pub samples: Vec<(f64, LocalPoint)>,
    pub mode: ForecastMode,
    pub confidence: f64,
}

impl TrajectoryForecast {
    /// Position at `t`, linearly interpolated and held constant outside the samples.
    pub fn position_at(&self, t: f64, start: &LocalPoint, t0: f64) -> LocalPoint {
        let mut prev = (t0, *start);
        for &(ts, p) in &self.samples {
            if t <= ts {
                let span = ts - prev.0;
                let f = if span > 0.0 { ((t - prev.0) / span).clamp(0.0, 1.0) } else { 1.0 };
                return prev.1.lerp(&p, f);
            }
            prev = (ts, p);
        }
        prev.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentBelief {
    pub agent_id: String,
    pub last_state: AircraftState,
    pub declared_intent: PilotIntent,
    pub intent_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_runway: Option<String>,
}

impl AgentBelief {
    pub fn new(agent_id: &str, state: AircraftState) -> Self {
        AgentBelief {
            agent_id: agent_id.to_string(),
            last_state: state,
            declared_intent: PilotIntent::none(),
            intent_time_s: 0.0,
            assumed_runway: None,
        }
    }

    /// Records a newer observed state; older observations are ignored.
    pub fn observe(&mut self, state: AircraftState) {
        if state.time_s >= self.last_state.time_s {
            self.last_state = state;
        }
    }

    /// Records a declared intent heard at `time_s`.
    pub fn hear(&mut self, intent: PilotIntent, time_s: f64) {
        if time_s < self.intent_time_s {
            return;
        }
        if let Some(r) = &intent.runway {
            self.assumed_runway = Some(r.clone());
        }
        self.declared_intent = intent;
        self.intent_time_s = time_s;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub horizon_s: f64,
    pub stride_s: f64,
    pub linear_confidence: f64,
    pub pattern_confidence: f64,
    pub declared_confidence: f64,
    pub limits: ControlLimits,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            horizon_s: 60.0,
            stride_s: 5.0,
            linear_confidence: 0.5,
            pattern_confidence: 0.7,
            declared_confidence: 0.9,
            limits: ControlLimits::default(),
        }
    }
}

impl PredictConfig {
    fn steps(&self) -> Result<usize, PredictError> {
        steps(self.horizon_s, self.stride_s)
    }
}

fn steps(horizon_s: f64, stride_s: f64) -> Result<usize, PredictError> {
    let bad = PredictError::BadStride { horizon_s, stride_s };
    if !(stride_s > 0.0 && horizon_s >= 0.0 && stride_s.is_finite() && horizon_s.is_finite()) {
        return Err(bad);
    }
    let n = (horizon_s / stride_s).round();
    if (n * stride_s - horizon_s).abs() > 1e-9 * horizon_s.max(1.0) {
        return Err(bad);
    }
    Ok(n as usize)
}

/// Constant ground-velocity extrapolation.
pub fn predict_linear(state: &AircraftState, horizon_s: f64, stride_s: f64) -> Result<TrajectoryForecast, PredictError> {
    let n = steps(horizon_s, stride_s)?;
    let (vx, vy, vz) = state.velocity();
    let p = state.position;
    let samples = (1..=n)
        .map(|k| {
            let dt = stride_s * k as f64;
            (state.time_s + dt, LocalPoint::new(p.x + vx * dt, p.y + vy * dt, (p.z + vz * dt).max(0.0)))
        })
        .collect();
    Ok(TrajectoryForecast { agent_id: String::new(), samples, mode: ForecastMode::Linear, confidence: 0.5 })
}

/// Flies `route` forward with the waypoint follower and samples it.
/// A landing route stops on touchdown.
pub fn simulate_route(
    state: &AircraftState,
    route: &mut Route,
    limits: &ControlLimits,
    landing_on: Option<&Runway>,
    horizon_s: f64,
    stride_s: f64,
) -> Vec<(f64, LocalPoint)> {
    let n = (horizon_s / stride_s).round() as usize;
    let mut out = Vec::with_capacity(n);
    let mut s = *state;
    let t0 = state.time_s;
    let mut landed = landing_on.is_some_and(|r| is_landed(r, &s));
    let mut prim = None;
    let mut next_decision = t0;
    for k in 1..=n {
        let t_end = t0 + stride_s * k as f64;
        while s.time_s < t_end - 1e-9 && !landed {
            if s.time_s >= next_decision - 1e-9 || prim.is_none() {
                prim = follow_waypoints(&s, route, limits).ok();
                next_decision = s.time_s + PRIMITIVE_DURATION_S;
            }
            let Some(p) = prim else { break };
            let h = (t_end - s.time_s).min(1.0);
            s = apply_for(&s, &p, h, h, limits);
            landed = landing_on.is_some_and(|r| is_landed(r, &s));
        }
        out.push((t_end, s.position));
    }
    out
}

fn pattern_runway<'a>(belief: &AgentBelief, airfield: &'a AirfieldModel, wind: &WindState) -> &'a Runway {
    belief
        .assumed_runway
        .as_deref()
        .and_then(|r| airfield.runway(r).ok())
        .unwrap_or_else(|| preferred_runway(airfield, wind))
}

/// Continues around the pattern the agent appears to be flying, or falls
/// back to linear extrapolation outside every corridor.
pub fn predict_pattern(
    belief: &AgentBelief,
    airfield: &AirfieldModel,
    wind: &WindState,
    cfg: &PredictConfig,
) -> Result<TrajectoryForecast, PredictError> {
    cfg.steps()?;
    let rwy = pattern_runway(belief, airfield, wind);
    let s = &belief.last_state;
    if classify_leg(airfield, rwy, s).is_none() {
        let mut f = predict_linear(s, cfg.horizon_s, cfg.stride_s)?;
        f.agent_id = belief.agent_id.clone();
        f.confidence = cfg.linear_confidence;
        return Ok(f);
    }
    let samples = match route_for(airfield, rwy, IntentKind::RemainInPattern, s) {
        Ok(mut route) => simulate_route(s, &mut route, &cfg.limits, None, cfg.horizon_s, cfg.stride_s),
        Err(_) => predict_linear(s, cfg.horizon_s, cfg.stride_s)?.samples,
    };
    Ok(TrajectoryForecast {
        agent_id: belief.agent_id.clone(),
        samples,
        mode: ForecastMode::Pattern,
        confidence: cfg.pattern_confidence,
    })
}

/// Follows the route implied by the declared intent, falling back to
/// [`predict_pattern`] when nothing usable was declared.
pub fn predict_declared(
    belief: &AgentBelief,
    airfield: &AirfieldModel,
    wind: &WindState,
    cfg: &PredictConfig,
) -> Result<TrajectoryForecast, PredictError> {
    cfg.steps()?;
    let intent = &belief.declared_intent;
    let rwy = match (&intent.kind, intent.runway.as_deref()) {
        (IntentKind::None, _) => None,
        (_, Some(r)) => airfield.runway(r).ok(),
        (_, None) => Some(pattern_runway(belief, airfield, wind)),
    };
    let Some(rwy) = rwy else { return predict_pattern(belief, airfield, wind, cfg) };
    let s = &belief.last_state;
    let Ok(mut route) = route_for(airfield, rwy, intent.kind, s) else {
        return predict_pattern(belief, airfield, wind, cfg);
    };
    let landing = matches!(intent.kind, IntentKind::Landing | IntentKind::ChangeRunway).then_some(rwy);
    let samples = simulate_route(s, &mut route, &cfg.limits, landing, cfg.horizon_s, cfg.stride_s);
    Ok(TrajectoryForecast {
        agent_id: belief.agent_id.clone(),
        samples,
        mode: ForecastMode::Declared,
        confidence: cfg.declared_confidence,
    })
}

/// Best available forecast for one agent.
pub fn forecast(
    belief: &AgentBelief,
    airfield: &AirfieldModel,
    wind: &WindState,
    cfg: &PredictConfig,
) -> Result<TrajectoryForecast, PredictError> {
    predict_declared(belief, airfield, wind, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{leg_heading, pattern_waypoints, PatternLeg};
    use proptest::prelude::*;

    fn cfg(horizon_s: f64) -> PredictConfig {
        PredictConfig { horizon_s, limits: ControlLimits::pattern(), ..PredictConfig::default() }
    }

    #[test]
    fn linear_examples() {
        let s = AircraftState::new(LocalPoint::new(0.0, 0.0, 300.0), 90.0, 50.0);
        let f = predict_linear(&s, 20.0, 5.0).unwrap();
        let xs: Vec<f64> = f.samples.iter().map(|(_, p)| p.x).collect();
        for (x, want) in xs.iter().zip([250.0, 500.0, 750.0, 1000.0]) {
            assert!((x - want).abs() < 1e-9);
        }
        assert_eq!(f.confidence, 0.5);
        let still = AircraftState::new(LocalPoint::new(3.0, 4.0, 5.0), 90.0, 0.0);
        assert!(predict_linear(&still, 20.0, 5.0).unwrap().samples.iter().all(|(_, p)| *p == still.position));
        let mut climb = s;
        climb.vertical_rate_mps = 3.0;
        let f = predict_linear(&climb, 20.0, 5.0).unwrap();
        assert!((f.samples[1].1.z - 330.0).abs() < 1e-9);
        assert!(predict_linear(&s, 20.0, 3.0).is_err());
    }

    #[test]
    fn declared_landing_ends_at_threshold() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap();
        let wps = pattern_waypoints(&af, rwy).unwrap();
        let s = AircraftState::new(wps[3].point, leg_heading(rwy, PatternLeg::Downwind), 50.0);
        let mut b = AgentBelief::new("h", s);
        b.hear(PilotIntent::landing("26"), 0.0);
        let f = predict_declared(&b, &af, &WindState::calm(), &cfg(400.0)).unwrap();
        assert_eq!(f.mode, ForecastMode::Declared);
        let end = f.samples.last().unwrap().1;
        assert!(end.z < 1.0);
        assert!(end.horizontal_distance(&rwy.threshold) < 2.0 * 150.0, "{end:?}");
    }

    #[test]
    fn declared_other_runway_heads_there() {
        let af = AirfieldModel::butler();
        let r08 = af.runway("08").unwrap();
        let s = AircraftState::new(LocalPoint::new(0.0, 6000.0, 600.0), 0.0, 50.0);
        let mut b = AgentBelief::new("h", s);
        b.hear(PilotIntent::landing("08"), 0.0);
        let f = predict_declared(&b, &af, &WindState::calm(), &cfg(120.0)).unwrap();
        let first = f.samples[0].1.horizontal_distance(&r08.threshold);
        let last = f.samples.last().unwrap().1.horizontal_distance(&r08.threshold);
        assert!(last < first);
    }

    #[test]
    fn none_falls_back_to_pattern() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap();
        let wps = pattern_waypoints(&af, rwy).unwrap();
        let s = AircraftState::new(wps[3].point, leg_heading(rwy, PatternLeg::Downwind), 50.0);
        let b = AgentBelief::new("h", s);
        let wind = WindState::from_deg(260.0, 12.0);
        let d = predict_declared(&b, &af, &wind, &cfg(60.0)).unwrap();
        let p = predict_pattern(&b, &af, &wind, &cfg(60.0)).unwrap();
        assert_eq!(d, p);
        assert_eq!(p.mode, ForecastMode::Pattern);
    }

    #[test]
    fn base_continues_onto_final() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap();
        let wps = pattern_waypoints(&af, rwy).unwrap();
        let mid_base = wps[5].point.lerp(&wps[6].point, 0.5);
        let s = AircraftState::new(mid_base, leg_heading(rwy, PatternLeg::Base), 50.0);
        let mut b = AgentBelief::new("h", s);
        b.assumed_runway = Some("26".into());
        let f = predict_pattern(&b, &af, &WindState::calm(), &cfg(120.0)).unwrap();
        let legs: Vec<_> = f
            .samples
            .windows(2)
            .map(|w| {
                let hdg = w[0].1.bearing_to(&w[1].1);
                classify_leg(&af, rwy, &AircraftState::new(w[1].1, hdg, 50.0))
            })
            .collect();
        assert!(legs.contains(&Some(PatternLeg::Final)), "{legs:?}");
    }

    #[test]
    fn outside_is_linear() {
        let af = AirfieldModel::butler();
        let s = AircraftState::new(LocalPoint::new(20_000.0, 20_000.0, 900.0), 45.0, 50.0);
        let b = AgentBelief::new("h", s);
        let f = predict_pattern(&b, &af, &WindState::calm(), &cfg(60.0)).unwrap();
        assert_eq!(f.samples, predict_linear(&s, 60.0, 5.0).unwrap().samples);
    }

    #[test]
    fn unassumed_downwind_uses_wind_runway() {
        let af = AirfieldModel::butler();
        let r26 = af.runway("26").unwrap();
        let wps = pattern_waypoints(&af, r26).unwrap();
        let s = AircraftState::new(wps[3].point, leg_heading(r26, PatternLeg::Downwind), 50.0);
        let b = AgentBelief::new("h", s);
        let f = predict_pattern(&b, &af, &WindState::from_deg(260.0, 12.0), &cfg(60.0)).unwrap();
        let mut r = route_for(&af, r26, IntentKind::RemainInPattern, &s).unwrap();
        let oracle = simulate_route(&s, &mut r, &cfg(60.0).limits, None, 60.0, 5.0);
        assert_eq!(f.samples, oracle);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn forecasts_are_reachable(
            x in -6000.0f64..6000.0, y in -6000.0f64..6000.0, z in 100.0f64..600.0,
            h in 0.0f64..360.0, which in 0usize..4,
        ) {
            let af = AirfieldModel::butler();
            let s = AircraftState::new(LocalPoint::new(x, y, z), h, 50.0);
            let mut b = AgentBelief::new("h", s);
            let intent = [PilotIntent::landing("26"), PilotIntent::landing("08"),
                PilotIntent::new(IntentKind::LowApproach, Some("26")), PilotIntent::none()][which].clone();
            b.hear(intent, 0.0);
            let c = cfg(60.0);
            let f = predict_declared(&b, &af, &WindState::calm(), &c).unwrap();
            let mut prev = (0.0, s.position);
            for &(t, p) in &f.samples {
                prop_assert!(t > prev.0);
                let v = p.horizontal_distance(&prev.1) / (t - prev.0);
                prop_assert!(v <= c.limits.max_speed_mps + 1e-9);
                prev = (t, p);
            }
        }
    }
}
