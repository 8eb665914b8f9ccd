//! Traffic-pattern rules and the signal channels they read.

use serde::{Deserialize, Serialize};

use super::{Formula, SignalSource, Trace};
use crate::dynamics::{AircraftState, Turn};
use crate::geo::{
    leg_corridor_margin, pattern_corridor_margin, AirfieldModel, LocalPoint, PatternLeg, PatternSide, Runway,
};

/// Channel names in column order of a [`RuleTrace`] row.
pub const CHANNELS: [&str; 7] = ["sep", "in_pattern", "alt", "turn", "on_final", "vrate", "row"];
/// Separation value reported when there is no other traffic.
pub const NO_TRAFFIC_SEP_M: f64 = 100_000.0;
const TURN_SIGNAL: f64 = 100.0;
const DESCENT_TOL_MPS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RulesConfig {
    pub d_min_m: f64,
    pub h_min_m: f64,
    pub altitude_band_m: f64,
    pub d_final_m: f64,
    pub horizon_s: f64,
}

impl Default for RulesConfig {
    fn default() -> Self {
        RulesConfig { d_min_m: 300.0, h_min_m: 100.0, altitude_band_m: 60.0, d_final_m: 2000.0, horizon_s: 60.0 }
    }
}

/// Per-step bodies of the five rules, without the enclosing `G`.
pub fn rule_bodies(airfield: &AirfieldModel, cfg: &RulesConfig) -> Vec<(&'static str, Formula)> {
    let in_pattern = || Formula::ge("in_pattern", 0.0);
    vec![
        ("separation", Formula::ge("sep", cfg.d_min_m)),
        (
            "pattern_altitude",
            Formula::or(
                Formula::not(in_pattern()),
                Formula::le("alt", airfield.pattern_altitude_m + cfg.altitude_band_m),
            ),
        ),
        ("turn_direction", Formula::or(Formula::not(in_pattern()), Formula::ge("turn", 0.0))),
        ("final_descent", Formula::or(Formula::ge("on_final", 0.0), Formula::ge("vrate", -DESCENT_TOL_MPS))),
        ("right_of_way", Formula::ge("row", 0.0)),
    ]
}

/// Conjunction of the globally-quantified pattern rules over the horizon.
pub fn pattern_rules(airfield: &AirfieldModel, runway: &Runway, cfg: &RulesConfig) -> Formula {
    let _ = runway;
    let gs = rule_bodies(airfield, cfg)
        .into_iter()
        .map(|(_, body)| Formula::globally(0.0, cfg.horizon_s, body))
        .collect();
    Formula::all(gs).unwrap_or_else(|| Formula::ge("sep", f64::NEG_INFINITY))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtherSample {
    pub position: LocalPoint,
    /// Ground velocity `(east, north, up)`.
    pub velocity: (f64, f64, f64),
}

impl OtherSample {
    pub fn from_state(s: &AircraftState) -> Self {
        OtherSample { position: s.position, velocity: s.velocity() }
    }

    fn as_state(&self) -> AircraftState {
        let (vx, vy, vz) = self.velocity;
        let speed = vx.hypot(vy);
        let hdg = if speed > 1e-9 { crate::geo::bearing_of(vx, vy) } else { 0.0 };
        let mut s = AircraftState::new(self.position, hdg, speed);
        s.vertical_rate_mps = vz;
        s
    }
}

fn turn_signal(turn: Turn, side: PatternSide) -> f64 {
    match (turn, side) {
        (Turn::Straight, _) | (Turn::Left, PatternSide::Left) | (Turn::Right, PatternSide::Right) => TURN_SIGNAL,
        _ => -TURN_SIGNAL,
    }
}

/// One row of rule channels for the ego aircraft against other traffic.
///
/// `sep` folds vertical relief into a horizontal-equivalent distance so that
/// `sep < d_min` exactly when both the horizontal and vertical floors are
/// breached. Alignment corrections on final are exempt from `turn`. `row` goes negative when the ego sits on final within
/// `d_final` behind converging traffic that is also on final.
pub fn channel_row(
    cfg: &RulesConfig,
    airfield: &AirfieldModel,
    runway: &Runway,
    ego: &AircraftState,
    turn: Turn,
    others: &[OtherSample],
) -> [f64; 7] {
    let p = ego.position;
    let mut sep = NO_TRAFFIC_SEP_M;
    for o in others {
        let h = p.horizontal_distance(&o.position);
        let v = (p.z - o.position.z).abs();
        sep = sep.min(h.max(cfg.d_min_m * v / cfg.h_min_m));
    }
    let in_pattern = pattern_corridor_margin(airfield, runway, ego);
    let on_final = leg_corridor_margin(airfield, runway, PatternLeg::Final, ego).unwrap_or(f64::NEG_INFINITY);
    let mut row = cfg.d_final_m;
    if on_final >= 0.0 {
        let (ex, ey, _) = ego.velocity();
        let ego_to_thr = p.horizontal_distance(&runway.threshold);
        for o in others {
            let os = o.as_state();
            let other_final = leg_corridor_margin(airfield, runway, PatternLeg::Final, &os).unwrap_or(f64::NEG_INFINITY);
            if other_final < 0.0 || o.position.horizontal_distance(&runway.threshold) > ego_to_thr {
                continue;
            }
            let (rx, ry) = (o.position.x - p.x, o.position.y - p.y);
            let (vx, vy) = (o.velocity.0 - ex, o.velocity.1 - ey);
            if rx * vx + ry * vy < 0.0 {
                let d = p.horizontal_distance(&o.position);
                row = row.min(d - cfg.d_final_m);
            }
        }
    }
    [
        sep,
        in_pattern,
        p.z,
        if on_final >= 0.0 { TURN_SIGNAL } else { turn_signal(turn, runway.pattern_side) },
        on_final,
        ego.vertical_rate_mps,
        row,
    ]
}

/// Dense rule-channel trace, one fixed-size row per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleTrace {
    pub stride_s: f64,
    pub rows: Vec<[f64; 7]>,
}

impl RuleTrace {
    pub fn new(stride_s: f64) -> Self {
        RuleTrace { stride_s, rows: Vec::new() }
    }

    pub fn to_trace(&self) -> Trace {
        let mut t = Trace::new(self.stride_s);
        for (i, name) in CHANNELS.iter().enumerate() {
            t = t.with(name, self.rows.iter().map(|r| r[i]).collect());
        }
        t
    }
}

impl SignalSource for RuleTrace {
    fn stride_s(&self) -> f64 {
        self.stride_s
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn value(&self, name: &str, t: usize) -> Option<f64> {
        let i = CHANNELS.iter().position(|c| *c == name)?;
        self.rows.get(t).map(|r| r[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{apply_for, follow_waypoints, ControlLimits};
    use crate::radio::IntentKind;
    use crate::route::{is_landed, route_for};
    use crate::geo::{leg_heading, pattern_waypoints};
    use crate::stl::robustness;

    #[test]
    fn clean_left_pattern_satisfies_rules() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap().clone();
        let l = ControlLimits::pattern();
        let cfg = RulesConfig { horizon_s: 10_000.0, ..RulesConfig::default() };
        let wps = pattern_waypoints(&af, &rwy).unwrap();
        let mut s = AircraftState::new(wps[2].point, leg_heading(&rwy, PatternLeg::Downwind), 50.0);
        let mut route = route_for(&af, &rwy, IntentKind::Landing, &s).unwrap();
        let mut trace = RuleTrace::new(1.0);
        'fly: for _ in 0..100 {
            let p = follow_waypoints(&s, &mut route, &l).unwrap();
            for _ in 0..5 {
                trace.rows.push(channel_row(&cfg, &af, &rwy, &s, p.turn, &[]));
                s = apply_for(&s, &p, 1.0, 1.0, &l);
                if is_landed(&rwy, &s) {
                    break 'fly;
                }
            }
        }
        assert!(is_landed(&rwy, &s));
        let rho = robustness(&pattern_rules(&af, &rwy, &cfg), &trace, 0).unwrap();
        assert!(rho > 0.0, "robustness {rho}");
    }

    #[test]
    fn close_traffic_dominates() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap();
        let cfg = RulesConfig::default();
        let ego = AircraftState::new(LocalPoint::new(0.0, 5000.0, 300.0), 90.0, 50.0);
        let other = OtherSample { position: LocalPoint::new(100.0, 5000.0, 300.0), velocity: (0.0, 0.0, 0.0) };
        let mut t = RuleTrace::new(1.0);
        t.rows.push(channel_row(&cfg, &af, rwy, &ego, Turn::Straight, &[other]));
        let rho = robustness(&pattern_rules(&af, rwy, &cfg), &t, 0).unwrap();
        assert!(rho <= -200.0 + 1e-9, "{rho}");
        // Vertical relief clears the rule.
        let above = OtherSample { position: LocalPoint::new(100.0, 5000.0, 450.0), ..other };
        let row = channel_row(&cfg, &af, rwy, &ego, Turn::Straight, &[above]);
        assert!(row[0] >= cfg.d_min_m);
    }

    #[test]
    fn wrong_way_turn_on_left_downwind() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap();
        let cfg = RulesConfig::default();
        let wps = pattern_waypoints(&af, rwy).unwrap();
        let ego = AircraftState::new(wps[3].point, leg_heading(rwy, PatternLeg::Downwind), 50.0);
        let mut t = RuleTrace::new(1.0);
        t.rows.push(channel_row(&cfg, &af, rwy, &ego, Turn::Right, &[]));
        let bodies = rule_bodies(&af, &cfg);
        let r3 = &bodies.iter().find(|(n, _)| *n == "turn_direction").unwrap().1;
        assert!(robustness(r3, &t, 0).unwrap() < 0.0);
        t.rows[0] = channel_row(&cfg, &af, rwy, &ego, Turn::Left, &[]);
        assert!(robustness(r3, &t, 0).unwrap() > 0.0);
    }

    #[test]
    fn trailing_on_final_breaks_right_of_way() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap();
        let cfg = RulesConfig::default();
        let ego_p = rwy.threshold.offset(rwy.heading_deg, -2500.0).with_z(200.0);
        let lead_p = rwy.threshold.offset(rwy.heading_deg, -1500.0).with_z(120.0);
        let ego = AircraftState::new(ego_p, rwy.heading_deg, 55.0);
        let lead = OtherSample::from_state(&AircraftState::new(lead_p, rwy.heading_deg, 40.0));
        let row = channel_row(&cfg, &af, rwy, &ego, Turn::Straight, &[lead]);
        assert!((row[6] - (1000.0 - 2000.0)).abs() < 1e-6, "{row:?}");
    }
}
