//! Airfield geometry in a flat local frame.
//!
//! Positions are meters east (`x`), north (`y`) and above ground (`z`) of the
//! airfield reference point. Headings are compass degrees, clockwise from
//! north. Knots and feet only appear at the radio and METAR boundaries.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::AircraftState;

pub const KT_TO_MPS: f64 = 0.514444;
pub const FT_TO_M: f64 = 0.3048;
pub const NM_TO_M: f64 = 1852.0;

/// Corridor half-angle around a leg heading.
pub const CORRIDOR_HEADING_TOL_DEG: f64 = 45.0;
/// Corridor lateral bound as a multiple of the pattern width.
pub const CORRIDOR_WIDTH_FACTOR: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("unknown runway '{0}'")]
    UnknownRunway(String),
    #[error("invalid runway '{designator}': {reason}")]
    InvalidRunway { designator: String, reason: String },
    #[error("invalid airfield: {0}")]
    InvalidAirfield(String),
    #[error("non-finite or below-ground point ({0}, {1}, {2})")]
    InvalidPoint(f64, f64, f64),
}

/// Normalizes a compass angle into `[0, 360)`.
pub fn wrap_deg(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// Signed smallest difference `a - b` in `(-180, 180]`.
pub fn angle_diff_deg(a: f64, b: f64) -> f64 {
    let d = wrap_deg(a - b);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Unit ground vector `(east, north)` for a compass bearing.
pub fn bearing_unit(deg: f64) -> (f64, f64) {
    let r = deg.to_radians();
    (r.sin(), r.cos())
}

/// Compass bearing of the vector `(dx, dy)`.
pub fn bearing_of(dx: f64, dy: f64) -> f64 {
    wrap_deg(dx.atan2(dy).to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LocalPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) || self.z < -1.0 {
            return Err(GeoError::InvalidPoint(self.x, self.y, self.z));
        }
        Ok(())
    }

    pub fn horizontal_distance(&self, other: &LocalPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance(&self, other: &LocalPoint) -> f64 {
        let h = self.horizontal_distance(other);
        h.hypot(self.z - other.z)
    }

    /// Moves `dist` meters along a compass bearing, keeping altitude.
    pub fn offset(&self, bearing_deg: f64, dist: f64) -> LocalPoint {
        let (e, n) = bearing_unit(bearing_deg);
        LocalPoint::new(self.x + e * dist, self.y + n * dist, self.z)
    }

    /// Compass bearing from `self` to `other`.
    pub fn bearing_to(&self, other: &LocalPoint) -> f64 {
        bearing_of(other.x - self.x, other.y - self.y)
    }

    pub fn with_z(&self, z: f64) -> LocalPoint {
        LocalPoint::new(self.x, self.y, z)
    }

    pub fn lerp(&self, other: &LocalPoint, t: f64) -> LocalPoint {
        LocalPoint::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
            self.z + (other.z - self.z) * t,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternSide {
    #[serde(alias = "LEFT")]
    Left,
    #[serde(alias = "RIGHT")]
    Right,
}

impl PatternSide {
    /// Heading change applied at each pattern corner.
    pub fn turn_sign(self) -> f64 {
        match self {
            PatternSide::Left => -1.0,
            PatternSide::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternLeg {
    Upwind,
    Crosswind,
    Downwind,
    Base,
    Final,
}

impl PatternLeg {
    pub const ALL: [PatternLeg; 5] = [
        PatternLeg::Upwind,
        PatternLeg::Crosswind,
        PatternLeg::Downwind,
        PatternLeg::Base,
        PatternLeg::Final,
    ];

    pub fn next(self) -> PatternLeg {
        match self {
            PatternLeg::Upwind => PatternLeg::Crosswind,
            PatternLeg::Crosswind => PatternLeg::Downwind,
            PatternLeg::Downwind => PatternLeg::Base,
            PatternLeg::Base => PatternLeg::Final,
            PatternLeg::Final => PatternLeg::Upwind,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PatternLeg::Upwind => "upwind",
            PatternLeg::Crosswind => "crosswind",
            PatternLeg::Downwind => "downwind",
            PatternLeg::Base => "base",
            PatternLeg::Final => "final",
        }
    }
}

impl fmt::Display for PatternLeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runway {
    pub designator: String,
    pub threshold: LocalPoint,
    pub heading_deg: f64,
    pub length_m: f64,
    pub pattern_side: PatternSide,
}

impl Runway {
    pub fn number(&self) -> u32 {
        self.designator.parse().unwrap_or(u32::MAX)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        let bad = |reason: &str| GeoError::InvalidRunway {
            designator: self.designator.clone(),
            reason: reason.to_string(),
        };
        if self.designator.len() != 2 || !self.designator.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("designator must be two digits"));
        }
        let n = self.number();
        if !(1..=36).contains(&n) {
            return Err(bad("designator must be 01..36"));
        }
        if !(0.0..360.0).contains(&self.heading_deg) {
            return Err(bad("heading must be in [0, 360)"));
        }
        if angle_diff_deg(self.heading_deg, n as f64 * 10.0).abs() > 5.0 {
            return Err(bad("heading differs from designator by more than 5 degrees"));
        }
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(bad("length must be positive"));
        }
        self.threshold.validate()
    }

    /// End of the runway opposite the threshold.
    pub fn departure_end(&self) -> LocalPoint {
        self.threshold.offset(self.heading_deg, self.length_m)
    }

    /// Bearing from the runway centerline toward the pattern side.
    pub fn pattern_side_bearing(&self) -> f64 {
        wrap_deg(self.heading_deg + 90.0 * self.pattern_side.turn_sign())
    }

    /// Whether `p` lies on the paved surface (with a lateral tolerance).
    pub fn contains_ground_point(&self, p: &LocalPoint, lateral_tol: f64, before_tol: f64) -> bool {
        let (ux, uy) = bearing_unit(self.heading_deg);
        let dx = p.x - self.threshold.x;
        let dy = p.y - self.threshold.y;
        let along = dx * ux + dy * uy;
        let lateral = (dx * uy - dy * ux).abs();
        along >= -before_tol && along <= self.length_m && lateral <= lateral_tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirfieldModel {
    pub name: String,
    pub runways: Vec<Runway>,
    pub pattern_altitude_m: f64,
    pub pattern_width_m: f64,
    pub calm_wind_runway: String,
}

impl AirfieldModel {
    /// Two-runway non-towered field with runways 08/26, left traffic on both.
    pub fn butler() -> Self {
        let length = 1500.0;
        let center = LocalPoint::new(0.0, 0.0, 0.0);
        let rwy26 = Runway {
            designator: "26".into(),
            threshold: center.offset(80.0, length / 2.0),
            heading_deg: 260.0,
            length_m: length,
            pattern_side: PatternSide::Left,
        };
        let rwy08 = Runway {
            designator: "08".into(),
            threshold: center.offset(260.0, length / 2.0),
            heading_deg: 80.0,
            length_m: length,
            pattern_side: PatternSide::Left,
        };
        AirfieldModel {
            name: "BUTLER".into(),
            runways: vec![rwy08, rwy26],
            pattern_altitude_m: 300.0,
            pattern_width_m: 1000.0,
            calm_wind_runway: "26".into(),
        }
    }

    pub fn runway(&self, designator: &str) -> Result<&Runway, GeoError> {
        self.runways
            .iter()
            .find(|r| r.designator == designator)
            .ok_or_else(|| GeoError::UnknownRunway(designator.to_string()))
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if self.runways.len() < 2 {
            return Err(GeoError::InvalidAirfield("at least two runways required".into()));
        }
        for r in &self.runways {
            r.validate()?;
        }
        for (i, a) in self.runways.iter().enumerate() {
            if self.runways[..i].iter().any(|b| b.designator == a.designator) {
                return Err(GeoError::InvalidAirfield(format!(
                    "duplicate runway '{}'",
                    a.designator
                )));
            }
            let reciprocal = self.runways.iter().find(|b| {
                angle_diff_deg(a.heading_deg, b.heading_deg + 180.0).abs() <= 5.0
                    && a.threshold.horizontal_distance(&b.departure_end()) <= 0.1 * a.length_m
            });
            if reciprocal.is_none() {
                return Err(GeoError::InvalidAirfield(format!(
                    "runway '{}' has no reciprocal",
                    a.designator
                )));
            }
        }
        self.runway(&self.calm_wind_runway)?;
        if !(150.0..=600.0).contains(&self.pattern_altitude_m) {
            return Err(GeoError::InvalidAirfield(
                "pattern_altitude_m must be within [150, 600]".into(),
            ));
        }
        if !(self.pattern_width_m > 0.0 && self.pattern_width_m.is_finite()) {
            return Err(GeoError::InvalidAirfield("pattern_width_m must be positive".into()));
        }
        Ok(())
    }

    /// Length of the final leg flown at a constant descent from pattern altitude.
    pub fn final_length_m(&self) -> f64 {
        12.0 * self.pattern_altitude_m
    }

    /// Distance flown past the departure end before the crosswind turn.
    pub fn upwind_extension_m(&self) -> f64 {
        2.0 * self.pattern_altitude_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindDirection {
    Degrees(f64),
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindState {
    pub direction: WindDirection,
    pub speed_kt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gust_kt: Option<f64>,
}

impl WindState {
    pub fn calm() -> Self {
        WindState { direction: WindDirection::Degrees(0.0), speed_kt: 0.0, gust_kt: None }
    }

    pub fn from_deg(direction_deg: f64, speed_kt: f64) -> Self {
        WindState { direction: WindDirection::Degrees(wrap_deg(direction_deg)), speed_kt, gust_kt: None }
    }

    pub fn is_calm(&self) -> bool {
        self.speed_kt <= 0.0 || matches!(self.direction, WindDirection::Variable)
    }

    /// Headwind component in knots for a runway heading, `None` when calm.
    pub fn headwind_kt(&self, heading_deg: f64) -> Option<f64> {
        match self.direction {
            _ if self.speed_kt <= 0.0 => None,
            WindDirection::Variable => None,
            WindDirection::Degrees(d) => Some(self.speed_kt * (d - heading_deg).to_radians().cos()),
        }
    }
}

/// Leg headings for a runway's traffic pattern.
pub fn leg_headings(runway: &Runway) -> BTreeMap<PatternLeg, f64> {
    PatternLeg::ALL.iter().map(|&leg| (leg, leg_heading(runway, leg))).collect()
}

pub fn leg_heading(runway: &Runway, leg: PatternLeg) -> f64 {
    let turns = match leg {
        PatternLeg::Final => 0,
        other => other.index() as i32,
    };
    wrap_deg(runway.heading_deg + 90.0 * runway.pattern_side.turn_sign() * turns as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternWaypoint {
    /// Leg flown to arrive at this point.
    pub leg: PatternLeg,
    pub point: LocalPoint,
}

/// Waypoints around the traffic pattern, starting with the upwind extension and
/// ending at the landing threshold.
pub fn pattern_waypoints(
    airfield: &AirfieldModel,
    runway: &Runway,
) -> Result<Vec<PatternWaypoint>, GeoError> {
    let rwy = airfield.runway(&runway.designator)?;
    let alt = airfield.pattern_altitude_m;
    let width = airfield.pattern_width_m;
    let hdg = rwy.heading_deg;
    let side = rwy.pattern_side_bearing();
    let t = rwy.threshold.with_z(alt);
    let upwind = rwy.length_m + airfield.upwind_extension_m();
    let final_len = airfield.final_length_m();

    let wp = |leg, p: LocalPoint| PatternWaypoint { leg, point: p };
    let upwind_ext = t.offset(hdg, upwind);
    let crosswind = upwind_ext.offset(side, width);
    let abeam = t.offset(side, width);
    let dw_entry = abeam.offset(hdg, rwy.length_m);
    let dw_mid = abeam.offset(hdg, rwy.length_m / 2.0);
    let base_turn = abeam.offset(hdg, -final_len);
    let final_int = t.offset(hdg, -final_len);
    Ok(vec![
        wp(PatternLeg::Upwind, upwind_ext),
        wp(PatternLeg::Crosswind, crosswind),
        wp(PatternLeg::Downwind, dw_entry),
        wp(PatternLeg::Downwind, dw_mid),
        wp(PatternLeg::Downwind, abeam),
        wp(PatternLeg::Downwind, base_turn),
        wp(PatternLeg::Base, final_int),
        wp(PatternLeg::Final, rwy.threshold),
    ])
}

/// Ground segment `(start, end)` of each pattern leg.
pub fn leg_segments(airfield: &AirfieldModel, runway: &Runway) -> Result<[(PatternLeg, LocalPoint, LocalPoint); 5], GeoError> {
    let wps = pattern_waypoints(airfield, runway)?;
    let t = runway.threshold;
    Ok([
        (PatternLeg::Upwind, t, wps[0].point),
        (PatternLeg::Crosswind, wps[0].point, wps[1].point),
        (PatternLeg::Downwind, wps[1].point, wps[5].point),
        (PatternLeg::Base, wps[5].point, wps[6].point),
        (PatternLeg::Final, wps[6].point, t),
    ])
}

/// Horizontal distance from `p` to the segment `a`-`b`.
pub fn segment_distance(p: &LocalPoint, a: &LocalPoint, b: &LocalPoint) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.x - (a.x + t * vx)).hypot(p.y - (a.y + t * vy))
}

/// Signed corridor margin for one leg: positive inside, negative outside.
///
/// The margin is the smaller of the lateral slack and the heading slack
/// expressed as meters (one degree counts as `width / 90`).
pub fn leg_corridor_margin(
    airfield: &AirfieldModel,
    runway: &Runway,
    leg: PatternLeg,
    state: &AircraftState,
) -> Result<f64, GeoError> {
    let segs = leg_segments(airfield, runway)?;
    let (_, a, b) = segs[leg.index()];
    Ok(corridor_margin(airfield, runway, leg, &a, &b, state))
}

fn corridor_margin(
    airfield: &AirfieldModel,
    runway: &Runway,
    leg: PatternLeg,
    a: &LocalPoint,
    b: &LocalPoint,
    state: &AircraftState,
) -> f64 {
    let width = airfield.pattern_width_m;
    let lateral = CORRIDOR_WIDTH_FACTOR * width - segment_distance(&state.position, a, b);
    let heading = (CORRIDOR_HEADING_TOL_DEG
        - angle_diff_deg(state.heading_deg, leg_heading(runway, leg)).abs())
        * width
        / 90.0;
    lateral.min(heading)
}

/// Leg whose corridor contains the aircraft; nearest segment wins on overlap.
pub fn classify_leg(
    airfield: &AirfieldModel,
    runway: &Runway,
    state: &AircraftState,
) -> Option<PatternLeg> {
    let segs = leg_segments(airfield, runway).ok()?;
    let mut best: Option<(f64, PatternLeg)> = None;
    for (leg, a, b) in segs.iter() {
        if corridor_margin(airfield, runway, *leg, a, b, state) < 0.0 {
            continue;
        }
        let d = segment_distance(&state.position, a, b);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, *leg));
        }
    }
    best.map(|(_, leg)| leg)
}

/// Largest corridor margin over all legs (signed, meters).
pub fn pattern_corridor_margin(
    airfield: &AirfieldModel,
    runway: &Runway,
    state: &AircraftState,
) -> f64 {
    match leg_segments(airfield, runway) {
        Ok(segs) => segs
            .iter()
            .map(|(leg, a, b)| corridor_margin(airfield, runway, *leg, a, b, state))
            .fold(f64::NEG_INFINITY, f64::max),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Runway with the largest headwind component; calm or variable wind falls
/// back to the calm-wind runway. Ties go to the lower runway number.
pub fn preferred_runway<'a>(airfield: &'a AirfieldModel, wind: &WindState) -> &'a Runway {
    let calm = || {
        airfield
            .runway(&airfield.calm_wind_runway)
            .unwrap_or(&airfield.runways[0])
    };
    if wind.is_calm() {
        return calm();
    }
    let mut best: Option<(&Runway, f64)> = None;
    for rwy in &airfield.runways {
        let hw = wind.headwind_kt(rwy.heading_deg).unwrap_or(0.0);
        best = match best {
            None => Some((rwy, hw)),
            Some((b, bhw)) => {
                if hw > bhw + 1e-9 || ((hw - bhw).abs() <= 1e-9 && rwy.number() < b.number()) {
                    Some((rwy, hw))
                } else {
                    Some((b, bhw))
                }
            }
        };
    }
    best.map(|(r, _)| r).unwrap_or_else(calm)
}
