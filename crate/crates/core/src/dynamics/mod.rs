//! Kinematic fixed-wing model and the motion-primitive alphabet.

mod dubins;
mod follow;

pub use dubins::{dubins_path, dubins_word_path, DubinsPath, DubinsWord, Pose2, SegmentKind};
pub use follow::{follow_waypoints, follow_with, Route, RoutePoint, CAPTURE_RADIUS_M, GLIDE_SLOPE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{bearing_unit, wrap_deg, LocalPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite state or input")]
    NonFinite,
    #[error("time step {0} s outside (0, 1]")]
    BadTimeStep(f64),
    #[error("empty waypoint list")]
    NoWaypoints,
    #[error("invalid control limits: {0}")]
    BadLimits(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankState {
    #[default]
    Level,
    TurningLeft,
    TurningRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub position: LocalPoint,
    pub heading_deg: f64,
    pub speed_mps: f64,
    #[serde(default)]
    pub vertical_rate_mps: f64,
    #[serde(default)]
    pub bank_state: BankState,
    #[serde(default)]
    pub time_s: f64,
}

impl AircraftState {
    pub fn new(position: LocalPoint, heading_deg: f64, speed_mps: f64) -> Self {
        AircraftState {
            position,
            heading_deg: wrap_deg(heading_deg),
            speed_mps,
            vertical_rate_mps: 0.0,
            bank_state: BankState::Level,
            time_s: 0.0,
        }
    }

    pub fn at_time(mut self, time_s: f64) -> Self {
        self.time_s = time_s;
        self
    }

    /// Ground velocity `(east, north, up)` in m/s.
    pub fn velocity(&self) -> (f64, f64, f64) {
        let (e, n) = bearing_unit(self.heading_deg);
        (e * self.speed_mps, n * self.speed_mps, self.vertical_rate_mps)
    }

    pub fn is_finite(&self) -> bool {
        self.position.x.is_finite()
            && self.position.y.is_finite()
            && self.position.z.is_finite()
            && self.heading_deg.is_finite()
            && self.speed_mps.is_finite()
            && self.vertical_rate_mps.is_finite()
            && self.time_s.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLimits {
    pub min_speed_mps: f64,
    pub cruise_speed_mps: f64,
    pub max_speed_mps: f64,
    pub max_turn_rate_dps: f64,
    pub max_climb_mps: f64,
    pub max_descent_mps: f64,
    pub accel_mps2: f64,
}

impl Default for ControlLimits {
    /// Cessna-172-like envelope flying standard-rate turns.
    fn default() -> Self {
        ControlLimits {
            min_speed_mps: 25.0,
            cruise_speed_mps: 50.0,
            max_speed_mps: 60.0,
            max_turn_rate_dps: 3.0,
            max_climb_mps: 3.5,
            max_descent_mps: 5.0,
            accel_mps2: 1.0,
        }
    }
}

impl ControlLimits {
    /// Same envelope with 6 deg/s turns (about 30 degrees of bank at cruise),
    /// tight enough that two 90-degree turns fit inside a 1000 m pattern.
    pub fn pattern() -> Self {
        ControlLimits { max_turn_rate_dps: 6.0, ..ControlLimits::default() }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let all = [
            self.min_speed_mps,
            self.cruise_speed_mps,
            self.max_speed_mps,
            self.max_turn_rate_dps,
            self.max_climb_mps,
            self.max_descent_mps,
            self.accel_mps2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite);
        }
        if !(self.min_speed_mps <= self.cruise_speed_mps && self.cruise_speed_mps <= self.max_speed_mps) {
            return Err(DynamicsError::BadLimits("require min <= cruise <= max speed"));
        }
        if self.cruise_speed_mps <= 0.0 {
            return Err(DynamicsError::BadLimits("cruise speed must be positive"));
        }
        if self.max_turn_rate_dps <= 0.0 || self.max_climb_mps <= 0.0 || self.max_descent_mps <= 0.0 {
            return Err(DynamicsError::BadLimits("rates must be positive"));
        }
        Ok(())
    }

    /// Turn radius at `speed` flying at the maximum turn rate.
    pub fn turn_radius(&self, speed: f64) -> f64 {
        speed / self.max_turn_rate_dps.to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Straight,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vertical {
    Level,
    Climb,
    Descend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedCmd {
    Hold,
    Slow,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub id: u8,
    pub turn: Turn,
    pub vertical: Vertical,
    pub speed_cmd: SpeedCmd,
    pub duration_s: f64,
}

impl MotionPrimitive {
    pub fn is_neutral(&self) -> bool {
        self.turn == Turn::Straight && self.vertical == Vertical::Level && self.speed_cmd == SpeedCmd::Hold
    }
}

pub const PRIMITIVE_DURATION_S: f64 = 5.0;

/// The 3x3 turn/vertical grid at held speed plus straight-level slow and fast.
/// Ids run turn-major: `0` is straight-level-hold.
pub fn default_primitive_set(limits: &ControlLimits) -> Vec<MotionPrimitive> {
    let _ = limits;
    let mut out = Vec::with_capacity(11);
    for turn in [Turn::Straight, Turn::Left, Turn::Right] {
        for vertical in [Vertical::Level, Vertical::Climb, Vertical::Descend] {
            out.push(MotionPrimitive {
                id: out.len() as u8,
                turn,
                vertical,
                speed_cmd: SpeedCmd::Hold,
                duration_s: PRIMITIVE_DURATION_S,
            });
        }
    }
    for speed_cmd in [SpeedCmd::Slow, SpeedCmd::Fast] {
        out.push(MotionPrimitive {
            id: out.len() as u8,
            turn: Turn::Straight,
            vertical: Vertical::Level,
            speed_cmd,
            duration_s: PRIMITIVE_DURATION_S,
        });
    }
    out
}

/// Looks up a primitive by its components in a primitive set.
pub fn find_primitive(
    set: &[MotionPrimitive],
    turn: Turn,
    vertical: Vertical,
    speed_cmd: SpeedCmd,
) -> Option<MotionPrimitive> {
    set.iter()
        .copied()
        .find(|p| p.turn == turn && p.vertical == vertical && p.speed_cmd == speed_cmd)
}

/// Advances one kinematic step.
///
/// Heading integrates at the commanded rate and position moves along the
/// mid-step heading, which keeps turn circles at the right radius to first
/// order. Altitude never goes below the ground.
pub fn step(
    state: &AircraftState,
    primitive: &MotionPrimitive,
    dt: f64,
    limits: &ControlLimits,
) -> Result<AircraftState, DynamicsError> {
    if !state.is_finite() || !dt.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    Ok(step_unchecked(state, primitive, dt, limits))
}

pub(crate) fn step_unchecked(
    state: &AircraftState,
    primitive: &MotionPrimitive,
    dt: f64,
    limits: &ControlLimits,
) -> AircraftState {
    let (rate, bank) = match primitive.turn {
        Turn::Straight => (0.0, BankState::Level),
        Turn::Left => (-limits.max_turn_rate_dps, BankState::TurningLeft),
        Turn::Right => (limits.max_turn_rate_dps, BankState::TurningRight),
    };
    let mid_heading = state.heading_deg + rate * dt * 0.5;
    let heading = wrap_deg(state.heading_deg + rate * dt);

    let speed_now = state.speed_mps.clamp(limits.min_speed_mps, limits.max_speed_mps);
    let target = match primitive.speed_cmd {
        SpeedCmd::Hold => speed_now,
        SpeedCmd::Slow => limits.min_speed_mps,
        SpeedCmd::Fast => limits.max_speed_mps,
    };
    let dv = (target - speed_now).clamp(-limits.accel_mps2 * dt, limits.accel_mps2 * dt);
    let speed = speed_now + dv;

    let mut vrate = match primitive.vertical {
        Vertical::Level => 0.0,
        Vertical::Climb => limits.max_climb_mps,
        Vertical::Descend => -limits.max_descent_mps,
    };
    let (e, n) = bearing_unit(mid_heading);
    let dist = state.speed_mps.min(limits.max_speed_mps) * dt;
    let mut z = state.position.z + vrate * dt;
    if z <= 0.0 {
        z = 0.0;
        if vrate < 0.0 {
            vrate = 0.0;
        }
    }
    AircraftState {
        position: LocalPoint::new(state.position.x + e * dist, state.position.y + n * dist, z),
        heading_deg: heading,
        speed_mps: speed,
        vertical_rate_mps: vrate,
        bank_state: bank,
        time_s: state.time_s + dt,
    }
}

/// Applies a primitive for `duration` seconds in steps of at most `dt`.
pub fn apply_for(
    state: &AircraftState,
    primitive: &MotionPrimitive,
    duration: f64,
    dt: f64,
    limits: &ControlLimits,
) -> AircraftState {
    let mut s = *state;
    let mut left = duration;
    while left > 1e-9 {
        let h = left.min(dt);
        s = step_unchecked(&s, primitive, h, limits);
        left -= h;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prim(set: &[MotionPrimitive], t: Turn, v: Vertical, s: SpeedCmd) -> MotionPrimitive {
        find_primitive(set, t, v, s).unwrap()
    }

    #[test]
    fn straight_east_one_second() {
        let l = ControlLimits::default();
        let set = default_primitive_set(&l);
        let s = AircraftState::new(LocalPoint::new(0.0, 0.0, 300.0), 90.0, 50.0);
        let n = step(&s, &set[0], 1.0, &l).unwrap();
        assert!((n.position.x - 50.0).abs() < 1e-9);
        assert!(n.position.y.abs() < 1e-9);
        assert_eq!(n.position.z, 300.0);
        assert_eq!(n.heading_deg, 90.0);
        assert_eq!(n.time_s, 1.0);
    }

    #[test]
    fn quarter_left_turn_matches_arc_chord() {
        let l = ControlLimits::default();
        let set = default_primitive_set(&l);
        let left = prim(&set, Turn::Left, Vertical::Level, SpeedCmd::Hold);
        let mut s = AircraftState::new(LocalPoint::new(0.0, 0.0, 300.0), 0.0, 50.0);
        for _ in 0..30 {
            s = step(&s, &left, 1.0, &l).unwrap();
        }
        assert!((s.heading_deg - 270.0).abs() < 1e-9);
        // Closed-form chord of a quarter circle at the standard-rate radius.
        let r = 50.0 / 3f64.to_radians();
        let chord = r * 2f64.sqrt();
        assert!((r - 954.93).abs() < 0.01);
        let disp = s.position.horizontal_distance(&LocalPoint::default());
        assert!((disp - chord).abs() / chord < 0.01, "{disp} vs {chord}");
        // Independent fine integration oracle.
        let (mut x, mut y, mut h) = (0.0f64, 0.0f64, 0.0f64);
        let dt = 1e-3;
        for _ in 0..30_000 {
            x += 50.0 * dt * h.to_radians().sin();
            y += 50.0 * dt * h.to_radians().cos();
            h -= 3.0 * dt;
        }
        assert!((disp - x.hypot(y)).abs() / chord < 0.01);
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = ControlLimits::default();
        let set = default_primitive_set(&l);
        let s = AircraftState::new(LocalPoint::new(0.0, 0.0, 300.0), 90.0, 50.0);
        assert_eq!(step(&s, &set[0], 1.5, &l), Err(DynamicsError::BadTimeStep(1.5)));
        assert_eq!(step(&s, &set[0], 0.0, &l), Err(DynamicsError::BadTimeStep(0.0)));
        let mut bad = s;
        bad.position.x = f64::NAN;
        assert_eq!(step(&bad, &set[0], 1.0, &l), Err(DynamicsError::NonFinite));
    }

    #[test]
    fn ground_clamp() {
        let l = ControlLimits::default();
        let set = default_primitive_set(&l);
        let d = prim(&set, Turn::Straight, Vertical::Descend, SpeedCmd::Hold);
        let s = AircraftState::new(LocalPoint::new(0.0, 0.0, 3.0), 90.0, 50.0);
        let n = step(&s, &d, 1.0, &l).unwrap();
        assert_eq!(n.position.z, 0.0);
        assert_eq!(n.vertical_rate_mps, 0.0);
    }

    #[test]
    fn primitive_set_composition() {
        let set = default_primitive_set(&ControlLimits::default());
        assert_eq!(set.len(), 11);
        assert!(set[0].is_neutral());
        for (i, p) in set.iter().enumerate() {
            assert_eq!(p.id as usize, i);
            assert_eq!(p.duration_s, 5.0);
        }
        assert!(find_primitive(&set, Turn::Straight, Vertical::Level, SpeedCmd::Slow).is_some());
        assert!(find_primitive(&set, Turn::Straight, Vertical::Level, SpeedCmd::Fast).is_some());
    }

    proptest! {
        #[test]
        fn limits_hold_under_random_primitives(
            seq in proptest::collection::vec(0usize..11, 1..200),
            v0 in 0.0f64..80.0,
        ) {
            let l = ControlLimits::default();
            let set = default_primitive_set(&l);
            let mut s = AircraftState::new(LocalPoint::new(0.0, 0.0, 300.0), 10.0, v0);
            for i in seq {
                let a = step(&s, &set[i], 1.0, &l).unwrap();
                let b = step(&s, &set[i], 1.0, &l).unwrap();
                prop_assert_eq!(a, b);
                prop_assert!(a.speed_mps <= l.max_speed_mps + 1e-12);
                prop_assert!(a.speed_mps >= l.min_speed_mps - 1e-12);
                prop_assert!(a.vertical_rate_mps <= l.max_climb_mps);
                prop_assert!(a.vertical_rate_mps >= -l.max_descent_mps);
                prop_assert!(a.position.z >= 0.0);
                s = a;
            }
        }
    }
}
