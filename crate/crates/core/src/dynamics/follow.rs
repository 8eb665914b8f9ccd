//! Waypoint following by one-primitive lookahead against a Dubins reference.

use serde::{Deserialize, Serialize};

use super::dubins::{dubins_path, Pose2};
use super::{apply_for, PRIMITIVE_DURATION_S, default_primitive_set, AircraftState, ControlLimits, DynamicsError, MotionPrimitive};
use crate::geo::{angle_diff_deg, bearing_unit, LocalPoint};

/// Horizontal distance at which a waypoint counts as reached.
pub const CAPTURE_RADIUS_M: f64 = 150.0;
/// Steepest descent the altitude reference asks for, as height per meter flown.
pub const GLIDE_SLOPE: f64 = 1.0 / 12.0;
/// A waypoint whose perpendicular plane has been crossed within this range is
/// treated as reached even outside the capture radius.
const PASSED_RANGE_M: f64 = 600.0;
const SPEED_WEIGHT: f64 = 1.0;
const RADIUS_MARGIN: f64 = 1.1;
/// Heading error within which a nearby inbound leg is tracked as a line.
const LINE_CAPTURE_DEG: f64 = 45.0;
/// Straight-line extrapolation used to score the heading on line tracking.
const LINE_LOOKAHEAD_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutePoint {
    pub point: LocalPoint,
    /// `false` for aim points that are steered toward but never reached.
    #[serde(default = "yes")]
    pub capture: bool,
}

fn yes() -> bool {
    true
}

impl RoutePoint {
    pub fn new(point: LocalPoint) -> Self {
        RoutePoint { point, capture: true }
    }

    pub fn aim(point: LocalPoint) -> Self {
        RoutePoint { point, capture: false }
    }
}

/// Ordered waypoints with an active cursor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub points: Vec<RoutePoint>,
    pub active: usize,
    /// Wrap to the first point after the last one is reached.
    #[serde(default)]
    pub cyclic: bool,
}

impl Route {
    pub fn new(points: Vec<RoutePoint>) -> Self {
        Route { points, active: 0, cyclic: false }
    }

    pub fn from_points(points: &[LocalPoint]) -> Self {
        Route::new(points.iter().copied().map(RoutePoint::new).collect())
    }

    pub fn cyclic(mut self) -> Self {
        self.cyclic = true;
        self
    }

    pub fn starting_at(mut self, index: usize) -> Self {
        self.active = index.min(self.points.len().saturating_sub(1));
        self
    }

    pub fn active_point(&self) -> Option<&RoutePoint> {
        self.points.get(self.active)
    }

    fn previous(&self) -> Option<&RoutePoint> {
        if self.active > 0 {
            self.points.get(self.active - 1)
        } else if self.cyclic && self.points.len() > 1 {
            self.points.last()
        } else {
            None
        }
    }

    /// Compass bearing of the leg that ends at the active point. Without a
    /// previous point the leg starts at `from`.
    fn inbound_heading(&self, from: &LocalPoint) -> Option<f64> {
        let target = self.active_point()?.point;
        let Some(prev) = self.previous() else {
            return Some(from.bearing_to(&target));
        };
        let origin = prev.point;
        if origin.horizontal_distance(&target) < 1e-6 {
            return Some(from.bearing_to(&target));
        }
        Some(origin.bearing_to(&target))
    }

    fn next_point(&self) -> Option<LocalPoint> {
        if self.active + 1 < self.points.len() {
            Some(self.points[self.active + 1].point)
        } else if self.cyclic && self.points.len() > 1 {
            Some(self.points[0].point)
        } else {
            None
        }
    }

    fn advance(&mut self) {
        if self.active + 1 < self.points.len() {
            self.active += 1;
        } else if self.cyclic {
            self.active = 0;
        }
    }

    /// True when the active point is the terminal point of a non-cyclic route.
    pub fn on_last(&self) -> bool {
        !self.cyclic && self.active + 1 >= self.points.len()
    }

    /// Whether `p` has crossed the plane through the active point normal to
    /// its inbound leg.
    pub fn passed_active(&self, p: &LocalPoint) -> bool {
        let (Some(rp), Some(h)) = (self.active_point(), self.inbound_heading(p)) else {
            return false;
        };
        let (e, n) = bearing_unit(h);
        (p.x - rp.point.x) * e + (p.y - rp.point.y) * n > 0.0
    }

    /// Horizontal distance of `p` from the line through the active point
    /// along its inbound leg.
    pub fn cross_track(&self, p: &LocalPoint) -> f64 {
        let (Some(rp), Some(h)) = (self.active_point(), self.inbound_heading(p)) else {
            return f64::INFINITY;
        };
        let (e, n) = bearing_unit(h);
        ((p.x - rp.point.x) * n - (p.y - rp.point.y) * e).abs()
    }

    /// Outbound heading change at the active point, if it has a successor.
    fn turn_at_active(&self, inbound: f64) -> Option<(f64, f64)> {
        let here = self.active_point()?.point;
        let next = self.next_point()?;
        let leg = here.horizontal_distance(&next);
        (leg > 1e-6).then(|| (angle_diff_deg(here.bearing_to(&next), inbound).abs(), leg))
    }

    /// Moves the cursor past every point the aircraft has reached.
    ///
    /// A point counts as reached inside the capture radius, after crossing
    /// its perpendicular plane nearby, or, for corners, once the remaining
    /// distance is within the lead needed to roll out on the next leg with
    /// turns of `turn_radius_m`.
    pub fn update_capture(&mut self, p: &LocalPoint, turn_radius_m: f64) {
        self.update_capture_heading(p, None, turn_radius_m, 0.0)
    }

    /// [`Route::update_capture`] for an aircraft flying `heading_deg`.
    ///
    /// Corner leads only apply while the heading is within 45° of the
    /// inbound leg and are widened by `slack_m` to cover the decision period.
    pub fn update_capture_heading(&mut self, p: &LocalPoint, heading_deg: Option<f64>, turn_radius_m: f64, slack_m: f64) {
        for _ in 0..self.points.len() {
            let Some(rp) = self.active_point().copied() else { return };
            if !rp.capture {
                return;
            }
            let d = p.horizontal_distance(&rp.point);
            let mut reached = d <= CAPTURE_RADIUS_M || (self.cross_track(p) <= PASSED_RANGE_M && self.passed_active(p));
            if !reached {
                if let (Some(inb), true) = (self.inbound_heading(p), self.previous().is_some()) {
                    let aligned = heading_deg.is_none_or(|h| angle_diff_deg(h, inb).abs() <= 45.0);
                    if let (Some((turn, leg)), true) = (self.turn_at_active(inb), aligned) {
                        let lead = (turn_radius_m * (turn.to_radians() / 2.0).tan()).min(0.9 * leg).min(PASSED_RANGE_M);
                        let (e, n) = bearing_unit(inb);
                        let along = (rp.point.x - p.x) * e + (rp.point.y - p.y) * n;
                        let cross = ((p.x - rp.point.x) * n - (p.y - rp.point.y) * e).abs();
                        reached = along <= lead + slack_m && along > -PASSED_RANGE_M && cross <= lead.max(CAPTURE_RADIUS_M);
                    }
                }
            }
            if !reached || self.on_last() {
                return;
            }
            self.advance();
        }
    }

    /// Runs the capture update the follower uses for an aircraft at
    /// `state` and returns the turn radius it plans with.
    pub fn capture_for(&mut self, state: &AircraftState, limits: &ControlLimits) -> f64 {
        let speed = state.speed_mps.clamp(limits.min_speed_mps, limits.max_speed_mps);
        let radius = limits.turn_radius(speed.max(limits.cruise_speed_mps)) * RADIUS_MARGIN;
        self.update_capture_heading(&state.position, Some(state.heading_deg), radius, 0.5 * speed * PRIMITIVE_DURATION_S);
        radius
    }

    /// Altitude the follower should hold at `p`.
    pub fn altitude_reference(&self, p: &LocalPoint) -> f64 {
        let Some(rp) = self.active_point() else { return p.z };
        if !rp.capture && self.passed_active(p) {
            return rp.point.z;
        }
        let d = p.horizontal_distance(&rp.point);
        let above = (p.z - rp.point.z).max(0.0);
        rp.point.z + above.min(d * GLIDE_SLOPE)
    }
}

/// Selects the primitive that best tracks the route over one primitive
/// duration, after advancing the route cursor past captured points.
pub fn follow_waypoints(
    state: &AircraftState,
    route: &mut Route,
    limits: &ControlLimits,
) -> Result<MotionPrimitive, DynamicsError> {
    let set = default_primitive_set(limits);
    follow_with(state, route, limits, &set)
}

/// [`follow_waypoints`] over a caller-supplied primitive set.
pub fn follow_with(
    state: &AircraftState,
    route: &mut Route,
    limits: &ControlLimits,
    set: &[MotionPrimitive],
) -> Result<MotionPrimitive, DynamicsError> {
    if route.points.is_empty() {
        return Err(DynamicsError::NoWaypoints);
    }
    if set.is_empty() {
        return Err(DynamicsError::NoWaypoints);
    }
    let radius = route.capture_for(state, limits);
    let rp = *route.active_point().ok_or(DynamicsError::NoWaypoints)?;
    let inbound = route.inbound_heading(&state.position).unwrap_or(state.heading_deg);
    let start = Pose2::new(state.position.x, state.position.y, state.heading_deg);
    let passed_aim = !rp.capture && route.passed_active(&state.position);
    let (ie, in_) = bearing_unit(inbound);
    let cross_of = |q: &LocalPoint| ((q.x - rp.point.x) * in_ - (q.y - rp.point.y) * ie).abs();
    let track_line = passed_aim
        || (angle_diff_deg(state.heading_deg, inbound).abs() <= LINE_CAPTURE_DEG && cross_of(&state.position) <= radius);
    let goal = Pose2::new(rp.point.x, rp.point.y, inbound);
    let path = dubins_path(start, goal, radius);

    let mut best: Option<(f64, MotionPrimitive)> = None;
    for prim in set {
        let end = apply_for(state, prim, prim.duration_s, 1.0, limits);
        let flown = end.time_s - state.time_s;
        let travelled = limits.cruise_speed_mps * flown;
        let (rx, ry) = if track_line {
            let along = (end.position.x - rp.point.x) * ie + (end.position.y - rp.point.y) * in_;
            (rp.point.x + ie * along, rp.point.y + in_ * along)
        } else if travelled > path.length() {
            let extra = travelled - path.length();
            let (e, n) = bearing_unit(path.end().heading_deg);
            (rp.point.x + e * extra, rp.point.y + n * extra)
        } else {
            let s = path.sample(travelled);
            (s.x, s.y)
        };
        let mut lateral = (end.position.x - rx).hypot(end.position.y - ry);
        if track_line {
            let ahead = end.position.offset(end.heading_deg, limits.cruise_speed_mps * LINE_LOOKAHEAD_S);
            lateral += cross_of(&ahead);
        }
        let z_ref = if rp.capture || track_line { route.altitude_reference(&end.position) } else { state.position.z };
        let z_err = (end.position.z - z_ref).abs();
        let speed_err = (end.speed_mps - limits.cruise_speed_mps).abs() * SPEED_WEIGHT;
        let cost = lateral + z_err + speed_err;
        if best.is_none_or(|(c, _)| cost < c - 1e-9) {
            best = Some((cost, *prim));
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or(set[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{step, Turn, Vertical};

    fn cruise(p: LocalPoint, hdg: f64) -> AircraftState {
        AircraftState::new(p, hdg, 50.0)
    }

    /// Brute-force oracle: the primitive whose 5 s end point is closest to
    /// the waypoint in horizontal plus vertical distance.
    fn greedy_oracle(s: &AircraftState, wp: &LocalPoint, l: &ControlLimits) -> MotionPrimitive {
        let set = default_primitive_set(l);
        let mut best = (f64::INFINITY, set[0]);
        for p in &set {
            let mut e = *s;
            for _ in 0..5 {
                e = step(&e, p, 1.0, l).unwrap();
            }
            let c = e.position.horizontal_distance(wp) + (e.position.z - wp.z).abs();
            if c < best.0 - 1e-9 {
                best = (c, *p);
            }
        }
        best.1
    }

    #[test]
    fn aligned_is_neutral() {
        let l = ControlLimits::default();
        let s = cruise(LocalPoint::new(0.0, 0.0, 300.0), 90.0);
        let mut r = Route::from_points(&[LocalPoint::new(3000.0, 0.0, 300.0)]);
        let p = follow_waypoints(&s, &mut r, &l).unwrap();
        assert!(p.is_neutral(), "{p:?}");
    }

    #[test]
    fn waypoint_left_turns_left() {
        let l = ControlLimits::default();
        let s = cruise(LocalPoint::new(0.0, 0.0, 300.0), 0.0);
        let wp = LocalPoint::new(-3000.0, 0.0, 300.0);
        let mut r = Route::from_points(&[wp]);
        let p = follow_waypoints(&s, &mut r, &l).unwrap();
        assert_eq!(p.turn, Turn::Left);
        assert_eq!(greedy_oracle(&s, &wp, &l).turn, Turn::Left);
    }

    #[test]
    fn waypoint_below_descends() {
        let l = ControlLimits::default();
        let s = cruise(LocalPoint::new(0.0, 0.0, 300.0), 90.0);
        let wp = LocalPoint::new(1000.0, 0.0, 200.0);
        let mut r = Route::from_points(&[wp]);
        let p = follow_waypoints(&s, &mut r, &l).unwrap();
        assert_eq!(p.vertical, Vertical::Descend);
        assert_eq!(greedy_oracle(&s, &wp, &l).vertical, Vertical::Descend);
    }

    #[test]
    fn empty_route_errors() {
        let l = ControlLimits::default();
        let s = cruise(LocalPoint::default(), 0.0);
        let mut r = Route::new(vec![]);
        assert_eq!(follow_waypoints(&s, &mut r, &l), Err(DynamicsError::NoWaypoints));
    }

    #[test]
    fn captures_and_advances() {
        let l = ControlLimits::default();
        let s = cruise(LocalPoint::new(0.0, 0.0, 300.0), 90.0);
        let mut r = Route::from_points(&[LocalPoint::new(100.0, 0.0, 300.0), LocalPoint::new(5000.0, 0.0, 300.0)]);
        follow_waypoints(&s, &mut r, &l).unwrap();
        assert_eq!(r.active, 1);
        let mut c = r.clone().cyclic();
        c.active = 1;
        c.update_capture(&LocalPoint::new(5000.0, 0.0, 300.0), 500.0);
        assert_eq!(c.active, 0);
    }

    #[test]
    fn glide_reference_is_capped() {
        let r = Route::new(vec![RoutePoint::aim(LocalPoint::new(1200.0, 0.0, 0.0))]);
        let z = r.altitude_reference(&LocalPoint::new(0.0, 0.0, 300.0));
        assert!((z - 100.0).abs() < 1e-9);
        let z_far = r.altitude_reference(&LocalPoint::new(-6000.0, 0.0, 300.0));
        assert_eq!(z_far, 300.0);
    }

    #[test]
    fn converges_to_track_from_random_offsets() {
        use rand::{Rng, SeedableRng};
        let l = ControlLimits::default();
        let r_turn = l.turn_radius(l.cruise_speed_mps);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let a = LocalPoint::new(rng.random_range(-3000.0..3000.0), rng.random_range(-3000.0..3000.0), 300.0);
            let brg = rng.random_range(0.0..360.0);
            let sep = rng.random_range(4.0..8.0) * r_turn;
            let b = a.offset(brg, sep);
            let start = a.offset(rng.random_range(0.0..360.0), rng.random_range(0.0..800.0));
            let mut s = cruise(start, rng.random_range(0.0..360.0));
            let mut route = Route::from_points(&[a, b]);
            let mut best_xt = f64::INFINITY;
            for _ in 0..160 {
                let p = follow_waypoints(&s, &mut route, &l).unwrap();
                s = apply_for(&s, &p, 5.0, 1.0, &l);
                if route.active == 1 {
                    let (e, n) = bearing_unit(brg);
                    let xt = ((s.position.x - a.x) * n - (s.position.y - a.y) * e).abs();
                    best_xt = best_xt.min(xt);
                }
            }
            assert!(best_xt < 100.0, "cross-track {best_xt}");
        }
    }
}
