//! Pattern routes for each pilot intent and the landing test.

use crate::dynamics::{AircraftState, Route, RoutePoint};
use crate::geo::{
    angle_diff_deg, classify_leg, pattern_waypoints, AirfieldModel, GeoError, LocalPoint, PatternLeg, Runway,
};
use crate::radio::IntentKind;

/// Height of the pass over the runway on a low approach or touch-and-go.
pub const LOW_PASS_AGL_M: f64 = 15.0;
/// Distance past the threshold of the touchdown aim point.
pub const AIM_BEYOND_THRESHOLD_M: f64 = 100.0;
const LANDED_Z_M: f64 = 0.5;
const RUNWAY_LATERAL_TOL_M: f64 = 150.0;
const RUNWAY_BEFORE_TOL_M: f64 = 150.0;
const LANDING_HEADING_TOL_DEG: f64 = 45.0;
const DEPARTURE_LEG_M: f64 = 10_000.0;

/// Index into [`pattern_waypoints`] at which an aircraft at `state` joins
/// the pattern of `runway`.
pub fn join_index(airfield: &AirfieldModel, runway: &Runway, state: &AircraftState) -> Result<usize, GeoError> {
    let wps = pattern_waypoints(airfield, runway)?;
    Ok(match classify_leg(airfield, runway, state) {
        Some(PatternLeg::Upwind) => 0,
        Some(PatternLeg::Crosswind) => 1,
        Some(PatternLeg::Downwind) => {
            let hdg = crate::geo::leg_heading(runway, PatternLeg::Downwind);
            let (e, n) = crate::geo::bearing_unit(hdg);
            let p = state.position;
            (2..=5)
                .find(|&i| {
                    let w = wps[i].point;
                    (w.x - p.x) * e + (w.y - p.y) * n > 0.0
                })
                .unwrap_or(6)
        }
        Some(PatternLeg::Base) => 6,
        Some(PatternLeg::Final) => 7,
        None => 2,
    })
}

fn aim_point(runway: &Runway) -> LocalPoint {
    runway.threshold.offset(runway.heading_deg, AIM_BEYOND_THRESHOLD_M).with_z(0.0)
}

/// Route that flies `kind` on `runway` from the aircraft's current position.
///
/// Landing routes end at an aim point just past the threshold. Low approach
/// and pattern work cycle around the pattern with a low pass over the
/// runway. Departures climb out along the runway heading.
pub fn route_for(
    airfield: &AirfieldModel,
    runway: &Runway,
    kind: IntentKind,
    state: &AircraftState,
) -> Result<Route, GeoError> {
    let wps = pattern_waypoints(airfield, runway)?;
    let join = join_index(airfield, runway, state)?;
    let alt = airfield.pattern_altitude_m;
    let route = match kind {
        IntentKind::Landing | IntentKind::ChangeRunway | IntentKind::None => {
            let mut pts: Vec<RoutePoint> = wps[..7].iter().map(|w| RoutePoint::new(w.point)).collect();
            pts.push(RoutePoint::aim(aim_point(runway)));
            Route::new(pts).starting_at(join)
        }
        IntentKind::LowApproach | IntentKind::RemainInPattern => {
            let mut pts: Vec<RoutePoint> = wps[..7].iter().map(|w| RoutePoint::new(w.point)).collect();
            pts.push(RoutePoint::new(runway.threshold.with_z(LOW_PASS_AGL_M)));
            Route::new(pts).cyclic().starting_at(join)
        }
        IntentKind::Takeoff => {
            let end = runway.departure_end().with_z(alt * 0.5);
            let out = runway.threshold.offset(runway.heading_deg, DEPARTURE_LEG_M).with_z(alt);
            Route::new(vec![RoutePoint::new(end), RoutePoint::aim(out)])
        }
    };
    Ok(route)
}

/// Moves the cursor of a landing route forward to the leg the aircraft is
/// flying, so that a waypoint skipped by cutting a corner is not chased.
pub fn resync_landing(route: &mut Route, airfield: &AirfieldModel, runway: &Runway, state: &AircraftState) {
    if route.cyclic || classify_leg(airfield, runway, state).is_none() {
        return;
    }
    if let Ok(j) = join_index(airfield, runway, state) {
        let j = j.min(route.points.len().saturating_sub(1));
        if j > route.active {
            route.active = j;
        }
    }
}

/// Whether `state` has touched down on `runway`.
pub fn is_landed(runway: &Runway, state: &AircraftState) -> bool {
    state.position.z <= LANDED_Z_M
        && runway.contains_ground_point(&state.position, RUNWAY_LATERAL_TOL_M, RUNWAY_BEFORE_TOL_M)
        && angle_diff_deg(state.heading_deg, runway.heading_deg).abs() <= LANDING_HEADING_TOL_DEG
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{apply_for, follow_waypoints, ControlLimits};

    fn fly(route: &mut Route, mut s: AircraftState, limits: &ControlLimits, rwy: &Runway, max_s: f64) -> (AircraftState, bool) {
        while s.time_s < max_s {
            let p = follow_waypoints(&s, route, limits).unwrap();
            for _ in 0..5 {
                s = apply_for(&s, &p, 1.0, 1.0, limits);
                if is_landed(rwy, &s) {
                    return (s, true);
                }
            }
        }
        (s, false)
    }

    #[test]
    fn downwind_join_lands_on_runway() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap().clone();
        let l = ControlLimits::pattern();
        let wps = pattern_waypoints(&af, &rwy).unwrap();
        let s = AircraftState::new(wps[2].point, crate::geo::leg_heading(&rwy, PatternLeg::Downwind), 50.0);
        assert_eq!(join_index(&af, &rwy, &s).unwrap(), 3);
        let mut route = route_for(&af, &rwy, IntentKind::Landing, &s).unwrap();
        let (end, landed) = fly(&mut route, s, &l, &rwy, 900.0);
        assert!(landed, "ended at {:?}", end.position);
        assert!(end.position.horizontal_distance(&rwy.threshold) < rwy.length_m);
    }

    #[test]
    fn outside_joins_at_downwind_entry_and_lands() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap().clone();
        let l = ControlLimits::pattern();
        let s = AircraftState::new(LocalPoint::new(0.0, 9000.0, 600.0), 180.0, 50.0);
        assert_eq!(join_index(&af, &rwy, &s).unwrap(), 2);
        let mut route = route_for(&af, &rwy, IntentKind::Landing, &s).unwrap();
        let (_, landed) = fly(&mut route, s, &l, &rwy, 1500.0);
        assert!(landed);
    }

    #[test]
    fn low_approach_never_lands() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap().clone();
        let l = ControlLimits::pattern();
        let wps = pattern_waypoints(&af, &rwy).unwrap();
        let s = AircraftState::new(wps[4].point, crate::geo::leg_heading(&rwy, PatternLeg::Downwind), 50.0);
        let mut route = route_for(&af, &rwy, IntentKind::LowApproach, &s).unwrap();
        let mut min_z = f64::INFINITY;
        let mut st = s;
        for _ in 0..120 {
            let p = follow_waypoints(&st, &mut route, &l).unwrap();
            st = apply_for(&st, &p, 5.0, 1.0, &l);
            if rwy.contains_ground_point(&st.position, 150.0, 0.0) {
                min_z = min_z.min(st.position.z);
            }
        }
        assert!(min_z < 60.0 && min_z > 0.5, "low pass at {min_z}");
    }

    #[test]
    fn landed_requires_alignment() {
        let af = AirfieldModel::butler();
        let rwy = af.runway("26").unwrap();
        let p = rwy.threshold.offset(rwy.heading_deg, 300.0);
        assert!(is_landed(rwy, &AircraftState::new(p, 260.0, 30.0)));
        assert!(!is_landed(rwy, &AircraftState::new(p, 80.0, 30.0)));
        assert!(!is_landed(rwy, &AircraftState::new(p.with_z(10.0), 260.0, 30.0)));
    }
}
