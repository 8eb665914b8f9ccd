//! Shortest curvature-bounded path between two poses, then a closed-loop
//! flight through a few waypoints with the primitive follower.

use ctaf_sim::dynamics::{dubins_path, follow_waypoints, step, AircraftState, ControlLimits, Pose2, Route, RoutePoint, CAPTURE_RADIUS_M};
use ctaf_sim::geo::LocalPoint;

fn main() {
    let limits = ControlLimits::pattern();
    let radius = limits.cruise_speed_mps / limits.max_turn_rate_dps.to_radians();
    let path = dubins_path(Pose2::new(0.0, 0.0, 90.0), Pose2::new(0.0, 2000.0, 270.0), radius);
    println!("{:?} with radius {radius:.0} m, length {:.1} m", path.word, path.length());
    for (kind, len) in path.segments() {
        println!("  {kind:?} {len:.1} m");
    }

    let points = [(3000.0, 0.0), (3000.0, 2500.0), (0.0, 2500.0)].map(|(x, y)| RoutePoint::new(LocalPoint::new(x, y, 300.0)));
    let mut route = Route::new(points.to_vec());
    let mut s = AircraftState::new(LocalPoint::new(0.0, 0.0, 300.0), 90.0, 50.0);
    let arrived = |s: &AircraftState, r: &Route| r.on_last() && s.position.horizontal_distance(&r.points[r.active].point) <= CAPTURE_RADIUS_M;
    while !arrived(&s, &route) && s.time_s < 600.0 {
        let prim = follow_waypoints(&s, &mut route, &limits).unwrap();
        s = step(&s, &prim, 1.0, &limits).unwrap();
        if s.time_s as u64 % 20 == 0 {
            println!("t={:>3.0}  ({:>6.0}, {:>6.0})  hdg {:03.0}  waypoint {}", s.time_s, s.position.x, s.position.y, s.heading_deg, route.active);
        }
    }
    println!("arrived at t={:.0} s", s.time_s);
}
