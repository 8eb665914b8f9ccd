//! Traffic pattern waypoints and leg classification for both runways.

use ctaf_sim::dynamics::AircraftState;
use ctaf_sim::geo::{classify_leg, leg_heading, pattern_waypoints, AirfieldModel, WindState};

fn main() {
    let field = AirfieldModel::butler();
    for rw in &field.runways {
        println!("runway {} heading {:03.0}, {:?} traffic", rw.designator, rw.heading_deg, rw.pattern_side);
        for wp in pattern_waypoints(&field, rw).unwrap() {
            let p = wp.point;
            println!("  {:<10} ({:>7.0}, {:>7.0}, {:>4.0})", wp.leg.as_str(), p.x, p.y, p.z);
        }
    }

    let wind = WindState::from_deg(260.0, 12.0);
    let rw = ctaf_sim::geo::preferred_runway(&field, &wind);
    let wps = pattern_waypoints(&field, rw).unwrap();
    let mid = wps[2].point.lerp(&wps[3].point, 0.5);
    let state = AircraftState::new(mid, leg_heading(rw, ctaf_sim::geo::PatternLeg::Downwind), 50.0);
    println!("aircraft at ({:.0}, {:.0}) is on {:?} for {}", mid.x, mid.y, classify_leg(&field, rw, &state), rw.designator);
}
