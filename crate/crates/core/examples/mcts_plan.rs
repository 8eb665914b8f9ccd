//! One planning cycle from pattern entry with traffic inbound.

use ctaf_sim::dynamics::{default_primitive_set, AircraftState, ControlLimits};
use ctaf_sim::geo::{AirfieldModel, LocalPoint};
use ctaf_sim::planner::{plan, OtherTrack, PlanContext, PlannerConfig};
use ctaf_sim::predict::predict_linear;
use ctaf_sim::radio::IntentKind;
use ctaf_sim::route::route_for;
use ctaf_sim::stl::RulesConfig;

fn main() {
    let field = AirfieldModel::butler();
    let rw = field.runway("26").unwrap();
    let limits = ControlLimits::pattern();
    let ego = AircraftState::new(LocalPoint::new(-565.0, -1115.0, 300.0), 80.0, 50.0);
    let route = route_for(&field, rw, IntentKind::Landing, &ego).unwrap();
    let mut ctx = PlanContext::new(&field, rw, IntentKind::Landing, limits, RulesConfig::default());
    let other = AircraftState::new(LocalPoint::new(0.0, 6000.0, 300.0), 180.0, 50.0);
    ctx.others.push(OtherTrack { start: other.position, t0: 0.0, forecast: predict_linear(&other, 60.0, 1.0).unwrap() });

    let p = plan(&ego, &route, &ctx, &PlannerConfig { iterations: 1000, ..PlannerConfig::default() });
    let set = default_primitive_set(&limits);
    let names: Vec<String> = p.primitives.iter().map(|&i| format!("{:?}/{:?}", set[i as usize].turn, set[i as usize].vertical)).collect();
    println!("{:?} plan, robustness {:.1}", p.status, p.robustness);
    println!("primitives: {}", names.join(" "));
    for q in p.most_likely_branch.iter().step_by(2) {
        println!("  ({:>6.0}, {:>6.0}, {:>4.0})", q.x, q.y, q.z);
    }
}
