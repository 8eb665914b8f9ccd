//! The separation filter against a straight plan into a head-on intruder,
//! then the randomized encounter suite with the filter on and off.

use ctaf_sim::dynamics::{AircraftState, ControlLimits};
use ctaf_sim::engine::encounter::{encounter, run_encounter};
use ctaf_sim::geo::LocalPoint;
use ctaf_sim::planner::Plan;
use ctaf_sim::predict::AgentBelief;
use ctaf_sim::safety::{filter_plan, SafetyConfig};

fn main() {
    let cfg = SafetyConfig::default();
    let ego = AircraftState::new(LocalPoint::new(0.0, 0.0, 300.0), 90.0, 50.0);
    let intruder = AgentBelief::new("intruder", AircraftState::new(LocalPoint::new(3000.0, 0.0, 300.0), 270.0, 50.0));
    let plan = Plan::unscored(&ego, ControlLimits::pattern(), vec![0; 12], "26");
    let out = filter_plan(&plan, &[intruder], &cfg);
    println!(
        "modified {} after {} candidates: {:?} -> {:?}, min distance {:.0} m at t={:.0} s",
        out.modified, out.candidates_checked, plan.primitives, out.plan.primitives, out.report.min_distance_m, out.report.time_of_min_s
    );

    for filter in [true, false] {
        let mut breached = 0;
        let mut closest = f64::INFINITY;
        for seed in 0..100 {
            let r = run_encounter(&encounter(seed, filter).unwrap()).unwrap();
            breached += (r.breach_ticks > 0) as u32;
            closest = closest.min(r.min_distance_m);
        }
        println!("filter {}: {breached}/100 encounters breach, closest {closest:.0} m", if filter { "on" } else { "off" });
    }
}
