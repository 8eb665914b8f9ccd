//! Forecasts another aircraft from what it was seen doing and what it said.

use ctaf_sim::dynamics::AircraftState;
use ctaf_sim::geo::{AirfieldModel, LocalPoint, WindState};
use ctaf_sim::predict::{forecast, AgentBelief, PredictConfig};
use ctaf_sim::radio::PilotIntent;

fn main() {
    let field = AirfieldModel::butler();
    let wind = WindState::from_deg(260.0, 12.0);
    let cfg = PredictConfig::default();
    let mut belief = AgentBelief::new("human", AircraftState::new(LocalPoint::new(0.0, 9260.0, 300.0), 180.0, 50.0));

    let show = |label: &str, b: &AgentBelief| {
        let f = forecast(b, &field, &wind, &cfg).unwrap();
        let end = f.samples.last().map(|s| s.1).unwrap();
        println!("{label}: {:?} (confidence {:.1}), at +{:.0} s near ({:.0}, {:.0}, {:.0})", f.mode, f.confidence, cfg.horizon_s, end.x, end.y, end.z);
    };
    show("silent", &belief);
    belief.hear(PilotIntent::landing("08"), 2.0);
    show("landing 08", &belief);
    belief.hear(PilotIntent::landing("26"), 5.0);
    show("landing 26", &belief);
}
