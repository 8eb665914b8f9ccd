//! The bundled two-aircraft scenario: a runway disagreement settled over the
//! radio, then both aircraft land on runway 26.

use ctaf_sim::engine::{run_scenario, Event, Scenario};

fn main() {
    let log = run_scenario(&Scenario::demo()).unwrap();
    for r in &log.records {
        match &r.event {
            Event::Stage { stage, description } => println!("t={:>5.0}  STAGE {stage}: {description}", r.t),
            Event::Radio { from, text, .. } => println!("t={:>5.0}  {from:>5}: {text}", r.t),
            Event::Finished { agent, runway } => println!("t={:>5.0}  {agent} landed on {runway}", r.t),
            _ => {}
        }
    }
}
