//! Seeded two-aircraft encounters: an AI in the pattern and a silent intruder
//! flying a straight line through the AI's nominal position.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::scenario::Scenario;
use super::{AgentStatus, EngineError, World};
use crate::geo::LocalPoint;

/// Smallest horizontal distance between the two aircraft at the start.
pub const MIN_START_SEPARATION_M: f64 = 1500.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Encounter {
    pub seed: u64,
    pub scenario: Scenario,
    /// Time at which the intruder would meet the unfiltered AI.
    pub conflict_time_s: f64,
    /// Meeting point on the AI's nominal path.
    pub conflict_point: LocalPoint,
}

fn base(seed: u64, safety_filter: bool, time_limit_s: f64, agents: serde_json::Value) -> Result<Scenario, EngineError> {
    let v = json!({
        "name": format!("encounter {seed}"),
        "airfield": "KBTP",
        "wind": { "direction_deg": 260, "speed_kt": 10 },
        "seed": seed,
        "time_limit_s": time_limit_s,
        "separation_invariant": false,
        "ai": { "planning": "follow", "safety_filter": safety_filter },
        "agents": agents,
    });
    Scenario::from_json(&v.to_string())
}

/// Builds encounter `seed`. The intruder holds the conflict altitude at
/// cruise speed on a uniformly drawn heading, timed to arrive at the AI's
/// unfiltered position `conflict_time_s` after the start.
pub fn encounter(seed: u64, safety_filter: bool) -> Result<Encounter, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let along = rng.random_range(-1500.0..1500.0);
    let conflict_time_s = rng.random_range(30.0..70.0_f64).round();

    let start = LocalPoint::new(-565.0, -1115.0, 300.0).offset(80.0, along);
    let ego = json!({
        "id": "ai", "kind": "AI", "callsign": "ROBOT1",
        "x": start.x, "y": start.y, "z": 300.0, "heading_deg": 80.0, "speed_mps": 50.0,
        "goal": { "kind": "LANDING", "runway": "26" },
    });
    let time_limit_s = conflict_time_s + 40.0;

    let mut nominal = World::new(&base(seed, false, time_limit_s, json!([ego.clone()]))?)?;
    while nominal.time_s < conflict_time_s - 1e-9 {
        nominal.tick()?;
    }
    let conflict_point = nominal.agents[0].state.position;

    let speed = nominal.scenario.limits.cruise_speed_mps;
    // Headings that start the intruder alongside the AI are redrawn: the
    // encounter must open outside the separation cylinder.
    let (intruder_heading, from) = loop {
        let h = rng.random_range(0.0..360.0_f64);
        let from = conflict_point.offset(h + 180.0, speed * conflict_time_s);
        if from.horizontal_distance(&start) >= MIN_START_SEPARATION_M {
            break (h, from);
        }
    };
    let far = conflict_point.offset(intruder_heading, 20_000.0);
    let intruder = json!({
        "id": "intruder", "kind": "SCRIPTED", "callsign": format!("N{}", 100 + seed % 900),
        "x": from.x, "y": from.y, "z": conflict_point.z,
        "heading_deg": intruder_heading, "speed_mps": speed,
        "goal": { "kind": "LANDING", "runway": "08" },
        "script": [ { "at_s": 0.0, "action": { "type": "follow_waypoints", "points": [[far.x, far.y, conflict_point.z]] } } ],
    });
    let scenario = base(seed, safety_filter, time_limit_s, json!([ego, intruder]))?;
    Ok(Encounter { seed, scenario, conflict_time_s, conflict_point })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncounterResult {
    pub seed: u64,
    pub breach_ticks: u64,
    /// Smallest horizontal distance at any tick with less than the vertical
    /// floor between the two aircraft.
    pub min_distance_m: f64,
}

pub fn run_encounter(e: &Encounter) -> Result<EncounterResult, EngineError> {
    let mut w = World::new(&e.scenario)?;
    let h_safe = w.scenario.safety.h_safe_m;
    let mut min_distance_m = f64::INFINITY;
    while !w.done() {
        w.tick()?;
        if w.agents.iter().any(|a| a.status != AgentStatus::Active) {
            continue;
        }
        let (a, b) = (&w.agents[0].state.position, &w.agents[1].state.position);
        if (a.z - b.z).abs() < h_safe {
            min_distance_m = min_distance_m.min(a.horizontal_distance(b));
        }
    }
    Ok(EncounterResult { seed: e.seed, breach_ticks: w.breach_ticks, min_distance_m })
}
