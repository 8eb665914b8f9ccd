//! Tabular trajectory export, one row per active agent per tick.

use std::fmt::Write as _;
use std::path::Path;

use super::log::{Event, EventLog};
use super::{AgentStatus, EngineError};
use crate::geo::LocalPoint;

pub const CSV_HEADER: &str = "tick,time_s,agent_id,x_m,y_m,z_m,heading_deg,speed_mps";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub time_s: f64,
    pub agent_id: String,
    pub position: LocalPoint,
    pub heading_deg: f64,
    pub speed_mps: f64,
}

/// Rows for every ACTIVE agent in every STATE record.
pub fn trajectory_rows(log: &EventLog) -> Vec<TrajectoryRow> {
    let mut out = Vec::new();
    for r in &log.records {
        if let Event::State { tick, agents } = &r.event {
            for a in agents.iter().filter(|a| a.status == AgentStatus::Active) {
                out.push(TrajectoryRow {
                    tick: *tick,
                    time_s: r.t,
                    agent_id: a.id.clone(),
                    position: a.position(),
                    heading_deg: a.heading_deg,
                    speed_mps: a.speed_mps,
                });
            }
        }
    }
    out
}

pub fn to_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let p = r.position;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.tick, r.time_s, r.agent_id, p.x, p.y, p.z, r.heading_deg, r.speed_mps
        );
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<TrajectoryRow>, EngineError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(EngineError::invalid("csv", "missing or unexpected header"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = || EngineError::invalid(&format!("csv line {}", i + 2), line.to_string());
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        out.push(TrajectoryRow {
            tick: f[0].parse().map_err(|_| bad())?,
            time_s: num(f[1])?,
            agent_id: f[2].to_string(),
            position: LocalPoint::new(num(f[3])?, num(f[4])?, num(f[5])?),
            heading_deg: num(f[6])?,
            speed_mps: num(f[7])?,
        });
    }
    Ok(out)
}

/// File names written into an output directory by [`write_run`].
pub const EVENTS_FILE: &str = "events.ndjson";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

/// Writes the event log and the trajectory CSV into `dir`, creating it.
pub fn write_run(dir: &Path, log: &EventLog) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(EVENTS_FILE), log.to_ndjson())?;
    std::fs::write(dir.join(TRAJECTORY_FILE), to_csv(&trajectory_rows(log)))
}
