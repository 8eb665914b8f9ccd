//! Writes the event log and the per-tick trajectory table, then reads the
//! table back.

use ctaf_sim::engine::{from_csv, run_scenario, write_run, Scenario, TRAJECTORY_FILE};

fn main() {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("ctaf-demo"));
    let log = run_scenario(&Scenario::demo()).unwrap();
    write_run(&dir, &log).unwrap();
    let rows = from_csv(&std::fs::read_to_string(dir.join(TRAJECTORY_FILE)).unwrap()).unwrap();
    println!("{} records and {} trajectory rows in {}", log.records.len(), rows.len(), dir.display());
    for row in rows.iter().step_by(60).take(10) {
        println!("{row:?}");
    }
}
