use std::process::{Command, Output};

use ctaf_sim::engine::{EventLog, EVENTS_FILE, TRAJECTORY_FILE};

fn ctaf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctaf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_log_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ctaf(&["run", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let log = EventLog::from_ndjson(&std::fs::read_to_string(dir.path().join(EVENTS_FILE)).unwrap()).unwrap();
    let stages: Vec<u8> = log.stages().iter().map(|s| s.0).collect();
    assert_eq!(stages, [1, 2, 3, 4, 5, 6]);
    assert!(dir.path().join(TRAJECTORY_FILE).exists());
}

#[test]
fn seed_override_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(ctaf(&["run", "--seed", "7", "--out", d.path().to_str().unwrap()]).status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(EVENTS_FILE)).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn malformed_scenario_exits_2_with_a_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{ "name": "x", "airfield": "KBTP", "seed": 1, "agents": [ { "id": "a" } ] }"#).unwrap();
    let o = ctaf(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("agents[0]"));
}

#[test]
fn metar_prints_wind_and_runway() {
    let o = ctaf(&["metar", "KBTP 121855Z 26012KT 10SM CLR 22/12 A3002"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("wind 260@12"));
    assert!(text.contains("preferred runway 26"));
    assert_eq!(ctaf(&["metar", "not a report"]).status.code(), Some(2));
}

#[test]
fn radio_parse_and_generate() {
    let stage1 = "butler traffic, november three two one, five miles north, inbound, landing runway zero eight, butler";
    let o = ctaf(&["radio", "parse", stage1]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["intent"]["kind"], "LANDING");
    assert_eq!(v["intent"]["runway"], "08");
    assert_eq!(ctaf(&["radio", "parse", "hello"]).status.code(), Some(2));

    let o = ctaf(&["radio", "gen", "--callsign", "N321", "--intent", "LANDING", "--runway", "08", "--miles", "5", "--cardinal", "north", "--inbound"]);
    assert_eq!(stdout(&o).trim(), stage1);
}

#[test]
fn replay_streams_snapshots_to_stage_six() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ctaf(&["run", "--out", dir.path().to_str().unwrap()]).status.code(), Some(0));
    let o = ctaf(&["replay", dir.path().join(EVENTS_FILE).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["type"], "snapshot");
    assert!(last["agents"].as_array().unwrap().iter().all(|a| a["status"] == "FINISHED"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("STAGE 6"));
}

#[test]
fn busy_port_exits_4() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    assert_eq!(ctaf(&["serve", "--port", &port]).status.code(), Some(4));
}
