//! Connection-independent state of a live session: the world, pacing
//! controls, controller claims and per-connection sequence numbers.

use std::collections::BTreeMap;

use super::protocol::{clamp_timescale, ClientCommand, CommandBody, ServerMessage, Snapshot};
use crate::engine::{AgentKind, AgentStatus, EngineError, HumanCommand, World};

pub type ConnId = u64;

#[derive(Debug)]
pub struct Session {
    pub world: World,
    pub paused: bool,
    pub timescale: f64,
    claims: BTreeMap<String, ConnId>,
    last_seq: BTreeMap<ConnId, u64>,
    next_conn: ConnId,
}

impl Session {
    pub fn new(world: World, timescale: f64) -> Self {
        Session {
            world,
            paused: false,
            timescale: clamp_timescale(timescale),
            claims: BTreeMap::new(),
            last_seq: BTreeMap::new(),
            next_conn: 1,
        }
    }

    pub fn connect(&mut self) -> ConnId {
        let id = self.next_conn;
        self.next_conn += 1;
        id
    }

    /// Releases every claim held by `conn`.
    pub fn disconnect(&mut self, conn: ConnId) {
        self.claims.retain(|_, c| *c != conn);
        self.last_seq.remove(&conn);
    }

    /// Active HUMAN agents no connection controls.
    pub fn claimable(&self) -> Vec<String> {
        self.world
            .agents
            .iter()
            .filter(|a| a.kind == AgentKind::Human && a.status == AgentStatus::Active && !self.claims.contains_key(&a.id))
            .map(|a| a.id.clone())
            .collect()
    }

    pub fn controller(&self, agent_id: &str) -> Option<ConnId> {
        self.claims.get(agent_id).copied()
    }

    pub fn hello(&self) -> ServerMessage {
        ServerMessage::Hello { agents: self.claimable() }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::of(&self.world, self.paused, self.timescale)
    }

    /// Applies one client command; pilot commands reach the engine at its
    /// next tick. The first pilot command for an agent claims it.
    pub fn apply(&mut self, conn: ConnId, cmd: &ClientCommand) -> Result<(), ServerMessage> {
        let seq = cmd.client_seq;
        let reject = |reason: String| ServerMessage::Reject { seq, reason };
        if self.last_seq.get(&conn).is_some_and(|&last| seq <= last) {
            return Err(reject(format!("client_seq {seq} already seen")));
        }
        self.last_seq.insert(conn, seq);
        match &cmd.body {
            CommandBody::Pause => self.paused = true,
            CommandBody::Resume => self.paused = false,
            CommandBody::Timescale { factor } => self.timescale = clamp_timescale(*factor),
            body => {
                let Some(agent_id) = &cmd.agent_id else {
                    return Err(reject("pilot command without agent_id".into()));
                };
                if let Some(owner) = self.controller(agent_id) {
                    if owner != conn {
                        return Err(reject(format!("agent {agent_id:?} is controlled by another client")));
                    }
                }
                let action = body.pilot_action().expect("pilot command body");
                self.world.push_command(HumanCommand { agent_id: agent_id.clone(), action }).map_err(reject)?;
                self.claims.insert(agent_id.clone(), conn);
            }
        }
        Ok(())
    }

    /// Advances one tick unless paused or finished; returns whether it did.
    pub fn step(&mut self) -> Result<bool, EngineError> {
        if self.paused || self.world.done() {
            return Ok(false);
        }
        self.world.tick()?;
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{SpeedCmd, Turn, Vertical};
    use crate::engine::Scenario;

    fn session() -> Session {
        let json = r#"{ "name": "s", "airfield": "KBTP", "seed": 1, "ai": { "planning": "follow" }, "agents": [
            { "id": "ai", "kind": "AI", "x": -565, "y": -1115, "z": 300, "heading_deg": 80, "speed_mps": 50, "goal": { "kind": "LANDING" } },
            { "id": "pilot", "kind": "HUMAN", "callsign": "N1", "x": 0, "y": 8000, "z": 300, "heading_deg": 180, "speed_mps": 50, "goal": { "kind": "LANDING" } } ] }"#;
        Session::new(World::new(&Scenario::from_json(json).unwrap()).unwrap(), 1.0)
    }

    fn control(seq: u64) -> ClientCommand {
        ClientCommand {
            body: CommandBody::Control { turn: Turn::Left, vertical: Vertical::Level, speed_cmd: SpeedCmd::Hold },
            agent_id: Some("pilot".into()),
            client_seq: seq,
        }
    }

    fn session_cmd(body: CommandBody, seq: u64) -> ClientCommand {
        ClientCommand { body, agent_id: None, client_seq: seq }
    }

    #[test]
    fn first_claim_wins_until_disconnect() {
        let mut s = session();
        let (a, b) = (s.connect(), s.connect());
        assert_eq!(s.claimable(), ["pilot"]);
        s.apply(a, &control(1)).unwrap();
        assert!(s.claimable().is_empty());
        assert!(matches!(s.apply(b, &control(1)), Err(ServerMessage::Reject { seq: 1, .. })));
        s.disconnect(a);
        assert_eq!(s.claimable(), ["pilot"]);
        s.apply(b, &control(2)).unwrap();
        assert_eq!(s.controller("pilot"), Some(b));
    }

    #[test]
    fn duplicate_sequence_numbers_are_discarded() {
        let mut s = session();
        let a = s.connect();
        s.apply(a, &control(5)).unwrap();
        assert!(s.apply(a, &control(5)).is_err());
        assert!(s.apply(a, &control(4)).is_err());
        s.step().unwrap();
        assert_eq!(s.world.log().commands().len(), 1);
    }

    #[test]
    fn pause_stops_time_and_timescale_is_clamped() {
        let mut s = session();
        let a = s.connect();
        assert!(s.step().unwrap());
        s.apply(a, &session_cmd(CommandBody::Pause, 1)).unwrap();
        let t = s.snapshot().time_s;
        assert!(!s.step().unwrap());
        assert_eq!(s.snapshot().time_s, t);
        assert!(s.snapshot().paused);
        s.apply(a, &session_cmd(CommandBody::Resume, 2)).unwrap();
        assert!(s.step().unwrap());
        s.apply(a, &session_cmd(CommandBody::Timescale { factor: 100.0 }, 3)).unwrap();
        assert_eq!(s.timescale, 10.0);
    }

    #[test]
    fn invalid_pilot_commands_are_rejected() {
        let mut s = session();
        let a = s.connect();
        let mut c = control(1);
        c.agent_id = Some("ai".into());
        assert!(s.apply(a, &c).is_err());
        c.agent_id = None;
        c.client_seq = 2;
        assert!(s.apply(a, &c).is_err());
        assert_eq!(s.controller("ai"), None);
    }

    #[test]
    fn radio_command_reaches_the_next_snapshot() {
        let mut s = session();
        let a = s.connect();
        let text = "butler traffic, november one, final runway two six, landing runway two six, butler";
        let cmd = ClientCommand { body: CommandBody::Radio { text: text.into() }, agent_id: Some("pilot".into()), client_seq: 1 };
        s.apply(a, &cmd).unwrap();
        s.step().unwrap();
        let snap = s.snapshot();
        assert_eq!(snap.radio_tail.last().map(|r| r.text.as_str()), Some(text));
        s.step().unwrap();
        assert!(s.world.log().of_kind("BELIEF").any(|r| matches!(&r.event,
            crate::engine::Event::Belief { about, .. } if about == "pilot")));
    }
}
