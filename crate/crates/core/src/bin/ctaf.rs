use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use ctaf_sim::engine::{write_run, EngineError, Event, EventLog, Replay, Scenario, World};
use ctaf_sim::geo::{preferred_runway, AirfieldModel, WindDirection, WindState};
use ctaf_sim::radio::{generate_call, parse_call, parse_metar, IntentKind, PilotIntent, PositionReport, RadioCall};
use ctaf_sim::server::{self, ServeError, ServeOptions, ServerMessage, Snapshot};

#[derive(Parser)]
#[command(name = "ctaf", version, about = "Non-towered airfield simulator with an AI pilot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Output directory for event logs and trajectories.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = server::DEFAULT_PORT)]
    port: u16,
    /// Simulated seconds per wall-clock second, clamped to [0.1, 10].
    #[arg(long, global = true, default_value_t = 1.0)]
    timescale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a scenario headless (the bundled demo when no file is given).
    Run { scenario: Option<PathBuf> },
    /// Streams a scenario to cockpit clients over a web socket at /ws.
    Serve {
        scenario: Option<PathBuf>,
        /// Directory of the cockpit bundle to serve over HTTP.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Parses a METAR and prints the wind and the preferred runway.
    Metar { text: String },
    #[command(subcommand)]
    Radio(RadioCmd),
    /// Re-runs a recorded log and prints its snapshot stream.
    Replay { log: PathBuf },
}

#[derive(Subcommand)]
enum RadioCmd {
    /// Prints the structured form of a call.
    Parse { text: String },
    /// Prints the canonical phraseology for a call.
    Gen(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    callsign: String,
    /// LANDING, LOW_APPROACH, TAKEOFF, REMAIN_IN_PATTERN or CHANGE_RUNWAY.
    #[arg(long)]
    intent: String,
    #[arg(long)]
    runway: Option<String>,
    /// Pattern leg for a leg position report.
    #[arg(long, conflicts_with_all = ["miles", "cardinal"])]
    leg: Option<String>,
    /// Distance for a bearing position report.
    #[arg(long, requires = "cardinal")]
    miles: Option<u32>,
    #[arg(long, requires = "miles")]
    cardinal: Option<String>,
    #[arg(long)]
    inbound: bool,
    #[arg(long, default_value = "BUTLER")]
    airfield: String,
}

enum Failure {
    Validation(String),
    Invariant(String),
    PortBusy(u16),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::PortBusy(_) => 4,
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Invalid { .. } => Failure::Validation(e.to_string()),
            EngineError::Invariant { .. } => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Validation(m) | Failure::Invariant(m) | Failure::Other(m) => m.clone(),
                Failure::PortBusy(p) => format!("port {p} is already in use"),
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let flags = cli.flags;
    match cli.command {
        Command::Run { scenario } => run(&load(scenario.as_deref(), flags.seed)?, flags.out.as_deref()),
        Command::Serve { scenario, static_dir } => serve(load(scenario.as_deref(), flags.seed)?, &flags, static_dir),
        Command::Metar { text } => metar(&text),
        Command::Radio(RadioCmd::Parse { text }) => {
            let call = parse_call(&text).map_err(|e| Failure::Validation(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&call).unwrap_or_default());
            Ok(())
        }
        Command::Radio(RadioCmd::Gen(args)) => {
            println!("{}", generate(&args)?);
            Ok(())
        }
        Command::Replay { log } => replay(&log, flags.out.as_deref()),
    }
}

fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut s = match path {
        Some(p) => Scenario::from_json(&std::fs::read_to_string(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?)?,
        None => Scenario::demo(),
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn summarize(log: &EventLog) {
    for r in &log.records {
        match &r.event {
            Event::Stage { stage, description } => eprintln!("t={:>6.1}  STAGE {stage}  {description}", r.t),
            Event::Finished { agent, runway } => eprintln!("t={:>6.1}  {agent} landed on {runway}", r.t),
            _ => {}
        }
    }
}

fn run(scenario: &Scenario, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = World::new(scenario)?;
    let mut result = Ok(());
    while !w.done() {
        if let Err(e) = w.tick() {
            result = Err(Failure::from(e));
            break;
        }
    }
    let log = w.into_log();
    let dir = out.unwrap_or(Path::new("out"));
    write_run(dir, &log)?;
    summarize(&log);
    eprintln!("wrote {}", dir.display());
    result
}

fn serve(scenario: Scenario, flags: &Flags, static_dir: Option<PathBuf>) -> Result<(), Failure> {
    let world = World::new(&scenario)?;
    let rt = tokio::runtime::Runtime::new()?;
    let opts = ServeOptions { timescale: flags.timescale, static_dir, out: flags.out.clone() };
    let port = flags.port;
    rt.block_on(async move {
        let listener = server::bind(port).await?;
        eprintln!("serving {:?} on ws://{}/ws", scenario.name, listener.local_addr()?);
        let stop = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        server::serve(listener, world, opts, stop).await
    })
    .map_err(|e| match e {
        ServeError::PortBusy(p) => Failure::PortBusy(p),
        ServeError::Engine(e) => e.into(),
        ServeError::Io(e) => e.into(),
    })
}

fn wind_text(w: &WindState) -> String {
    if w.is_calm() {
        return "calm".into();
    }
    let dir = match w.direction {
        WindDirection::Degrees(d) => format!("{d:03.0}"),
        WindDirection::Variable => "VRB".into(),
    };
    match w.gust_kt {
        Some(g) => format!("{dir}@{:.0}G{g:.0}", w.speed_kt),
        None => format!("{dir}@{:.0}", w.speed_kt),
    }
}

fn metar(text: &str) -> Result<(), Failure> {
    let report = parse_metar(text).map_err(|e| Failure::Validation(e.to_string()))?;
    let field = AirfieldModel::butler();
    println!("station {}", report.station);
    println!("wind {}", wind_text(&report.wind));
    println!("preferred runway {}", preferred_runway(&field, &report.wind).designator);
    Ok(())
}

/// Reads a unit-like enum from its serialized name.
fn name<T: DeserializeOwned>(what: &str, s: &str, upper: bool) -> Result<T, Failure> {
    let v = if upper { s.to_uppercase() } else { s.to_lowercase() };
    serde_json::from_value(serde_json::Value::String(v)).map_err(|_| Failure::Validation(format!("unknown {what} {s:?}")))
}

fn generate(a: &GenArgs) -> Result<String, Failure> {
    let kind: IntentKind = name("intent", &a.intent, true)?;
    let field = AirfieldModel::butler();
    let position = match (&a.leg, a.miles, &a.cardinal) {
        (Some(leg), _, _) => {
            let leg = name("leg", leg, false)?;
            let runway = a.runway.clone().ok_or_else(|| Failure::Validation("--leg needs --runway".into()))?;
            let side = (leg == ctaf_sim::geo::PatternLeg::Downwind)
                .then(|| field.runway(&runway).map(|r| r.pattern_side).ok())
                .flatten();
            Some(PositionReport::Leg { leg, side, runway })
        }
        (None, Some(distance_nm), Some(c)) => {
            Some(PositionReport::Bearing { distance_nm, cardinal: name("cardinal", c, false)?, inbound: a.inbound })
        }
        _ => None,
    };
    let call = RadioCall::new(&a.airfield, &a.callsign, position, PilotIntent::new(kind, a.runway.as_deref()));
    generate_call(&call).map_err(|e| Failure::Validation(e.to_string()))
}

fn replay(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let recorded = EventLog::from_ndjson(&text)?;
    let mut r = Replay::new(&recorded)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let emit = |w: &mut std::io::StdoutLock, world: &World| writeln!(w, "{}", ServerMessage::Snapshot(Snapshot::of(world, false, 1.0)).to_json());
    emit(&mut w, &r.world)?;
    while !r.done() {
        r.tick()?;
        emit(&mut w, &r.world)?;
    }
    let log = r.world.into_log();
    if let Some(dir) = out {
        write_run(dir, &log)?;
    }
    summarize(&log);
    let states = |l: &EventLog| l.of_kind("STATE").cloned().collect::<Vec<_>>();
    if states(&log) != states(&recorded) {
        return Err(Failure::Invariant("replayed states differ from the recorded log".into()));
    }
    Ok(())
}
