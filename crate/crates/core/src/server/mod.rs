//! Real-time streaming service for cockpit clients.
//!
//! One pacing task ticks the engine at wall-clock speed times the session
//! timescale and fans snapshots out to every connection. Each connection
//! receives a `hello` and a full snapshot on connect, then one snapshot per
//! tick. Pilot commands are queued for the next tick.

pub mod protocol;
pub mod session;

use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};
use tower_http::services::ServeDir;

use crate::engine::{write_run, EngineError, World};
pub use protocol::{ClientCommand, ClientMessage, CommandBody, ServerMessage, Snapshot, SnapshotAgent};
pub use session::{ConnId, Session};

pub const DEFAULT_PORT: u16 = 8008;
/// Snapshots a connection may fall behind before it is dropped.
const CLIENT_BACKLOG: usize = 256;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port {0} is already in use")]
    PortBusy(u16),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    pub timescale: f64,
    /// Directory of the cockpit bundle served over plain HTTP.
    pub static_dir: Option<PathBuf>,
    /// Where the event log and trajectory go once the scenario ends.
    pub out: Option<PathBuf>,
}

pub async fn bind(port: u16) -> Result<TcpListener, ServeError> {
    TcpListener::bind(("127.0.0.1", port)).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServeError::PortBusy(port),
        _ => ServeError::Io(e),
    })
}

struct Inner {
    session: Session,
    /// Bumped for every broadcast message; late joiners skip older ones.
    version: u64,
    written: bool,
}

struct Shared {
    inner: Mutex<Inner>,
    updates: broadcast::Sender<(u64, Arc<str>)>,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn publish(&self, inner: &mut Inner) {
        inner.version += 1;
        let json: Arc<str> = ServerMessage::Snapshot(inner.session.snapshot()).to_json().into();
        let _ = self.updates.send((inner.version, json));
    }
}

/// Serves `world` on `listener` until `shutdown` resolves or the engine
/// reports an invariant breach.
pub async fn serve(
    listener: TcpListener,
    world: World,
    opts: ServeOptions,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let (updates, _) = broadcast::channel(CLIENT_BACKLOG);
    let shared = Arc::new(Shared {
        inner: Mutex::new(Inner { session: Session::new(world, opts.timescale), version: 0, written: false }),
        updates,
    });
    let mut app = Router::new().route("/ws", get(upgrade)).with_state(shared.clone());
    if let Some(dir) = &opts.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let http = axum::serve(listener, app).with_graceful_shutdown(shutdown);
    tokio::select! {
        r = http => Ok(r?),
        r = pace(shared, opts.out) => r,
    }
}

async fn pace(shared: Arc<Shared>, out: Option<PathBuf>) -> Result<(), ServeError> {
    loop {
        let wait = {
            let mut g = shared.lock();
            if g.session.step()? {
                shared.publish(&mut g);
            }
            if g.session.world.done() && !g.written {
                g.written = true;
                if let Some(dir) = &out {
                    write_run(dir, g.session.world.log())?;
                }
            }
            g.session.world.scenario.dt_s / g.session.timescale
        };
        tokio::time::sleep(Duration::from_secs_f64(wait)).await;
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, shared))
}

async fn connection(socket: WebSocket, shared: Arc<Shared>) {
    let (mut sink, mut stream) = socket.split();
    let mut updates = shared.updates.subscribe();
    let (conn, greeting, since) = {
        let mut g = shared.lock();
        let conn = g.session.connect();
        let greeting = [g.session.hello().to_json(), ServerMessage::Snapshot(g.session.snapshot()).to_json()];
        (conn, greeting, g.version)
    };
    for text in greeting {
        if sink.send(Message::Text(text.into())).await.is_err() {
            shared.lock().session.disconnect(conn);
            return;
        }
    }

    let (replies, mut reply_rx) = mpsc::unbounded_channel::<String>();
    let reader = {
        let shared = shared.clone();
        tokio::spawn(async move {
            while let Some(Ok(msg)) = stream.next().await {
                let text = match msg {
                    Message::Text(t) => t,
                    Message::Close(_) => break,
                    _ => continue,
                };
                let reply = match serde_json::from_str::<ClientMessage>(&text) {
                    Ok(ClientMessage::Command(cmd)) => {
                        let mut g = shared.lock();
                        match g.session.apply(conn, &cmd) {
                            Ok(()) if cmd.body.pilot_action().is_none() => {
                                shared.publish(&mut g);
                                None
                            }
                            Ok(()) => None,
                            Err(reject) => Some(reject.to_json()),
                        }
                    }
                    Err(e) => Some(ServerMessage::Reject { seq: 0, reason: format!("bad message: {e}") }.to_json()),
                };
                if let Some(r) = reply {
                    if replies.send(r).is_err() {
                        break;
                    }
                }
            }
        })
    };

    loop {
        let text = tokio::select! {
            u = updates.recv() => match u {
                Ok((v, json)) if v > since => json.to_string(),
                Ok(_) => continue,
                // A lagging or closed feed ends the connection.
                Err(_) => break,
            },
            r = reply_rx.recv() => match r {
                Some(t) => t,
                None => break,
            },
        };
        if sink.send(Message::Text(text.into())).await.is_err() {
            break;
        }
    }
    reader.abort();
    shared.lock().session.disconnect(conn);
}
