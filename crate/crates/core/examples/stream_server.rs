//! Serves the bundled scenario to web socket clients at ws://127.0.0.1:PORT/ws
//! until interrupted.

use ctaf_sim::engine::{Scenario, World};
use ctaf_sim::server::{bind, serve, ServeOptions, DEFAULT_PORT};

#[tokio::main]
async fn main() {
    let port = std::env::args().nth(1).and_then(|p| p.parse().ok()).unwrap_or(DEFAULT_PORT);
    let world = World::new(&Scenario::demo()).unwrap();
    let listener = match bind(port).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(4);
        }
    };
    println!("ws://{}/ws", listener.local_addr().unwrap());
    let opts = ServeOptions { timescale: 2.0, ..ServeOptions::default() };
    let stop = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve(listener, world, opts, stop).await.unwrap();
}
