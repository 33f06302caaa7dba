//! Serves the bundled shop timeline, whose second half lost the
//! CheckoutService -> ShippingService call, so the HTTP API can be tried
//! without a real trace store.
//!
//! cargo run --release -p act-service --example serve_fixture -- [port]

use std::net::{Ipv4Addr, SocketAddr};

use act_core::fixtures::shop_timeline;
use act_core::store::Store;
use act_service::AppState;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let port: u16 = std::env::args().nth(1).map(|p| p.parse()).transpose()?.unwrap_or(8080);
    let dir = tempfile::tempdir()?;
    let tl = shop_timeline();
    Store::create(dir.path().join("store"), tl.traces.iter(), 1_000)?;
    let state = AppState::open(dir.path().join("store"), dir.path().join("scratch"))?;
    println!("incident starts at {} us; try:", tl.incident_start_us);
    println!(
        "  curl -s localhost:{port}/localize -H 'content-type: application/json' \\\n    -d '{{\"incident_start_us\": {}, \"sample_n\": 2000}}'",
        tl.incident_start_us
    );
    println!("  curl -s 'localhost:{port}/stats?n=2000&g=0.75'");
    act_service::serve(state, SocketAddr::from((Ipv4Addr::LOCALHOST, port))).await?;
    Ok(())
}
