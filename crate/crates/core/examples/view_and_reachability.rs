//! Builds a small trace by hand, prints its view, and checks which calls
//! happen downstream of which.
//!
//! cargo run --example view_and_reachability

use act_core::model::edge_reaches;
use act_core::{Event, Trace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Frontend calls Payments twice; the second call fans out to Token and Ledger.
    let events = vec![
        Event::new("fe", "Frontend", 0).with_attr("status", "200"),
        Event::new("p1", "PaymentsService", 1),
        Event::new("p2", "PaymentsService", 2),
        Event::new("tok", "TokenService", 3),
        Event::new("kv", "KeyVault", 4),
        Event::new("led", "LedgerService", 5),
    ];
    let edges = [("fe", "p1"), ("fe", "p2"), ("p2", "tok"), ("tok", "kv"), ("p2", "led")];
    let trace = Trace::new("demo", events, edges)?;

    println!(
        "{} edges collapse to {} ordered pairs:",
        trace.edges().len(),
        trace.view().len()
    );
    for pair in trace.view().iter() {
        println!("  {pair}");
    }
    println!();
    for &cause in trace.edges() {
        let downstream: Vec<String> = trace
            .edges()
            .iter()
            .filter(|&&e| edge_reaches(&trace, cause, e).unwrap_or(false))
            .map(|&e| trace.edge_pair(e).to_string())
            .collect();
        let ids = trace.edge_ids(cause);
        let label = format!("{}->{} {}", ids.source, ids.target, trace.edge_pair(cause));
        println!("{label:<40} reaches [{}]", downstream.join(", "));
    }
    Ok(())
}
