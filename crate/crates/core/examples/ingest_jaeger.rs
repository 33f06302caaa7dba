//! Converts a Jaeger query-API export into canonical JSONL and labels the
//! traces by status code.
//!
//! cargo run --example ingest_jaeger -- [export.json]

use std::fs::File;
use std::io::{BufReader, Write};

use act_core::{parse_traces, write_traces, Format, LabelCriterion};

const BUNDLED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/jaeger/checkout.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| BUNDLED.to_string());
    let parsed = parse_traces(BufReader::new(File::open(&path)?), Format::Jaeger, &path)?;
    for err in &parsed.errors {
        eprintln!("record {}: {}", err.line, err.message);
    }
    let set = parsed.set.relabeled(&LabelCriterion::default());
    for t in set.iter() {
        println!(
            "{}  {:?}  {} spans  {} calls",
            t.trace_id(),
            t.label(),
            t.events().len(),
            t.edges().len()
        );
    }
    println!();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    write_traces(&set, &mut out)?;
    out.flush()?;
    Ok(())
}
