//! Localizes the Payments/Token incident and prints every stage with the
//! reason each discarded pair was dropped.
//!
//! cargo run --example localize_running_example

use act_core::fixtures::running_example;
use act_core::localize;
use act_core::pipeline::DiscardReason;
use act_core::DiffSet;

fn show(title: &str, d: &DiffSet) {
    println!("{title}");
    for p in &d.missing {
        println!("  missing     {p}");
    }
    for p in &d.additional {
        println!("  additional  {p}");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = running_example();
    let r = localize(
        &fx.before,
        &fx.incident,
        &fx.stats_before,
        &fx.stats_incident,
        &fx.config,
    )?;
    show("after difference", &r.stages.after_diff);
    if let Some(d) = &r.stages.after_threshold {
        show("after threshold", d);
    }
    if let Some(d) = &r.stages.after_reachability {
        show("after reachability", d);
    }
    println!("\ndiscarded");
    for e in &r.ledger {
        match &e.reason {
            DiscardReason::BelowThreshold { freq, threshold } => {
                println!(
                    "  {:?} {}: seen in {freq} traces, threshold {threshold:.2}",
                    e.side, e.pair
                )
            }
            DiscardReason::PrunedAsEffectOf { cause, witness } => println!(
                "  {:?} {}: downstream of {cause} in {}",
                e.side, e.pair, witness.trace_id
            ),
        }
    }
    println!("\nmatches expected: {}", *r.answer() == fx.expected.as_diff());
    Ok(())
}
