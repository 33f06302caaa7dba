//! Injects each incident category into the shop corpus and localizes it.
//!
//! cargo run --release --example simulate_incident -- [n] [g]

use act_core::fixtures::{shop_corpus, shop_recovery_spec, shop_unreachable_spec};
use act_core::simulator::{simulate_incident_with_stats, IncidentCategory, SimulationSpec, Target};
use act_core::{localize, CorpusStats, GuaranteeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4000);
    let g: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.99);
    let corpus = shop_corpus();
    let stats = CorpusStats::build(&corpus);
    let down = SimulationSpec {
        category: IncidentCategory::ComponentDown,
        target: Target::Component("InventoryService".into()),
        ..shop_unreachable_spec(n, 7)
    };
    let cfg = GuaranteeConfig::new(g, n)?;
    for spec in [shop_unreachable_spec(n, 7), shop_recovery_spec(n, 7), down] {
        let run = simulate_incident_with_stats(&corpus, &stats, &spec)?;
        let r = localize(&run.before, &run.incident, &run.before_stats, &run.incident_stats, &cfg)?;
        println!("{} on {}", spec.category.name(), spec.target);
        println!(
            "  mutated {} of {} eligible sampled traces",
            run.mutated_in_sample, run.eligible_in_sample
        );
        println!("  expected {}", serde_json::to_string(&run.expected)?);
        println!("  answer   {}", serde_json::to_string(r.answer())?);
        if let Some(a) = &r.advisory {
            println!("  advisory {}", a.message);
        }
    }
    Ok(())
}
