//! Runs the closest-pair baselines and ACT on the same simulated incident.
//!
//! cargo run --release --example baselines_vs_act

use act_core::baselines::{baseline_localize, BaselineKind};
use act_core::eval::grade;
use act_core::fixtures::{shop_corpus, shop_recovery_spec};
use act_core::simulator::simulate_incident_with_stats;
use act_core::{localize, CorpusStats, GuaranteeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = shop_corpus();
    let stats = CorpusStats::build(&corpus);
    let spec = shop_recovery_spec(2000, 5);
    let run = simulate_incident_with_stats(&corpus, &stats, &spec)?;
    println!("expected {}\n", serde_json::to_string(&run.expected)?);

    let cfg = GuaranteeConfig::new(0.99, spec.before_size)?;
    let act = localize(&run.before, &run.incident, &run.before_stats, &run.incident_stats, &cfg)?;
    println!(
        "ACT        {:?}  {} pairs  {} us",
        grade(act.answer(), &run.expected),
        act.answer().len(),
        act.timings.total_us()
    );
    for kind in BaselineKind::ALL {
        let b = baseline_localize(kind, &run.before, &run.incident)?;
        println!(
            "{:<10} {:?}  {} pairs  {} us  ({} comparisons, closest {} vs {})",
            kind.name(),
            grade(b.result.answer(), &run.expected),
            b.result.answer().len(),
            b.result.timings.total_us(),
            b.matched.comparisons,
            b.matched.success_id,
            b.matched.failure_id
        );
    }
    Ok(())
}
