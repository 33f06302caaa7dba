//! Generates a synthetic corpus, prints its shape and coverage profile, and
//! optionally writes it out as a trace store.
//!
//! cargo run --release --example generate_corpus -- [shallow-wide|deep-narrow] [store-dir]

use act_core::eval::synth::{generate, SynthConfig};
use act_core::stats::{coverage, min_sample_size, CorpusStats, DEFAULT_GUARANTEE};
use act_core::store::{Store, DEFAULT_SHARD_SIZE};
use act_core::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "shallow-wide".into());
    let cfg = SynthConfig::preset(&preset).ok_or("unknown preset")?;
    let corpus = generate(&cfg);
    let stats = CorpusStats::build(&corpus);
    let components: std::collections::BTreeSet<&str> = corpus
        .iter()
        .flat_map(|t| t.events().iter().map(|e| e.component.as_str()))
        .collect();
    println!("preset        {preset}");
    println!("traces        {}", corpus.len());
    println!("failures      {}", corpus.count_label(Label::Failure));
    println!("unlabeled     {}", corpus.count_label(Label::Unlabeled));
    println!("components    {}", components.len());
    println!("pairs         {}", stats.pair_count());
    let g = DEFAULT_GUARANTEE;
    for target in [0.5, 0.8, 0.9, 0.95] {
        match min_sample_size(&stats, target, g) {
            Ok(n) => println!(
                "coverage {target:.2} at n = {n:>6} (threshold {:.2}, actual {:.3})",
                stats.threshold(n, g),
                coverage(&stats, n, g)
            ),
            Err(e) => println!("coverage {target:.2}: {e}"),
        }
    }
    if let Some(dir) = args.next() {
        let store = Store::create(&dir, corpus.iter(), DEFAULT_SHARD_SIZE)?;
        println!("wrote {} shards to {dir}", store.manifest().shards.len());
    }
    Ok(())
}
