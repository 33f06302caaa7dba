//! Shows how the frequency threshold and pair coverage move with the sample
//! size and the guarantee, on the bundled shop corpus.
//!
//! cargo run --release --example threshold_and_coverage

use act_core::fixtures::{shop_corpus, shop_frequent_pair, shop_rare_pair};
use act_core::stats::sample_size_for_frequency;
use act_core::{coverage, min_sample_size, CorpusStats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stats = CorpusStats::build(&shop_corpus());
    let total = stats.total();
    println!("N = {total}, {} distinct pairs\n", stats.pair_count());

    println!(
        "{:>6} {:>8} {:>10} {:>10} {:>10}",
        "n", "g", "threshold", "coverage", ""
    );
    for n in [500, 1000, 2000, 4000] {
        for g in [0.99, 0.75] {
            println!(
                "{n:>6} {g:>8} {:>10.2} {:>10.3}",
                stats.threshold(n, g),
                coverage(&stats, n, g)
            );
        }
    }
    println!();
    for pair in [shop_frequent_pair(), shop_rare_pair()] {
        let f = stats.freq(&pair);
        match sample_size_for_frequency(total, f, 0.99) {
            Some(n) => println!("{pair} appears in {f} traces; detectable at g=0.99 from n = {n}"),
            None => println!("{pair} appears in {f} traces; never detectable at g=0.99"),
        }
    }
    for target in [0.5, 0.9] {
        println!("coverage {target} needs n = {}", min_sample_size(&stats, target, 0.99)?);
    }
    Ok(())
}
