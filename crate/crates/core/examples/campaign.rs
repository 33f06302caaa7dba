//! Runs a small evaluation campaign and writes its report tables.
//!
//! cargo run --release --example campaign -- [runs-per-category] [out-dir]

use act_core::eval::synth::{generate, SynthConfig};
use act_core::eval::{run_campaign, CampaignConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let corpus = generate(&SynthConfig::shallow_wide());
    let outcome = run_campaign(&corpus, &CampaignConfig::new(runs, 1))?;
    let report = &outcome.report;
    println!(
        "n = {}, {} graded of {} attempted",
        report.sample_size, report.visible, report.attempted
    );
    println!(
        "{:<10} {:<22} {:>7} {:>12} {:>7} {:>10}",
        "method", "category", "exact", "superfluous", "wrong", "no answer"
    );
    for row in &report.summary {
        println!(
            "{:<10} {:<22} {:>6.1}% {:>11.1}% {:>6.1}% {:>9.1}%",
            row.method.name(),
            row.category,
            row.exact_pct,
            row.superfluous_pct,
            row.wrong_pct,
            row.no_answer_pct
        );
    }
    for a in &report.ablation {
        println!("{:<24} mean result size {:.3}", a.techniques, a.mean_size);
    }
    if let Some(dir) = args.next() {
        std::fs::create_dir_all(&dir)?;
        report.write_all(dir.as_ref())?;
        let mut f = std::fs::File::create(std::path::Path::new(&dir).join("time_cdf.csv"))?;
        outcome.timing.write_time_cdf_csv(&mut f)?;
        println!("wrote report to {dir}");
    }
    Ok(())
}
