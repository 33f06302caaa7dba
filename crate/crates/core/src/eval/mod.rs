//! Grading, ablations and simulation campaigns.

mod campaign;
pub mod synth;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::ingest::{sample, TraceSet};
use crate::pipeline::{run_stages, DiffSet, LocalizationResult, StageSelection};
use crate::simulator::{ExpectedAnswer, SimulatedIncident};
use crate::stats::{CorpusStats, GuaranteeConfig};

pub use campaign::{
    detectable_targets, log_log_slope, run_campaign, scaling_probe, AblationRow, CampaignConfig, CampaignOutcome,
    CampaignReport, CorpusSource, CorpusSummary, GradeCounts, Method, MethodRun, RunRecord, SampleSizePolicy,
    ScalingPoint, SummaryRow, TimingReport, TimingRow,
};

/// How a method's answer compares to the injected incident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    /// Exactly the expected pairs.
    Exact,
    /// The expected pairs plus others.
    Superfluous,
    /// Non-empty but missing part of the expected answer.
    Wrong,
    /// Empty.
    NoAnswer,
}

impl Grade {
    pub const ALL: [Grade; 4] = [Grade::Exact, Grade::Superfluous, Grade::Wrong, Grade::NoAnswer];
}

/// Missing and additional sides are compared independently.
pub fn grade(answer: &DiffSet, expected: &ExpectedAnswer) -> Grade {
    if answer.is_empty() {
        return Grade::NoAnswer;
    }
    let covers = expected.missing_expected.is_subset(&answer.missing)
        && expected.additional_expected.is_subset(&answer.additional);
    if !covers {
        Grade::Wrong
    } else if answer.missing == expected.missing_expected && answer.additional == expected.additional_expected {
        Grade::Exact
    } else {
        Grade::Superfluous
    }
}

/// One of the pipeline's three techniques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    Diff,
    Threshold,
    Reach,
}

/// Maps a technique set to pipeline stages. The difference is mandatory.
pub fn stage_selection(techniques: &BTreeSet<Technique>) -> Result<StageSelection, EvalError> {
    if !techniques.contains(&Technique::Diff) {
        return Err(EvalError::MissingDiff);
    }
    Ok(StageSelection {
        threshold: techniques.contains(&Technique::Threshold),
        reachability: techniques.contains(&Technique::Reach),
    })
}

/// The four technique sets compared in an ablation, smallest first.
pub fn ablation_sets() -> Vec<BTreeSet<Technique>> {
    use Technique::*;
    vec![
        [Diff].into(),
        [Diff, Threshold].into(),
        [Diff, Reach].into(),
        [Diff, Threshold, Reach].into(),
    ]
}

pub fn technique_label(techniques: &BTreeSet<Technique>) -> String {
    techniques
        .iter()
        .map(|t| match t {
            Technique::Diff => "diff",
            Technique::Threshold => "threshold",
            Technique::Reach => "reach",
        })
        .collect::<Vec<_>>()
        .join("+")
}

/// Runs the pipeline on a simulated incident with only `techniques` enabled.
pub fn ablation(
    run: &SimulatedIncident,
    techniques: &BTreeSet<Technique>,
    cfg: &GuaranteeConfig,
) -> Result<LocalizationResult, EvalError> {
    let stages = stage_selection(techniques)?;
    Ok(run_stages(
        &run.before,
        &run.incident,
        &run.before_stats,
        &run.incident_stats,
        cfg,
        stages,
    )?)
}

/// Localizes between two disjoint samples of the same steady state.
/// Without an incident the answer should be empty.
pub fn null_run(
    corpus: &TraceSet,
    stats: &CorpusStats,
    cfg: &GuaranteeConfig,
    seed: u64,
) -> Result<LocalizationResult, EvalError> {
    let both = sample(corpus, cfg.sample_size * 2, seed)?;
    if both.len() < cfg.sample_size * 2 {
        return Err(EvalError::Simulation(
            crate::error::SimulationError::InsufficientCorpus {
                available: both.len(),
                requested: cfg.sample_size * 2,
            },
        ));
    }
    // Interleave by a second seeded shuffle so neither half is a time slice.
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..both.len()).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(
        seed ^ 0x9e37_79b9_7f4a_7c15,
    ));
    let (a, b) = order.split_at(cfg.sample_size);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        TraceSet::new(
            idx.into_iter().map(|i| both.traces()[i].clone()).collect(),
            both.source(),
        )
        .expect("unique ids")
    };
    Ok(crate::pipeline::localize(&pick(a), &pick(b), stats, stats, cfg)?)
}
