//! The localization pipeline: symmetric difference, thresholding and
//! reachability pruning, in that order.
//!
//! ```text
//! S  = union of views of successful traces in t_before
//! I  = union of views of all traces in t_incident
//! Is = union of views of successful traces in t_incident
//! missing    = S - I
//! additional = I - S - Is
//! ```
//!
//! Thresholding drops pairs too rare for their presence or absence in a
//! sample to mean anything. Missing pairs are judged against steady-state
//! frequencies, additional pairs against incident-window frequencies.
//! Reachability pruning then discards pairs whose edges lie downstream of
//! another result pair's edges in some trace, keeping the causes.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::LocalizeError;
use crate::ingest::TraceSet;
use crate::model::{edges_for, Edge, EdgeIds, OrderedPair, Trace};
use crate::reach::Reachability;
use crate::stats::{min_sample_size, sample_size_for_frequency, validate_guarantee, CorpusStats, GuaranteeConfig};

/// Missing and additional calls.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffSet {
    pub missing: BTreeSet<OrderedPair>,
    pub additional: BTreeSet<OrderedPair>,
}

impl DiffSet {
    pub fn new(
        missing: impl IntoIterator<Item = OrderedPair>,
        additional: impl IntoIterator<Item = OrderedPair>,
    ) -> Self {
        DiffSet {
            missing: missing.into_iter().collect(),
            additional: additional.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.missing.len() + self.additional.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.additional.is_empty()
    }

    /// Side-wise subset test.
    pub fn is_subset(&self, other: &DiffSet) -> bool {
        self.missing.is_subset(&other.missing) && self.additional.is_subset(&other.additional)
    }

    pub fn side(&self, side: Side) -> &BTreeSet<OrderedPair> {
        match side {
            Side::Missing => &self.missing,
            Side::Additional => &self.additional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Missing,
    Additional,
}

/// Concrete evidence that one pair's edge causes another's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub trace_id: String,
    pub cause_edge: EdgeIds,
    pub effect_edge: EdgeIds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum DiscardReason {
    BelowThreshold { freq: usize, threshold: f64 },
    PrunedAsEffectOf { cause: OrderedPair, witness: Witness },
}

/// Why a pair left the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub pair: OrderedPair,
    pub side: Side,
    #[serde(flatten)]
    pub reason: DiscardReason,
}

/// Work done by reachability pruning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneCounters {
    /// `(cause pair, effect pair, trace)` reachability tests.
    pub pair_tests: u64,
    /// Individual edge-to-edge checks performed inside those tests.
    pub edge_checks: u64,
    pub traces_examined: u64,
    /// Result size entering the stage, both sides.
    pub input_pairs: u64,
}

impl PruneCounters {
    fn absorb(&mut self, other: PruneCounters) {
        self.pair_tests += other.pair_tests;
        self.edge_checks += other.edge_checks;
        self.traces_examined += other.traces_examined;
        self.input_pairs += other.input_pairs;
    }
}

pub fn union_of_views<'a>(traces: impl Iterator<Item = &'a Trace>) -> BTreeSet<OrderedPair> {
    let mut out = BTreeSet::new();
    for t in traces {
        for pair in t.view().iter() {
            if !out.contains(pair) {
                out.insert(pair.clone());
            }
        }
    }
    out
}

/// Missing and additional calls between steady state and incident.
pub fn symmetric_difference(before: &TraceSet, incident: &TraceSet) -> Result<DiffSet, LocalizeError> {
    if incident.is_empty() {
        return Err(LocalizeError::EmptyIncident);
    }
    if !before.iter().any(Trace::is_success) {
        return Err(LocalizeError::NoBaseline);
    }
    let steady = union_of_views(before.iter().filter(|t| t.is_success()));
    let during = union_of_views(incident.iter());
    let during_ok = union_of_views(incident.iter().filter(|t| t.is_success()));
    let missing = steady.difference(&during).cloned().collect();
    let additional = during
        .iter()
        .filter(|p| !steady.contains(*p) && !during_ok.contains(*p))
        .cloned()
        .collect();
    let diff = DiffSet { missing, additional };
    debug_assert!(diff.missing.is_disjoint(&diff.additional));
    Ok(diff)
}

/// Result of a thresholding pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOutcome {
    pub diff: DiffSet,
    pub discarded: Vec<LedgerEntry>,
    pub threshold_before: f64,
    pub threshold_incident: f64,
}

/// Keeps pairs whose corpus frequency reaches the threshold for sample size `n`.
pub fn apply_threshold(
    diff: &DiffSet,
    stats_before: &CorpusStats,
    stats_incident: &CorpusStats,
    n: usize,
    g: f64,
) -> ThresholdOutcome {
    let threshold_before = stats_before.threshold(n, g);
    let threshold_incident = stats_incident.threshold(n, g);
    let mut out = DiffSet::default();
    let mut discarded = Vec::new();
    let sides = [
        (Side::Missing, &diff.missing, stats_before, threshold_before),
        (Side::Additional, &diff.additional, stats_incident, threshold_incident),
    ];
    for (side, pairs, stats, t) in sides {
        for pair in pairs {
            let freq = stats.freq(pair);
            if freq as f64 >= t {
                match side {
                    Side::Missing => out.missing.insert(pair.clone()),
                    Side::Additional => out.additional.insert(pair.clone()),
                };
            } else {
                discarded.push(LedgerEntry {
                    pair: pair.clone(),
                    side,
                    reason: DiscardReason::BelowThreshold { freq, threshold: t },
                });
            }
        }
    }
    ThresholdOutcome {
        diff: out,
        discarded,
        threshold_before,
        threshold_incident,
    }
}

/// Result of a reachability pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub diff: DiffSet,
    pub discarded: Vec<LedgerEntry>,
    pub counters: PruneCounters,
}

/// Discards pairs that are effects of other result pairs.
///
/// Missing pairs are examined in the successful traces of `before`, additional
/// pairs in every trace of `incident`. Candidate causes are always drawn from
/// the input set. A side stops as soon as a single pair remains on it.
pub fn prune_by_reachability(diff: &DiffSet, before: &TraceSet, incident: &TraceSet) -> PruneOutcome {
    let mut counters = PruneCounters::default();
    let mut discarded = Vec::new();

    let (missing, ledger, c) = prune_side(&diff.missing, Side::Missing, before.iter().filter(|t| t.is_success()));
    discarded.extend(ledger);
    counters.absorb(c);

    let (additional, ledger, c) = prune_side(&diff.additional, Side::Additional, incident.iter());
    discarded.extend(ledger);
    counters.absorb(c);

    PruneOutcome {
        diff: DiffSet { missing, additional },
        discarded,
        counters,
    }
}

fn prune_side<'a>(
    candidates: &BTreeSet<OrderedPair>,
    side: Side,
    traces: impl Iterator<Item = &'a Trace>,
) -> (BTreeSet<OrderedPair>, Vec<LedgerEntry>, PruneCounters) {
    let mut counters = PruneCounters {
        input_pairs: candidates.len() as u64,
        ..Default::default()
    };
    let mut remaining = candidates.clone();
    let mut ledger = Vec::new();
    if remaining.len() <= 1 {
        return (remaining, ledger, counters);
    }
    let mut ordered: Vec<&Trace> = traces.collect();
    ordered.sort_by(|a, b| a.trace_id().cmp(b.trace_id()));

    'traces: for trace in ordered {
        counters.traces_examined += 1;
        let present: Vec<(&OrderedPair, Vec<Edge>)> = candidates
            .iter()
            .filter(|p| trace.view().contains(p))
            .map(|p| (p, edges_for(trace, p)))
            .collect();
        if present.len() < 2 || !present.iter().any(|(p, _)| remaining.contains(*p)) {
            continue;
        }
        let mut reach = Reachability::new(trace);
        for (effect, effect_edges) in &present {
            if !remaining.contains(*effect) {
                continue;
            }
            for (cause, cause_edges) in &present {
                if cause == effect {
                    continue;
                }
                counters.pair_tests += 1;
                counters.edge_checks += (cause_edges.len() * effect_edges.len()) as u64;
                if let Some((e1, e2)) = reach.find_witness(cause_edges, effect_edges) {
                    remaining.remove(*effect);
                    ledger.push(LedgerEntry {
                        pair: (*effect).clone(),
                        side,
                        reason: DiscardReason::PrunedAsEffectOf {
                            cause: (*cause).clone(),
                            witness: Witness {
                                trace_id: trace.trace_id().to_string(),
                                cause_edge: trace.edge_ids(e1),
                                effect_edge: trace.edge_ids(e2),
                            },
                        },
                    });
                    if remaining.len() == 1 {
                        break 'traces;
                    }
                    break;
                }
            }
        }
    }
    (remaining, ledger, counters)
}

/// Which stages to run. The symmetric difference always runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StageSelection {
    pub threshold: bool,
    pub reachability: bool,
}

impl StageSelection {
    pub const FULL: StageSelection = StageSelection {
        threshold: true,
        reachability: true,
    };
    pub const DIFF_ONLY: StageSelection = StageSelection {
        threshold: false,
        reachability: false,
    };
    pub const DIFF_THRESHOLD: StageSelection = StageSelection {
        threshold: true,
        reachability: false,
    };
    pub const DIFF_REACHABILITY: StageSelection = StageSelection {
        threshold: false,
        reachability: true,
    };
}

/// Parameters a result was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sample_size: usize,
    pub guarantee: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Snapshot after each stage; skipped stages are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSnapshots {
    pub after_diff: DiffSet,
    pub after_threshold: Option<DiffSet>,
    pub after_reachability: Option<DiffSet>,
}

/// Wall-clock time per stage in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub diff_us: u64,
    pub threshold_us: u64,
    pub reachability_us: u64,
}

impl StageTimings {
    pub fn total_us(&self) -> u64 {
        self.diff_us + self.threshold_us + self.reachability_us
    }
}

/// Suggested follow-ups when thresholding leaves nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisory {
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_guarantee: Option<LowerGuarantee>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resample: Option<Resample>,
}

/// Retry with a weaker guarantee: trades extra results for time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerGuarantee {
    pub guarantee: f64,
    pub threshold_before: f64,
    pub threshold_incident: f64,
    /// Diff pairs that would survive thresholding at the lower guarantee.
    pub retained_pairs: usize,
}

/// Retry with a larger sample: trades time for fewer spurious results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resample {
    pub sample_size: usize,
}

/// Guarantee ladder walked by the advisory.
const GUARANTEE_STEPS: &[f64] = &[0.95, 0.9, 0.75, 0.5, 0.25];

/// Coverage target used when suggesting a larger sample.
pub const RESAMPLE_COVERAGE_TARGET: f64 = 0.9;

/// Everything a localization run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub config: RunConfig,
    pub stages: StageSnapshots,
    pub ledger: Vec<LedgerEntry>,
    pub timings: StageTimings,
    pub counters: PruneCounters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<Advisory>,
}

impl LocalizationResult {
    /// Output of the last stage that ran.
    pub fn answer(&self) -> &DiffSet {
        self.stages
            .after_reachability
            .as_ref()
            .or(self.stages.after_threshold.as_ref())
            .unwrap_or(&self.stages.after_diff)
    }
}

fn micros(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

/// Runs all three stages.
pub fn localize(
    before: &TraceSet,
    incident: &TraceSet,
    stats_before: &CorpusStats,
    stats_incident: &CorpusStats,
    cfg: &GuaranteeConfig,
) -> Result<LocalizationResult, LocalizeError> {
    run_stages(
        before,
        incident,
        stats_before,
        stats_incident,
        cfg,
        StageSelection::FULL,
    )
}

/// Runs the symmetric difference plus the selected filter stages.
pub fn run_stages(
    before: &TraceSet,
    incident: &TraceSet,
    stats_before: &CorpusStats,
    stats_incident: &CorpusStats,
    cfg: &GuaranteeConfig,
    stages: StageSelection,
) -> Result<LocalizationResult, LocalizeError> {
    validate_guarantee(cfg.guarantee)?;
    let start = Instant::now();
    let diff = symmetric_difference(before, incident)?;
    let mut timings = StageTimings {
        diff_us: micros(start),
        ..Default::default()
    };
    let mut result = LocalizationResult {
        config: RunConfig {
            sample_size: cfg.sample_size,
            guarantee: cfg.guarantee,
            seed: None,
        },
        stages: StageSnapshots {
            after_diff: diff,
            ..Default::default()
        },
        ledger: Vec::new(),
        timings,
        counters: PruneCounters::default(),
        advisory: None,
    };

    if stages.threshold {
        let start = Instant::now();
        let outcome = apply_threshold(
            &result.stages.after_diff,
            stats_before,
            stats_incident,
            cfg.sample_size,
            cfg.guarantee,
        );
        timings.threshold_us = micros(start);
        if outcome.diff.is_empty() {
            result.advisory = Some(advise(
                &result.stages.after_diff,
                &outcome,
                stats_before,
                stats_incident,
                cfg,
            ));
        }
        result.ledger.extend(outcome.discarded);
        result.stages.after_threshold = Some(outcome.diff);
    }

    if stages.reachability {
        let start = Instant::now();
        let input = result
            .stages
            .after_threshold
            .as_ref()
            .unwrap_or(&result.stages.after_diff);
        let outcome = prune_by_reachability(input, before, incident);
        timings.reachability_us = micros(start);
        result.ledger.extend(outcome.discarded);
        result.counters = outcome.counters;
        result.stages.after_reachability = Some(outcome.diff);
    }
    result.timings = timings;
    Ok(result)
}

fn advise(
    diff: &DiffSet,
    outcome: &ThresholdOutcome,
    stats_before: &CorpusStats,
    stats_incident: &CorpusStats,
    cfg: &GuaranteeConfig,
) -> Advisory {
    let n = cfg.sample_size;
    let lower_guarantee = GUARANTEE_STEPS.iter().copied().find(|&g| g < cfg.guarantee).map(|g| {
        let retry = apply_threshold(diff, stats_before, stats_incident, n, g);
        LowerGuarantee {
            guarantee: g,
            threshold_before: retry.threshold_before,
            threshold_incident: retry.threshold_incident,
            retained_pairs: retry.diff.len(),
        }
    });

    // Smallest larger sample that admits the most frequent discarded pair,
    // or the coverage-based size when nothing was discarded.
    let mut best: Option<usize> = None;
    for entry in &outcome.discarded {
        let stats = match entry.side {
            Side::Missing => stats_before,
            Side::Additional => stats_incident,
        };
        if let Some(size) = sample_size_for_frequency(stats.total(), stats.freq(&entry.pair), cfg.guarantee) {
            best = Some(best.map_or(size, |b| b.min(size)));
        }
    }
    let coverage_size = min_sample_size(stats_before, RESAMPLE_COVERAGE_TARGET, cfg.guarantee).ok();
    let suggested = best.or(coverage_size).map(|s| s.max(n + 1));
    let resample = suggested
        .filter(|&s| s <= stats_before.total().max(stats_incident.total()))
        .map(|sample_size| Resample { sample_size });

    Advisory {
        message: "no pair survived thresholding: lower the guarantee to accept more results, \
                  or sample more traces for a stronger result"
            .to_string(),
        lower_guarantee,
        resample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Event, Label};

    /// Builds a trace from `parent -> child` component chains; each listed
    /// path is rooted at a fresh event of its first component.
    fn trace(id: &str, label: Label, edges: &[(&str, &str)]) -> Trace {
        // Components name events one-to-one so (a,b),(b,c) chain up.
        let mut events: Vec<Event> = Vec::new();
        let idx = |c: &str, events: &mut Vec<Event>| {
            if let Some(i) = events.iter().position(|e| e.component == c) {
                i
            } else {
                events.push(Event::new(c, c, events.len() as i64));
                events.len() - 1
            }
        };
        let mut es = Vec::new();
        for (s, t) in edges {
            let a = idx(s, &mut events);
            let b = idx(t, &mut events);
            es.push(Edge::new(a, b));
        }
        if events.is_empty() {
            events.push(Event::new("root", "root", 0));
        }
        Trace::from_parts(id, events, es, label).unwrap()
    }

    fn set(traces: Vec<Trace>) -> TraceSet {
        TraceSet::from_traces(traces, "test").unwrap()
    }

    fn pair(a: &str, b: &str) -> OrderedPair {
        OrderedPair::new(a, b)
    }

    #[test]
    fn identical_unions_give_empty_diff() {
        let before = set(vec![trace("b1", Label::Success, &[("A", "B")])]);
        let incident = set(vec![trace("i1", Label::Success, &[("A", "B")])]);
        assert!(symmetric_difference(&before, &incident).unwrap().is_empty());
    }

    #[test]
    fn successful_incident_calls_are_not_additional() {
        let before = set(vec![trace("b1", Label::Success, &[("A", "B")])]);
        let incident = set(vec![
            trace("i1", Label::Success, &[("A", "B"), ("A", "X")]),
            trace("i2", Label::Failure, &[("A", "B"), ("A", "X"), ("A", "Y")]),
        ]);
        let d = symmetric_difference(&before, &incident).unwrap();
        assert!(d.missing.is_empty());
        assert_eq!(d.additional, [pair("A", "Y")].into());
    }

    #[test]
    fn failed_steady_state_traces_are_ignored() {
        let before = set(vec![
            trace("b1", Label::Success, &[("A", "B")]),
            trace("b2", Label::Failure, &[("A", "C")]),
        ]);
        let incident = set(vec![trace("i1", Label::Failure, &[("A", "D")])]);
        let d = symmetric_difference(&before, &incident).unwrap();
        assert_eq!(d.missing, [pair("A", "B")].into());
        assert_eq!(d.additional, [pair("A", "D")].into());
    }

    #[test]
    fn diff_errors() {
        let failed = set(vec![trace("b", Label::Failure, &[("A", "B")])]);
        let ok = set(vec![trace("i", Label::Success, &[("A", "B")])]);
        assert_eq!(symmetric_difference(&failed, &ok), Err(LocalizeError::NoBaseline));
        assert_eq!(
            symmetric_difference(&ok, &set(vec![])),
            Err(LocalizeError::EmptyIncident)
        );
    }

    #[test]
    fn threshold_keeps_universal_pairs_and_drops_unknown_ones() {
        let diff = DiffSet::new([pair("A", "B"), pair("Q", "R")], [pair("A", "F")]);
        let stats_b = CorpusStats::from_parts(None, 100, [(pair("A", "B"), 100)].into());
        let stats_i = CorpusStats::from_parts(None, 100, [(pair("A", "F"), 100)].into());
        for &(n, g) in &[(1usize, 0.999f64), (100, 0.5), (7, 0.99)] {
            let out = apply_threshold(&diff, &stats_b, &stats_i, n, g);
            assert_eq!(out.diff, DiffSet::new([pair("A", "B")], [pair("A", "F")]));
            assert_eq!(out.discarded.len(), 1);
            assert_eq!(out.discarded[0].pair, pair("Q", "R"));
        }
    }

    #[test]
    fn chain_collapses_to_its_root_cause() {
        let before = set(vec![trace("b1", Label::Success, &[("a", "b"), ("b", "c")])]);
        let incident = set(vec![trace("i1", Label::Failure, &[])]);
        let diff = DiffSet::new([pair("a", "b"), pair("b", "c")], []);
        let out = prune_by_reachability(&diff, &before, &incident);
        assert_eq!(out.diff.missing, [pair("a", "b")].into());
        assert_eq!(out.discarded.len(), 1);
        match &out.discarded[0].reason {
            DiscardReason::PrunedAsEffectOf { cause, witness } => {
                assert_eq!(cause, &pair("a", "b"));
                assert_eq!(witness.trace_id, "b1");
                assert_eq!(witness.cause_edge.target, "b");
                assert_eq!(witness.effect_edge.source, "b");
            }
            other => panic!("unexpected reason {other:?}"),
        }
    }

    #[test]
    fn singleton_and_siblings_survive() {
        let before = set(vec![trace("b1", Label::Success, &[("a", "b"), ("a", "c")])]);
        let incident = set(vec![trace("i1", Label::Failure, &[])]);
        let single = DiffSet::new([pair("a", "b")], []);
        assert_eq!(prune_by_reachability(&single, &before, &incident).diff, single);
        let siblings = DiffSet::new([pair("a", "b"), pair("a", "c")], []);
        let out = prune_by_reachability(&siblings, &before, &incident);
        assert_eq!(out.diff, siblings);
        assert!(out.discarded.is_empty());
    }

    #[test]
    fn failed_before_traces_do_not_witness() {
        let before = set(vec![
            trace("b1", Label::Failure, &[("a", "b"), ("b", "c")]),
            trace("b2", Label::Success, &[("x", "y")]),
        ]);
        let incident = set(vec![trace("i1", Label::Failure, &[])]);
        let diff = DiffSet::new([pair("a", "b"), pair("b", "c")], []);
        assert_eq!(prune_by_reachability(&diff, &before, &incident).diff, diff);
    }

    #[test]
    fn additional_side_uses_incident_traces() {
        let before = set(vec![trace("b1", Label::Success, &[("a", "b")])]);
        let incident = set(vec![trace("i1", Label::Failure, &[("a", "f"), ("f", "g")])]);
        let diff = DiffSet::new([], [pair("a", "f"), pair("f", "g")]);
        let out = prune_by_reachability(&diff, &before, &incident);
        assert_eq!(out.diff.additional, [pair("a", "f")].into());
    }

    #[test]
    fn empty_threshold_result_carries_advisory() {
        let before = set(vec![trace("b1", Label::Success, &[("a", "b")])]);
        let incident = set(vec![trace("i1", Label::Failure, &[("a", "c")])]);
        let stats_b = CorpusStats::from_parts(None, 10_000, [(pair("a", "b"), 20)].into());
        let stats_i = CorpusStats::from_parts(None, 10_000, [(pair("a", "c"), 20)].into());
        let cfg = GuaranteeConfig::new(0.99, 1000).unwrap();
        let r = localize(&before, &incident, &stats_b, &stats_i, &cfg).unwrap();
        assert!(r.answer().is_empty());
        let advisory = r.advisory.expect("advisory");
        let lower = advisory.lower_guarantee.unwrap();
        assert_eq!(lower.guarantee, 0.95);
        assert!(lower.threshold_before < stats_b.threshold(1000, 0.99));
        let resample = advisory.resample.unwrap();
        assert!(resample.sample_size > 1000);
        assert!(20.0 >= stats_b.threshold(resample.sample_size, 0.99));
    }

    #[test]
    fn stage_selection_controls_snapshots() {
        let before = set(vec![trace("b1", Label::Success, &[("a", "b"), ("b", "c")])]);
        let incident = set(vec![trace("i1", Label::Failure, &[("a", "x")])]);
        let stats = CorpusStats::build(&before);
        let cfg = GuaranteeConfig::new(0.99, 1).unwrap();
        let only = run_stages(&before, &incident, &stats, &stats, &cfg, StageSelection::DIFF_ONLY).unwrap();
        assert!(only.stages.after_threshold.is_none() && only.stages.after_reachability.is_none());
        assert_eq!(only.answer(), &only.stages.after_diff);
        let reach = run_stages(
            &before,
            &incident,
            &stats,
            &stats,
            &cfg,
            StageSelection::DIFF_REACHABILITY,
        )
        .unwrap();
        assert_eq!(reach.answer().missing, [pair("a", "b")].into());
    }

    #[test]
    fn threshold_can_remove_the_only_cause_of_a_pair() {
        // (r,a) is rare and causes (a,b). Reachability alone prunes (a,b) as its
        // effect; after thresholding (r,a) is gone, so (a,b) survives. The full
        // pipeline's answer is then not contained in the diff+reach answer.
        let before = set(vec![trace("b1", Label::Success, &[("r", "a"), ("a", "b")])]);
        let incident = set(vec![trace("i1", Label::Failure, &[("x", "y")])]);
        let stats = CorpusStats::from_parts(None, 1000, [(pair("r", "a"), 1), (pair("a", "b"), 100)].into());
        let cfg = GuaranteeConfig::new(0.99, 100).unwrap();
        let full = run_stages(&before, &incident, &stats, &stats, &cfg, StageSelection::FULL).unwrap();
        let reach = run_stages(
            &before,
            &incident,
            &stats,
            &stats,
            &cfg,
            StageSelection::DIFF_REACHABILITY,
        )
        .unwrap();
        assert_eq!(full.answer().missing, [pair("a", "b")].into());
        assert_eq!(reach.answer().missing, [pair("r", "a")].into());
        assert!(!full.answer().is_subset(reach.answer()));
    }
}
