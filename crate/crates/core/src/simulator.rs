//! Incident injection into sampled trace sets.
//!
//! | Category               | Target        | Mutation                                             |
//! |------------------------|---------------|------------------------------------------------------|
//! | `ComponentDown`        | component `c` | cut every edge into a `c` event plus what hangs below |
//! | `ComponentUnreachable` | pair `(P, Q)` | cut every `(P, Q)` edge plus what hangs below          |
//! | `BuggyFailureRecovery` | pair `(P, Q)` | as above, then call a fallback from each call site    |
//!
//! "What hangs below" is every event that is no longer reachable from the
//! trace's original roots once the cut edges are gone; an event shared with a
//! surviving branch stays. Every mutated trace is a failure: the caller of
//! each cut edge gets `status = 500`.

use std::collections::BTreeSet;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimulationError;
use crate::ingest::TraceSet;
use crate::model::{Edge, Event, Label, OrderedPair, Trace};
use crate::pipeline::{prune_by_reachability, union_of_views, DiffSet};
use crate::stats::CorpusStats;

/// Status written onto callers whose call was cut.
pub const FAILURE_STATUS: &str = "500";
/// Suffix used to derive a fallback component name.
pub const FALLBACK_SUFFIX: &str = "-fallback";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncidentCategory {
    ComponentDown,
    ComponentUnreachable,
    BuggyFailureRecovery,
}

impl IncidentCategory {
    pub const ALL: [IncidentCategory; 3] = [
        IncidentCategory::ComponentDown,
        IncidentCategory::ComponentUnreachable,
        IncidentCategory::BuggyFailureRecovery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IncidentCategory::ComponentDown => "component_down",
            IncidentCategory::ComponentUnreachable => "component_unreachable",
            IncidentCategory::BuggyFailureRecovery => "buggy_failure_recovery",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Component(String),
    Pair(OrderedPair),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Component(c) => f.write_str(c),
            Target::Pair(p) => p.fmt(f),
        }
    }
}

fn default_fraction() -> f64 {
    1.0
}

/// An incident to inject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub category: IncidentCategory,
    pub target: Target,
    #[serde(default = "default_fraction")]
    pub mutation_fraction: f64,
    pub seed: u64,
    pub before_size: usize,
    pub incident_size: usize,
    /// Fallback component for buggy recovery; defaults to `<target>-fallback`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

impl SimulationSpec {
    fn validate(&self) -> Result<(), SimulationError> {
        if !(self.mutation_fraction > 0.0 && self.mutation_fraction <= 1.0) {
            return Err(SimulationError::InvalidFraction(self.mutation_fraction));
        }
        let ok = matches!(
            (self.category, &self.target),
            (IncidentCategory::ComponentDown, Target::Component(_))
                | (IncidentCategory::ComponentUnreachable, Target::Pair(_))
                | (IncidentCategory::BuggyFailureRecovery, Target::Pair(_))
        );
        if ok {
            Ok(())
        } else {
            Err(SimulationError::TargetMismatch(self.category.name().into()))
        }
    }

    pub fn fallback_component(&self) -> Option<String> {
        match (&self.category, &self.target) {
            (IncidentCategory::BuggyFailureRecovery, Target::Pair(p)) => Some(
                self.fallback
                    .clone()
                    .unwrap_or_else(|| format!("{}{}", p.target, FALLBACK_SUFFIX)),
            ),
            _ => None,
        }
    }
}

/// The answer a perfect localizer should give.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedAnswer {
    pub missing_expected: BTreeSet<OrderedPair>,
    pub additional_expected: BTreeSet<OrderedPair>,
}

impl ExpectedAnswer {
    pub fn as_diff(&self) -> DiffSet {
        DiffSet {
            missing: self.missing_expected.clone(),
            additional: self.additional_expected.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.missing_expected.is_empty() && self.additional_expected.is_empty()
    }
}

/// Which edges a mutation removes and what survives.
struct CutPlan {
    keep: FixedBitSet,
    kept_edges: Vec<Edge>,
    /// `(caller, removed callee)` for every cut edge whose caller survives.
    call_sites: Vec<(usize, usize)>,
}

fn plan_cut(trace: &Trace, is_cut: impl Fn(&Edge) -> bool) -> CutPlan {
    let n = trace.events().len();
    let cut: Vec<bool> = trace.edges().iter().map(&is_cut).collect();
    let mut keep = FixedBitSet::with_capacity(n);
    let mut stack = trace.roots();
    for &r in &stack {
        keep.insert(r);
    }
    // Surviving adjacency, walked from the original roots.
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &c) in trace.edges().iter().zip(&cut) {
        if !c {
            out[e.source].push(e.target);
        }
    }
    while let Some(v) = stack.pop() {
        for &c in &out[v] {
            if !keep.contains(c) {
                keep.insert(c);
                stack.push(c);
            }
        }
    }
    let mut kept_edges = Vec::new();
    let mut call_sites = Vec::new();
    for (e, &c) in trace.edges().iter().zip(&cut) {
        if !keep.contains(e.source) {
            continue;
        }
        if c {
            call_sites.push((e.source, e.target));
        } else {
            kept_edges.push(*e);
        }
    }
    CutPlan {
        keep,
        kept_edges,
        call_sites,
    }
}

fn apply_plan(trace: &Trace, plan: &CutPlan, fallback: Option<&str>) -> Result<Trace, SimulationError> {
    let mut remap = vec![usize::MAX; trace.events().len()];
    let mut events: Vec<Event> = Vec::with_capacity(plan.keep.count_ones(..));
    for v in plan.keep.ones() {
        remap[v] = events.len();
        events.push(trace.event(v).clone());
    }
    let mut edges: Vec<Edge> = plan
        .kept_edges
        .iter()
        .map(|e| Edge::new(remap[e.source], remap[e.target]))
        .collect();
    for &(caller, _) in &plan.call_sites {
        events[remap[caller]]
            .attrs
            .insert("status".into(), FAILURE_STATUS.into());
    }
    if plan.call_sites.is_empty() {
        for r in trace.roots() {
            events[remap[r]].attrs.insert("status".into(), FAILURE_STATUS.into());
        }
    }
    if let Some(fallback) = fallback {
        for (k, &(caller, callee)) in plan.call_sites.iter().enumerate() {
            let id = format!("{}~fallback{}", trace.event(callee).id, k);
            let ts = trace.event(callee).ts_us;
            events.push(Event::new(id, fallback, ts).with_attr("status", FAILURE_STATUS));
            edges.push(Edge::new(remap[caller], events.len() - 1));
        }
    }
    Ok(Trace::from_parts(trace.trace_id(), events, edges, Label::Failure)?)
}

fn not_eligible(trace: &Trace, target: impl ToString) -> SimulationError {
    SimulationError::NotEligible {
        trace_id: trace.trace_id().to_string(),
        target: target.to_string(),
    }
}

/// Cuts every call into component `c` and the subgraph left dangling below.
pub fn mutate_component_down(trace: &Trace, c: &str) -> Result<Trace, SimulationError> {
    if !trace.events().iter().any(|e| e.component == c) {
        return Err(not_eligible(trace, c));
    }
    let plan = plan_cut(trace, |e| trace.event(e.target).component == c);
    apply_plan(trace, &plan, None)
}

fn pair_cut<'a>(trace: &'a Trace, pair: &'a OrderedPair) -> impl Fn(&Edge) -> bool + 'a {
    move |e| trace.event(e.source).component == pair.source && trace.event(e.target).component == pair.target
}

/// Cuts every `pair` call and the subgraph left dangling below.
pub fn mutate_unreachable(trace: &Trace, pair: &OrderedPair) -> Result<Trace, SimulationError> {
    if !trace.view().contains(pair) {
        return Err(not_eligible(trace, pair));
    }
    let plan = plan_cut(trace, pair_cut(trace, pair));
    apply_plan(trace, &plan, None)
}

/// As [`mutate_unreachable`], then each surviving call site calls `fallback`.
pub fn mutate_buggy_recovery(trace: &Trace, pair: &OrderedPair, fallback: &str) -> Result<Trace, SimulationError> {
    if !trace.view().contains(pair) {
        return Err(not_eligible(trace, pair));
    }
    let plan = plan_cut(trace, pair_cut(trace, pair));
    apply_plan(trace, &plan, Some(fallback))
}

fn is_eligible(trace: &Trace, target: &Target) -> bool {
    match target {
        Target::Component(c) => trace.events().iter().any(|e| &e.component == c),
        Target::Pair(p) => trace.view().contains(p),
    }
}

fn mutate(trace: &Trace, spec: &SimulationSpec, fallback: Option<&str>) -> Result<Trace, SimulationError> {
    match (&spec.category, &spec.target) {
        (IncidentCategory::ComponentDown, Target::Component(c)) => mutate_component_down(trace, c),
        (IncidentCategory::ComponentUnreachable, Target::Pair(p)) => mutate_unreachable(trace, p),
        (IncidentCategory::BuggyFailureRecovery, Target::Pair(p)) => {
            mutate_buggy_recovery(trace, p, fallback.expect("fallback derived for recovery"))
        }
        _ => Err(SimulationError::TargetMismatch(spec.category.name().into())),
    }
}

/// A simulated incident ready for localization.
#[derive(Debug, Clone)]
pub struct SimulatedIncident {
    pub spec: SimulationSpec,
    pub before: TraceSet,
    pub incident: TraceSet,
    pub expected: ExpectedAnswer,
    /// Steady-state corpus statistics.
    pub before_stats: CorpusStats,
    /// Corpus statistics with the incident applied.
    pub incident_stats: CorpusStats,
    pub eligible_in_sample: usize,
    pub mutated_in_sample: usize,
    /// False when the change does not show in the samples.
    pub visible: bool,
    pub advisory: Option<String>,
}

/// Injects `spec` into `corpus`. Computes corpus statistics on the way.
pub fn simulate_incident(corpus: &TraceSet, spec: &SimulationSpec) -> Result<SimulatedIncident, SimulationError> {
    let stats = CorpusStats::build(corpus);
    simulate_incident_with_stats(corpus, &stats, spec)
}

/// Injects `spec` into `corpus`, reusing precomputed steady-state statistics.
///
/// Two disjoint uniform samples are drawn from the labeled traces. Every
/// eligible corpus trace is mutated with probability `mutation_fraction`;
/// the incident sample sees the mutated versions and the incident statistics
/// reflect them. The before sample is never touched.
pub fn simulate_incident_with_stats(
    corpus: &TraceSet,
    corpus_stats: &CorpusStats,
    spec: &SimulationSpec,
) -> Result<SimulatedIncident, SimulationError> {
    spec.validate()?;
    let fallback = spec.fallback_component();
    if let Some(f) = &fallback {
        if corpus.iter().any(|t| t.events().iter().any(|e| &e.component == f)) {
            return Err(SimulationError::FallbackCollision(f.clone()));
        }
    }
    let eligible: Vec<usize> = (0..corpus.len())
        .filter(|&i| is_eligible(&corpus.traces()[i], &spec.target))
        .collect();
    if eligible.is_empty() {
        return Err(SimulationError::TargetAbsent(spec.target.to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labeled: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.traces()[i].label() != Label::Unlabeled)
        .collect();
    let wanted = spec.before_size + spec.incident_size;
    if wanted > labeled.len() || spec.before_size == 0 || spec.incident_size == 0 {
        return Err(SimulationError::InsufficientCorpus {
            available: labeled.len(),
            requested: wanted,
        });
    }
    let picked = rand::seq::index::sample(&mut rng, labeled.len(), wanted).into_vec();
    let mut before_idx: Vec<usize> = picked[..spec.before_size].iter().map(|&i| labeled[i]).collect();
    let mut incident_idx: Vec<usize> = picked[spec.before_size..].iter().map(|&i| labeled[i]).collect();
    before_idx.sort_unstable();
    incident_idx.sort_unstable();

    // One draw per eligible corpus trace, in corpus order.
    let mut chosen = vec![false; corpus.len()];
    for &i in &eligible {
        chosen[i] = spec.mutation_fraction >= 1.0 || rng.random::<f64>() < spec.mutation_fraction;
    }

    let mut incident_stats = corpus_stats.clone();
    for &i in &eligible {
        if chosen[i] {
            let original = &corpus.traces()[i];
            let mutated = mutate(original, spec, fallback.as_deref())?;
            incident_stats.replace_trace(original, &mutated);
        }
    }

    let before_traces: Vec<Arc<Trace>> = before_idx.iter().map(|&i| Arc::clone(&corpus.traces()[i])).collect();
    let mut eligible_in_sample = 0;
    let mut mutated_in_sample = 0;
    let mut incident_traces = Vec::with_capacity(incident_idx.len());
    let mut pre_mutation_views = Vec::new();
    for &i in &incident_idx {
        let original = &corpus.traces()[i];
        if is_eligible(original, &spec.target) {
            eligible_in_sample += 1;
            pre_mutation_views.push(Arc::clone(original));
        }
        if chosen[i] {
            mutated_in_sample += 1;
            incident_traces.push(Arc::new(mutate(original, spec, fallback.as_deref())?));
        } else {
            incident_traces.push(Arc::clone(original));
        }
    }
    let source = corpus.source().to_string();
    let before = TraceSet::new(before_traces, format!("{source}#before")).expect("unique ids");
    let incident = TraceSet::new(incident_traces, format!("{source}#incident")).expect("unique ids");

    let expected = expected_answer(spec, &before, fallback.as_deref());
    let steady = union_of_views(before.iter().filter(|t| t.is_success()));
    let visible = mutated_in_sample > 0 && !expected.is_empty() && expected.missing_expected.is_subset(&steady);
    let advisory = (!visible).then(|| "incident invisible at this sample size".to_string());

    Ok(SimulatedIncident {
        spec: spec.clone(),
        before,
        incident,
        expected,
        before_stats: corpus_stats.clone(),
        incident_stats,
        eligible_in_sample,
        mutated_in_sample,
        visible,
        advisory,
    })
}

fn expected_answer(spec: &SimulationSpec, before: &TraceSet, fallback: Option<&str>) -> ExpectedAnswer {
    match &spec.target {
        Target::Component(c) => {
            let steady = union_of_views(before.iter().filter(|t| t.is_success()));
            let in_edges: BTreeSet<OrderedPair> = steady.into_iter().filter(|p| &p.target == c).collect();
            let diff = DiffSet {
                missing: in_edges,
                additional: BTreeSet::new(),
            };
            let pruned = prune_by_reachability(&diff, before, &TraceSet::default());
            ExpectedAnswer {
                missing_expected: pruned.diff.missing,
                additional_expected: BTreeSet::new(),
            }
        }
        Target::Pair(p) => ExpectedAnswer {
            missing_expected: [p.clone()].into(),
            additional_expected: fallback
                .map(|f| [OrderedPair::new(&p.source, f)].into())
                .unwrap_or_default(),
        },
    }
}
