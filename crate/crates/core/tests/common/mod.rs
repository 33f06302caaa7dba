//! Random trace generators and brute-force oracles shared by the
//! integration tests. The oracles deliberately avoid the library's own
//! helpers: views are rebuilt from edges, reachability is a fresh DFS per
//! query, and pruning follows the rule one statement at a time.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use act_core::{Edge, Event, Label, OrderedPair, Trace, TraceSet};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const COMPONENTS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// A DAG as `(component index per event, parent edges per event)`.
/// Edges only point from lower to higher indices.
pub type RawDag = (Vec<usize>, Vec<(usize, usize)>);

pub fn dag_strategy(max_events: usize) -> impl Strategy<Value = RawDag> {
    (1..=max_events).prop_flat_map(|n| {
        let comps = prop::collection::vec(0..COMPONENTS.len(), n);
        let parents = prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 0..3), n);
        (comps, parents).prop_map(move |(comps, parents)| {
            let mut edges = BTreeSet::new();
            for (child, ps) in parents.iter().enumerate().skip(1) {
                for p in ps {
                    edges.insert((p.index(child), child));
                }
            }
            (comps, edges.into_iter().collect())
        })
    })
}

pub fn label_strategy() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Success), Just(Label::Failure), Just(Label::Unlabeled)]
}

pub fn build_trace(id: &str, dag: &RawDag, label: Label) -> Trace {
    let (comps, edges) = dag;
    let events = comps
        .iter()
        .enumerate()
        .map(|(i, &c)| Event::new(format!("v{i}"), COMPONENTS[c], i as i64))
        .collect();
    let edges = edges.iter().map(|&(s, t)| Edge::new(s, t)).collect();
    Trace::from_parts(id, events, edges, label).expect("strategy builds DAGs")
}

pub fn set_strategy(max_traces: usize, max_events: usize) -> impl Strategy<Value = TraceSet> {
    prop::collection::vec((dag_strategy(max_events), label_strategy()), 1..=max_traces).prop_map(|items| {
        let traces = items
            .iter()
            .enumerate()
            .map(|(i, (dag, label))| build_trace(&format!("t{i:03}"), dag, *label))
            .collect();
        TraceSet::from_traces(traces, "proptest").unwrap()
    })
}

/// A seeded random DAG with up to `max_events` events over `components`.
pub fn random_dag(rng: &mut ChaCha8Rng, max_events: usize, components: usize) -> RawDag {
    let n = rng.random_range(1..=max_events);
    let comps = (0..n).map(|_| rng.random_range(0..components)).collect();
    let mut edges = BTreeSet::new();
    for child in 1..n {
        // Mostly trees, sometimes a second parent.
        edges.insert((rng.random_range(0..child), child));
        if rng.random::<f64>() < 0.15 {
            edges.insert((rng.random_range(0..child), child));
        }
    }
    (comps, edges.into_iter().collect())
}

pub fn random_set(rng: &mut ChaCha8Rng, prefix: &str, traces: usize, max_events: usize, failure_rate: f64) -> TraceSet {
    let traces = (0..traces)
        .map(|i| {
            let dag = random_dag(rng, max_events, COMPONENTS.len());
            let label = if rng.random::<f64>() < failure_rate {
                Label::Failure
            } else {
                Label::Success
            };
            build_trace(&format!("{prefix}{i:03}"), &dag, label)
        })
        .collect();
    TraceSet::from_traces(traces, prefix).unwrap()
}

pub mod oracle {
    use super::*;

    pub fn view(trace: &Trace) -> BTreeSet<OrderedPair> {
        trace
            .edges()
            .iter()
            .map(|e| OrderedPair::new(&trace.events()[e.source].component, &trace.events()[e.target].component))
            .collect()
    }

    /// Vertex reachability by DFS over the raw edge list.
    pub fn vertex_reaches(trace: &Trace, from: usize, to: usize) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if !seen.insert(v) {
                continue;
            }
            for e in trace.edges() {
                if e.source == v {
                    stack.push(e.target);
                }
            }
        }
        false
    }

    pub fn edge_reaches(trace: &Trace, e1: Edge, e2: Edge) -> bool {
        e1 != e2 && vertex_reaches(trace, e1.target, e2.source)
    }

    pub fn diff(before: &TraceSet, incident: &TraceSet) -> (BTreeSet<OrderedPair>, BTreeSet<OrderedPair>) {
        let union = |traces: Vec<&Trace>| -> BTreeSet<OrderedPair> { traces.into_iter().flat_map(view).collect() };
        let s = union(before.iter().filter(|t| t.label() == Label::Success).collect());
        let i = union(incident.iter().collect());
        let is = union(incident.iter().filter(|t| t.label() == Label::Success).collect());
        let missing = s.difference(&i).cloned().collect();
        let additional = i
            .iter()
            .filter(|p| !s.contains(*p) && !is.contains(*p))
            .cloned()
            .collect();
        (missing, additional)
    }

    /// Number of traces whose view contains each pair.
    pub fn frequencies(set: &TraceSet) -> BTreeMap<OrderedPair, usize> {
        let mut out = BTreeMap::new();
        for t in set.iter() {
            for p in view(t) {
                *out.entry(p).or_insert(0) += 1;
            }
        }
        out
    }

    /// Event ids still reachable from the original roots when every edge
    /// satisfying `cut` is removed. Iterates to a fixpoint.
    pub fn survivors(trace: &Trace, cut: impl Fn(&Edge) -> bool) -> BTreeSet<String> {
        let has_parent: HashSet<usize> = trace.edges().iter().map(|e| e.target).collect();
        let mut keep: HashSet<usize> = (0..trace.events().len()).filter(|v| !has_parent.contains(v)).collect();
        loop {
            let before = keep.len();
            for e in trace.edges() {
                if !cut(e) && keep.contains(&e.source) {
                    keep.insert(e.target);
                }
            }
            if keep.len() == before {
                break;
            }
        }
        keep.into_iter().map(|v| trace.events()[v].id.clone()).collect()
    }

    fn edges_of(trace: &Trace, pair: &OrderedPair) -> Vec<Edge> {
        trace
            .edges()
            .iter()
            .copied()
            .filter(|e| {
                trace.events()[e.source].component == pair.source && trace.events()[e.target].component == pair.target
            })
            .collect()
    }

    /// Pruning of one side: traces by id, effects then causes in
    /// lexicographic order, causes from the unpruned input, stop at one pair.
    pub fn prune_side(candidates: &BTreeSet<OrderedPair>, traces: &[&Trace]) -> BTreeSet<OrderedPair> {
        let mut remaining = candidates.clone();
        if remaining.len() <= 1 {
            return remaining;
        }
        let mut traces = traces.to_vec();
        traces.sort_by(|a, b| a.trace_id().cmp(b.trace_id()));
        for t in traces {
            for effect in candidates {
                if !remaining.contains(effect) {
                    continue;
                }
                let effect_edges = edges_of(t, effect);
                if effect_edges.is_empty() {
                    continue;
                }
                let caused = candidates.iter().filter(|c| *c != effect).any(|cause| {
                    edges_of(t, cause)
                        .iter()
                        .any(|&e1| effect_edges.iter().any(|&e2| edge_reaches(t, e1, e2)))
                });
                if caused {
                    remaining.remove(effect);
                    if remaining.len() == 1 {
                        return remaining;
                    }
                }
            }
        }
        remaining
    }

    pub fn prune(
        missing: &BTreeSet<OrderedPair>,
        additional: &BTreeSet<OrderedPair>,
        before: &TraceSet,
        incident: &TraceSet,
    ) -> (BTreeSet<OrderedPair>, BTreeSet<OrderedPair>) {
        let ok: Vec<&Trace> = before.iter().filter(|t| t.label() == Label::Success).collect();
        let all: Vec<&Trace> = incident.iter().collect();
        (prune_side(missing, &ok), prune_side(additional, &all))
    }
}

/// A random (before, incident) instance of at most 200 traces of at most 50
/// events. Incident traces have up to three pairs cut and some failures call
/// a component never seen before, so both sides of the difference are
/// usually non-empty and chains for pruning exist.
pub fn oracle_instance(seed: u64) -> (TraceSet, TraceSet) {
    use act_core::simulator::mutate_unreachable;
    use rand::SeedableRng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = rng.random_range(4..=10);
    let gen = |rng: &mut ChaCha8Rng, prefix: &str, n: usize| -> Vec<Trace> {
        (0..n)
            .map(|i| {
                let (c, e) = random_dag(rng, 50, comps);
                let label = if rng.random::<f64>() < 0.1 {
                    Label::Failure
                } else {
                    Label::Success
                };
                let events = c
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| Event::new(format!("v{k}"), format!("C{x}"), k as i64))
                    .collect();
                let edges = e.iter().map(|&(s, t)| Edge::new(s, t)).collect();
                Trace::from_parts(format!("{prefix}{i:03}"), events, edges, label).unwrap()
            })
            .collect()
    };
    let nb = rng.random_range(1..=100);
    let ni = rng.random_range(1..=100);
    let before = gen(&mut rng, "b", nb);
    let mut incident = gen(&mut rng, "i", ni);

    let all_pairs: Vec<OrderedPair> = before
        .iter()
        .flat_map(oracle::view)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cuts: Vec<OrderedPair> = (0..rng.random_range(0..=3).min(all_pairs.len()))
        .map(|_| all_pairs[rng.random_range(0..all_pairs.len())].clone())
        .collect();
    for t in incident.iter_mut() {
        for p in &cuts {
            if t.view().contains(p) {
                *t = mutate_unreachable(t, p).unwrap();
            }
        }
        if t.label() == Label::Failure && rng.random::<f64>() < 0.3 {
            let (id, mut events, mut edges, label) = t.clone().into_parts();
            let from = rng.random_range(0..events.len());
            events.push(Event::new("new", "Novel", 0));
            edges.push(Edge::new(from, events.len() - 1));
            *t = Trace::from_parts(id, events, edges, label).unwrap();
        }
    }
    (
        TraceSet::from_traces(before, "oracle-before").unwrap(),
        TraceSet::from_traces(incident, "oracle-incident").unwrap(),
    )
}

/// Compares the difference, view counts, cut survivors and pruning with the
/// brute-force oracles on one instance.
pub fn check_oracle_equivalence(seed: u64) -> Result<(), String> {
    use act_core::pipeline::{prune_by_reachability, symmetric_difference};
    use act_core::simulator::mutate_unreachable;
    use act_core::CorpusStats;

    let (before, incident) = oracle_instance(seed);
    if !before.iter().any(|t| t.is_success()) {
        return Ok(());
    }
    let diff = symmetric_difference(&before, &incident).map_err(|e| e.to_string())?;
    let (m, a) = oracle::diff(&before, &incident);
    if diff.missing != m || diff.additional != a {
        return Err(format!("seed {seed}: difference mismatch"));
    }
    for set in [&before, &incident] {
        if CorpusStats::build(set).frequencies() != &oracle::frequencies(set) {
            return Err(format!("seed {seed}: view counts mismatch"));
        }
    }
    for t in incident.iter().take(20) {
        if let Some(&e) = t.edges().first() {
            let pair = t.edge_pair(e);
            let got: BTreeSet<String> = mutate_unreachable(t, &pair)
                .map_err(|e| e.to_string())?
                .events()
                .iter()
                .map(|e| e.id.clone())
                .collect();
            if got != oracle::survivors(t, |x| t.edge_pair(*x) == pair) {
                return Err(format!("seed {seed}: survivors mismatch in {}", t.trace_id()));
            }
        }
    }
    let pruned = prune_by_reachability(&diff, &before, &incident).diff;
    let (pm, pa) = oracle::prune(&diff.missing, &diff.additional, &before, &incident);
    if pruned.missing != pm || pruned.additional != pa {
        return Err(format!(
            "seed {seed}: pruning mismatch: got {:?} expected {:?}",
            pruned,
            (pm, pa)
        ));
    }
    Ok(())
}
