//! Nearest-neighbour baselines.
//!
//! Each trace is turned into a count vector (events per component, or edges
//! per ordered pair). The successful steady-state trace closest to some failed
//! incident trace in squared L2 distance is paired with it, and the
//! difference between the two views is the answer, pruned by reachability
//! within those two traces only.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::BaselineError;
use crate::ingest::TraceSet;
use crate::model::{OrderedPair, Trace};
use crate::pipeline::{
    prune_by_reachability, DiffSet, LocalizationResult, PruneCounters, RunConfig, StageSnapshots, StageTimings,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    NodeCount,
    EdgeCount,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 2] = [BaselineKind::NodeCount, BaselineKind::EdgeCount];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::NodeCount => "node_count",
            BaselineKind::EdgeCount => "edge_count",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node" | "node_count" | "node-count" => Ok(BaselineKind::NodeCount),
            "edge" | "edge_count" | "edge-count" => Ok(BaselineKind::EdgeCount),
            other => Err(format!("unknown baseline kind {other:?}")),
        }
    }
}

/// Vector coordinates: component names or ordered pairs, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Basis {
    Components(Vec<String>),
    Pairs(Vec<OrderedPair>),
}

impl Basis {
    /// Union of keys over both sets.
    pub fn build<'a>(kind: BaselineKind, traces: impl Iterator<Item = &'a Trace>) -> Basis {
        match kind {
            BaselineKind::NodeCount => {
                let keys: BTreeSet<&str> = traces
                    .flat_map(|t| t.events().iter().map(|e| e.component.as_str()))
                    .collect();
                Basis::Components(keys.into_iter().map(str::to_string).collect())
            }
            BaselineKind::EdgeCount => {
                let keys: BTreeSet<OrderedPair> = traces.flat_map(|t| t.view().iter().cloned()).collect();
                Basis::Pairs(keys.into_iter().collect())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Components(c) => c.len(),
            Basis::Pairs(p) => p.len(),
        }
    }

    /// Count vector of `trace`. Fails if the trace has a key outside the basis.
    pub fn vector(&self, trace: &Trace) -> Result<Vec<u64>, BaselineError> {
        let mut v = vec![0u64; self.dim()];
        match self {
            Basis::Components(keys) => {
                for e in trace.events() {
                    let i = keys
                        .binary_search(&e.component)
                        .map_err(|_| BaselineError::KeyNotInBasis(e.component.clone()))?;
                    v[i] += 1;
                }
            }
            Basis::Pairs(keys) => {
                for &edge in trace.edges() {
                    let pair = trace.edge_pair(edge);
                    let i = keys
                        .binary_search(&pair)
                        .map_err(|_| BaselineError::KeyNotInBasis(pair.to_string()))?;
                    v[i] += 1;
                }
            }
        }
        Ok(v)
    }
}

/// Squared Euclidean distance; exact in integers.
pub fn squared_l2(a: &[u64], b: &[u64]) -> u64 {
    assert_eq!(a.len(), b.len(), "vectors from different bases");
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y).pow(2)).sum()
}

struct Sparse {
    entries: Vec<(u32, u64)>,
    norm: u64,
}

impl From<Vec<u64>> for Sparse {
    fn from(dense: Vec<u64>) -> Self {
        let entries: Vec<(u32, u64)> = dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k as u32, c))
            .collect();
        let norm = entries.iter().map(|&(_, c)| c * c).sum();
        Sparse { entries, norm }
    }
}

/// The closest (successful before, failed incident) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosestPair {
    pub success_id: String,
    pub failure_id: String,
    /// Squared L2 distance between the two count vectors.
    pub squared_distance: u64,
    /// Distance computations performed; at most `|S| * |U|`.
    pub comparisons: u64,
}

/// Exhaustive search, ties broken by `(success_id, failure_id)`.
pub fn closest_pair(kind: BaselineKind, before: &TraceSet, incident: &TraceSet) -> Result<ClosestPair, BaselineError> {
    let successes: Vec<&Trace> = before.iter().filter(|t| t.is_success()).collect();
    let failures: Vec<&Trace> = incident
        .iter()
        .filter(|t| t.label() == crate::model::Label::Failure)
        .collect();
    if successes.is_empty() {
        return Err(BaselineError::NoBaseline);
    }
    if failures.is_empty() {
        return Err(BaselineError::NoFailures);
    }
    let basis = Basis::build(kind, successes.iter().chain(&failures).copied());
    let sv: Vec<Sparse> = successes
        .iter()
        .map(|t| basis.vector(t).map(Sparse::from))
        .collect::<Result<_, _>>()?;
    let fv: Vec<Vec<u64>> = failures.iter().map(|t| basis.vector(t)).collect::<Result<_, _>>()?;
    let f_norms: Vec<u64> = fv.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();

    // Every (success, failure) pair is scanned; |a - b|^2 = |a|^2 + |b|^2 - 2 a.b
    // with the dot product taken over the sparse side.
    let best = (0..failures.len())
        .into_par_iter()
        .map(|j| {
            let mut best: Option<(u64, &str, &str)> = None;
            for (i, s) in sv.iter().enumerate() {
                let dot: u64 = s.entries.iter().map(|&(k, c)| c * fv[j][k as usize]).sum();
                let cand = (
                    s.norm + f_norms[j] - 2 * dot,
                    successes[i].trace_id(),
                    failures[j].trace_id(),
                );
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
            best.expect("non-empty successes")
        })
        .min()
        .expect("non-empty failures");
    Ok(ClosestPair {
        success_id: best.1.to_string(),
        failure_id: best.2.to_string(),
        squared_distance: best.0,
        comparisons: (successes.len() * failures.len()) as u64,
    })
}

/// Baseline answer plus the matched pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub matched: ClosestPair,
    pub result: LocalizationResult,
}

/// Localizes by diffing the closest pair of traces.
pub fn baseline_localize(
    kind: BaselineKind,
    before: &TraceSet,
    incident: &TraceSet,
) -> Result<BaselineResult, BaselineError> {
    let start = Instant::now();
    let matched = closest_pair(kind, before, incident)?;
    let s = before.get(&matched.success_id).expect("matched id");
    let u = incident.get(&matched.failure_id).expect("matched id");
    let diff = DiffSet {
        missing: s.view().iter().filter(|p| !u.view().contains(p)).cloned().collect(),
        additional: u.view().iter().filter(|p| !s.view().contains(p)).cloned().collect(),
    };
    let diff_us = start.elapsed().as_micros() as u64;

    let start = Instant::now();
    let only_s = TraceSet::new(vec![s.clone()], "baseline").expect("single trace");
    let only_u = TraceSet::new(vec![u.clone()], "baseline").expect("single trace");
    let pruned = prune_by_reachability(&diff, &only_s, &only_u);
    let reachability_us = start.elapsed().as_micros() as u64;

    let result = LocalizationResult {
        config: RunConfig {
            sample_size: before.len(),
            guarantee: 0.0,
            seed: None,
        },
        stages: StageSnapshots {
            after_diff: diff,
            after_threshold: None,
            after_reachability: Some(pruned.diff),
        },
        ledger: pruned.discarded,
        timings: StageTimings {
            diff_us,
            threshold_us: 0,
            reachability_us,
        },
        counters: PruneCounters { ..pruned.counters },
        advisory: None,
    };
    Ok(BaselineResult { kind, matched, result })
}

/// Per-key counts, keyed by display name; handy for reports.
pub fn count_map(kind: BaselineKind, trace: &Trace) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    match kind {
        BaselineKind::NodeCount => {
            for e in trace.events() {
                *out.entry(e.component.clone()).or_default() += 1;
            }
        }
        BaselineKind::EdgeCount => {
            for &edge in trace.edges() {
                *out.entry(trace.edge_pair(edge).to_string()).or_default() += 1;
            }
        }
    }
    out
}
