//! Trace corpora: parsing, labeling and sampling.

mod jaeger;
mod jsonl;
mod label;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IngestError, ModelError};
use crate::model::{Label, Trace};

pub use jaeger::parse_jaeger;
pub use jsonl::{parse_jsonl, to_record, write_jsonl, EventRecord, TraceRecord};
pub use label::{label_trace, status_is_failure, LabelCriterion, DEFAULT_STATUS_KEYS};

/// Inclusive time range in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start_us: i64,
    pub end_us: i64,
}

impl Window {
    pub fn contains(&self, ts: i64) -> bool {
        self.start_us <= ts && ts <= self.end_us
    }

    pub fn duration_us(&self) -> i64 {
        self.end_us - self.start_us
    }
}

/// Supported on-disk formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// One canonical record per line.
    Jsonl,
    /// Jaeger query-API JSON (`{"data": [...]}`), read-only.
    Jaeger,
}

/// A set of traces with unique ids, shared cheaply between samples.
#[derive(Debug, Clone, Default)]
pub struct TraceSet {
    traces: Vec<Arc<Trace>>,
    window: Option<Window>,
    source: String,
    index: HashMap<String, usize>,
}

impl PartialEq for TraceSet {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window
            && self.traces.len() == other.traces.len()
            && self.traces.iter().zip(&other.traces).all(|(a, b)| a == b)
    }
}

impl TraceSet {
    /// Window spans the earliest and latest trace start times.
    pub fn new(traces: Vec<Arc<Trace>>, source: impl Into<String>) -> Result<Self, IngestError> {
        let window = span(&traces);
        Self::build(traces, window, source.into())
    }

    pub fn from_traces(traces: Vec<Trace>, source: impl Into<String>) -> Result<Self, IngestError> {
        Self::new(traces.into_iter().map(Arc::new).collect(), source)
    }

    /// Uses an explicit window; every trace must start inside it.
    pub fn with_window(
        traces: Vec<Arc<Trace>>,
        window: Window,
        source: impl Into<String>,
    ) -> Result<Self, IngestError> {
        for t in &traces {
            let start_us = t.start_us();
            if !window.contains(start_us) {
                return Err(IngestError::OutsideWindow {
                    trace_id: t.trace_id().to_string(),
                    start_us,
                    window_start: window.start_us,
                    window_end: window.end_us,
                });
            }
        }
        Self::build(traces, Some(window), source.into())
    }

    fn build(traces: Vec<Arc<Trace>>, window: Option<Window>, source: String) -> Result<Self, IngestError> {
        let mut index = HashMap::with_capacity(traces.len());
        for (i, t) in traces.iter().enumerate() {
            if index.insert(t.trace_id().to_string(), i).is_some() {
                return Err(IngestError::DuplicateTrace(t.trace_id().to_string()));
            }
        }
        Ok(TraceSet {
            traces,
            window,
            source,
            index,
        })
    }

    pub fn traces(&self) -> &[Arc<Trace>] {
        &self.traces
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trace> {
        self.traces.iter().map(|t| t.as_ref())
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn window(&self) -> Option<Window> {
        self.window
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn get(&self, trace_id: &str) -> Option<&Arc<Trace>> {
        self.index.get(trace_id).map(|&i| &self.traces[i])
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.iter().filter(|t| t.label() == label).count()
    }

    /// Re-evaluates every label with `criterion`.
    pub fn relabeled(&self, criterion: &LabelCriterion) -> TraceSet {
        let traces = self
            .traces
            .iter()
            .map(|t| {
                let label = label_trace(t, criterion);
                if label == t.label() {
                    Arc::clone(t)
                } else {
                    Arc::new(t.with_label(label))
                }
            })
            .collect();
        TraceSet {
            traces,
            window: self.window,
            source: self.source.clone(),
            index: self.index.clone(),
        }
    }

    /// Traces whose start time falls in `window`.
    pub fn in_window(&self, window: Window) -> TraceSet {
        let traces = self
            .traces
            .iter()
            .filter(|t| window.contains(t.start_us()))
            .cloned()
            .collect();
        Self::build(traces, Some(window), self.source.clone()).expect("subset of unique ids")
    }
}

fn span(traces: &[Arc<Trace>]) -> Option<Window> {
    let starts = traces.iter().map(|t| t.start_us());
    let start_us = starts.clone().min()?;
    let end_us = starts.max()?;
    Some(Window { start_us, end_us })
}

/// A record that could not be turned into a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based line number (record number for Jaeger input).
    pub line: usize,
    pub message: String,
}

/// Parsed traces plus everything that was skipped along the way.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub set: TraceSet,
    pub errors: Vec<RecordError>,
    pub cyclic_rejected: usize,
    pub duplicates_rejected: usize,
}

impl ParseOutcome {
    pub fn skipped(&self) -> usize {
        self.errors.len()
    }
}

pub(crate) struct OutcomeBuilder {
    traces: Vec<Arc<Trace>>,
    seen: std::collections::HashSet<String>,
    errors: Vec<RecordError>,
    cyclic: usize,
    duplicates: usize,
}

impl OutcomeBuilder {
    pub(crate) fn new() -> Self {
        OutcomeBuilder {
            traces: Vec::new(),
            seen: Default::default(),
            errors: Vec::new(),
            cyclic: 0,
            duplicates: 0,
        }
    }

    pub(crate) fn push(&mut self, line: usize, trace: Result<Trace, ModelError>) {
        match trace {
            Ok(t) => {
                if self.seen.insert(t.trace_id().to_string()) {
                    self.traces.push(Arc::new(t));
                } else {
                    self.duplicates += 1;
                    self.error(line, format!("duplicate trace id {}", t.trace_id()));
                }
            }
            Err(e) => {
                if matches!(e, ModelError::Cycle { .. }) {
                    self.cyclic += 1;
                }
                self.error(line, e.to_string());
            }
        }
    }

    pub(crate) fn error(&mut self, line: usize, message: String) {
        self.errors.push(RecordError { line, message });
    }

    pub(crate) fn finish(self, source: &str) -> ParseOutcome {
        ParseOutcome {
            set: TraceSet::new(self.traces, source).expect("ids deduplicated"),
            errors: self.errors,
            cyclic_rejected: self.cyclic,
            duplicates_rejected: self.duplicates,
        }
    }
}

/// Parses a corpus. Traces come back unlabeled; see [`TraceSet::relabeled`].
pub fn parse_traces<R: BufRead>(input: R, format: Format, source: &str) -> Result<ParseOutcome, IngestError> {
    match format {
        Format::Jsonl => parse_jsonl(input, source),
        Format::Jaeger => parse_jaeger(input, source),
    }
}

/// Serializes a set in the canonical line format.
pub fn write_traces<W: Write>(set: &TraceSet, out: W) -> Result<(), IngestError> {
    write_jsonl(set.iter(), out)
}

/// Draws `min(n, labeled)` labeled traces uniformly without replacement.
///
/// The result keeps corpus order and is a pure function of `(set, n, seed)`.
pub fn sample(set: &TraceSet, n: usize, seed: u64) -> Result<TraceSet, IngestError> {
    if n == 0 {
        return Err(IngestError::ZeroSampleSize);
    }
    let labeled: Vec<&Arc<Trace>> = set.traces.iter().filter(|t| t.label() != Label::Unlabeled).collect();
    if labeled.is_empty() {
        return Err(IngestError::NoLabeledTraces);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amount = n.min(labeled.len());
    let mut picked = rand::seq::index::sample(&mut rng, labeled.len(), amount).into_vec();
    picked.sort_unstable();
    let traces = picked.into_iter().map(|i| Arc::clone(labeled[i])).collect();
    let sampled = match set.window {
        Some(w) => TraceSet::with_window(traces, w, set.source.clone()),
        None => TraceSet::new(traces, set.source.clone()),
    };
    Ok(sampled.expect("sample of a valid set"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;

    fn labeled(id: &str, label: Label) -> Trace {
        Trace::from_parts(id, vec![Event::new("a", "A", 7)], vec![], label).unwrap()
    }

    fn corpus(n: usize) -> TraceSet {
        TraceSet::from_traces(
            (0..n).map(|i| labeled(&format!("t{i:05}"), Label::Success)).collect(),
            "test",
        )
        .unwrap()
    }

    #[test]
    fn sample_clamps_to_available() {
        let s = sample(&corpus(3), 5, 1).unwrap();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn sample_is_deterministic_and_distinct() {
        let set = corpus(20_000);
        let a = sample(&set, 2000, 42).unwrap();
        let b = sample(&set, 2000, 42).unwrap();
        assert_eq!(a, b);
        let ids: std::collections::HashSet<_> = a.iter().map(|t| t.trace_id()).collect();
        assert_eq!(ids.len(), 2000);
        assert_ne!(a, sample(&set, 2000, 43).unwrap());
    }

    #[test]
    fn sample_skips_unlabeled() {
        let set = TraceSet::from_traces(
            vec![
                labeled("u", Label::Unlabeled),
                labeled("s", Label::Success),
                labeled("f", Label::Failure),
            ],
            "t",
        )
        .unwrap();
        let s = sample(&set, 10, 0).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.get("u").is_none());

        let only_unlabeled = TraceSet::from_traces(vec![labeled("u", Label::Unlabeled)], "t").unwrap();
        assert!(matches!(
            sample(&only_unlabeled, 1, 0),
            Err(IngestError::NoLabeledTraces)
        ));
        assert!(matches!(sample(&set, 0, 0), Err(IngestError::ZeroSampleSize)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = TraceSet::from_traces(vec![labeled("x", Label::Success), labeled("x", Label::Failure)], "t");
        assert!(matches!(err, Err(IngestError::DuplicateTrace(_))));
    }

    #[test]
    fn explicit_window_is_enforced() {
        let traces = vec![Arc::new(labeled("x", Label::Success))];
        let w = Window { start_us: 0, end_us: 5 };
        assert!(matches!(
            TraceSet::with_window(traces, w, "t"),
            Err(IngestError::OutsideWindow { .. })
        ));
    }
}
