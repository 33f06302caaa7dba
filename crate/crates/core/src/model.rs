//! Trace DAGs, ordered pairs, and the view transform.
//!
//! A [`Trace`] records the events of one end-to-end request (vertices) and the
//! causal interactions between them (directed edges). Traces are not directly
//! comparable because most event attributes differ from request to request, so
//! comparisons happen on [`View`]s: the set of `(source component, target
//! component)` [`OrderedPair`]s obtained by projecting every edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::reach::Reachability;

/// Free-form event attributes: status codes, instance names, tags.
pub type Attributes = BTreeMap<String, String>;

/// Default attribute consulted for instance-level views.
pub const INSTANCE_KEY: &str = "instance";

/// One vertex of a trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub component: String,
    /// Microseconds since the Unix epoch.
    pub ts_us: i64,
    #[serde(default)]
    pub attrs: Attributes,
}

impl Event {
    pub fn new(id: impl Into<String>, component: impl Into<String>, ts_us: i64) -> Self {
        Event {
            id: id.into(),
            component: component.into(),
            ts_us,
            attrs: Attributes::new(),
        }
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.insert(key.into(), value.into());
        self
    }
}

/// Outcome of a request according to an external success criterion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Success,
    Failure,
    #[default]
    Unlabeled,
}

/// A directed edge between two events, addressed by their index in
/// [`Trace::events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
}

impl Edge {
    pub fn new(source: usize, target: usize) -> Self {
        Edge { source, target }
    }
}

/// An edge addressed by event ids, for reports that outlive the trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeIds {
    pub source: String,
    pub target: String,
}

/// One element of a view: a call from one component to another.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderedPair {
    pub source: String,
    pub target: String,
}

impl OrderedPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        OrderedPair {
            source: source.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for OrderedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.source, self.target)
    }
}

/// The lossy projection of a trace onto ordered pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct View {
    pairs: BTreeSet<OrderedPair>,
}

impl View {
    pub fn pairs(&self) -> &BTreeSet<OrderedPair> {
        &self.pairs
    }

    pub fn contains(&self, pair: &OrderedPair) -> bool {
        self.pairs.contains(pair)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &OrderedPair> {
        self.pairs.iter()
    }
}

impl FromIterator<OrderedPair> for View {
    fn from_iter<I: IntoIterator<Item = OrderedPair>>(iter: I) -> Self {
        View {
            pairs: iter.into_iter().collect(),
        }
    }
}

/// What a view retains about each event.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Granularity {
    #[default]
    Component,
    /// Use the value of `key` when an event carries it, else the component.
    Instance { key: String },
}

impl Granularity {
    pub fn instance() -> Self {
        Granularity::Instance {
            key: INSTANCE_KEY.to_string(),
        }
    }
}

/// An immutable, validated trace DAG.
#[derive(Debug, Clone)]
pub struct Trace {
    trace_id: String,
    events: Vec<Event>,
    edges: Vec<Edge>,
    label: Label,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
    view: View,
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.trace_id == other.trace_id
            && self.label == other.label
            && self.events == other.events
            && self.edges == other.edges
    }
}

impl Eq for Trace {}

impl Trace {
    /// Builds a trace from events and edges given as `(source id, target id)`.
    pub fn new<I, S>(trace_id: impl Into<String>, events: Vec<Event>, edges: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let trace_id = trace_id.into();
        let mut index = HashMap::with_capacity(events.len());
        for (i, event) in events.iter().enumerate() {
            if index.insert(event.id.as_str(), i).is_some() {
                return Err(ModelError::DuplicateEvent {
                    trace_id,
                    event_id: event.id.clone(),
                });
            }
        }
        let mut resolved = Vec::new();
        for (src, tgt) in edges {
            let lookup = |id: &str| {
                index.get(id).copied().ok_or_else(|| ModelError::UnknownEvent {
                    trace_id: trace_id.clone(),
                    event_id: id.to_string(),
                })
            };
            resolved.push(Edge::new(lookup(src.as_ref())?, lookup(tgt.as_ref())?));
        }
        Self::from_parts(trace_id, events, resolved, Label::Unlabeled)
    }

    /// Builds a trace from index-addressed edges. Duplicate edges collapse.
    pub fn from_parts(
        trace_id: impl Into<String>,
        events: Vec<Event>,
        mut edges: Vec<Edge>,
        label: Label,
    ) -> Result<Self, ModelError> {
        let trace_id = trace_id.into();
        if events.is_empty() {
            return Err(ModelError::EmptyTrace { trace_id });
        }
        let mut seen = std::collections::HashSet::with_capacity(events.len());
        for event in &events {
            if event.component.is_empty() {
                return Err(ModelError::EmptyComponent {
                    trace_id,
                    event_id: event.id.clone(),
                });
            }
            if !seen.insert(event.id.as_str()) {
                return Err(ModelError::DuplicateEvent {
                    trace_id,
                    event_id: event.id.clone(),
                });
            }
        }
        if let Some(bad) = edges
            .iter()
            .find(|e| e.source >= events.len() || e.target >= events.len())
        {
            return Err(ModelError::UnknownEvent {
                trace_id,
                event_id: format!("#{}", bad.source.max(bad.target)),
            });
        }
        edges.sort_unstable();
        edges.dedup();

        let mut children = vec![Vec::new(); events.len()];
        let mut indegree = vec![0usize; events.len()];
        for e in &edges {
            children[e.source].push(e.target);
            indegree[e.target] += 1;
        }
        // Kahn's algorithm; leftover vertices sit on a cycle.
        let mut topo = Vec::with_capacity(events.len());
        let mut ready: Vec<usize> = (0..events.len()).filter(|&v| indegree[v] == 0).collect();
        ready.reverse();
        while let Some(v) = ready.pop() {
            topo.push(v);
            for &c in children[v].iter().rev() {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if topo.len() != events.len() {
            return Err(ModelError::Cycle { trace_id });
        }

        let view = edges
            .iter()
            .map(|e| OrderedPair::new(&events[e.source].component, &events[e.target].component))
            .collect();
        Ok(Trace {
            trace_id,
            events,
            edges,
            label,
            children,
            topo,
            view,
        })
    }

    pub fn trace_id(&self) -> &str {
        &self.trace_id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, idx: usize) -> &Event {
        &self.events[idx]
    }

    /// Sorted, duplicate-free edge list.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn is_success(&self) -> bool {
        self.label == Label::Success
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    /// Events in a topological order (sources before targets).
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Events without incoming edges.
    pub fn roots(&self) -> Vec<usize> {
        let mut has_parent = vec![false; self.events.len()];
        for e in &self.edges {
            has_parent[e.target] = true;
        }
        (0..self.events.len()).filter(|&v| !has_parent[v]).collect()
    }

    pub fn has_edge(&self, edge: Edge) -> bool {
        self.edges.binary_search(&edge).is_ok()
    }

    /// Earliest event timestamp; stands in for the trace's time.
    pub fn start_us(&self) -> i64 {
        self.events.iter().map(|e| e.ts_us).min().unwrap_or_default()
    }

    /// The component-level view, computed once at construction.
    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn edge_ids(&self, edge: Edge) -> EdgeIds {
        EdgeIds {
            source: self.events[edge.source].id.clone(),
            target: self.events[edge.target].id.clone(),
        }
    }

    pub fn edge_pair(&self, edge: Edge) -> OrderedPair {
        OrderedPair::new(&self.events[edge.source].component, &self.events[edge.target].component)
    }

    pub fn with_label(&self, label: Label) -> Trace {
        Trace { label, ..self.clone() }
    }

    pub fn set_label(&mut self, label: Label) {
        self.label = label;
    }

    /// Consumes the trace, returning its events and edges.
    pub fn into_parts(self) -> (String, Vec<Event>, Vec<Edge>, Label) {
        (self.trace_id, self.events, self.edges, self.label)
    }
}

/// Projects a trace onto ordered pairs at the requested granularity.
pub fn view_of(trace: &Trace, granularity: &Granularity) -> View {
    match granularity {
        Granularity::Component => trace.view().clone(),
        Granularity::Instance { key } => {
            let name = |idx: usize| {
                let event = trace.event(idx);
                event.attrs.get(key).unwrap_or(&event.component).clone()
            };
            trace
                .edges()
                .iter()
                .map(|e| OrderedPair {
                    source: name(e.source),
                    target: name(e.target),
                })
                .collect()
        }
    }
}

/// Every edge of `trace` whose endpoint components match `pair`.
pub fn edges_for(trace: &Trace, pair: &OrderedPair) -> Vec<Edge> {
    if !trace.view().contains(pair) {
        return Vec::new();
    }
    trace
        .edges()
        .iter()
        .copied()
        .filter(|e| trace.event(e.source).component == pair.source && trace.event(e.target).component == pair.target)
        .collect()
}

/// True iff `e2` lies downstream of `e1`. An edge never reaches itself.
pub fn edge_reaches(trace: &Trace, e1: Edge, e2: Edge) -> Result<bool, ModelError> {
    Reachability::new(trace).edge_reaches(e1, e2)
}
