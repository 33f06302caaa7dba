use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("trace {trace_id} has no events")]
    EmptyTrace { trace_id: String },
    #[error("trace {trace_id}: event {event_id} has an empty component name")]
    EmptyComponent { trace_id: String, event_id: String },
    #[error("trace {trace_id}: duplicate event id {event_id}")]
    DuplicateEvent { trace_id: String, event_id: String },
    #[error("trace {trace_id}: edge references unknown event {event_id}")]
    UnknownEvent { trace_id: String, event_id: String },
    #[error("trace {trace_id} contains a cycle")]
    Cycle { trace_id: String },
    #[error("trace {trace_id} has no edge {from}->{to}")]
    EdgeNotInTrace { trace_id: String, from: usize, to: usize },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no labeled traces in window")]
    NoLabeledTraces,
    #[error("sample size must be at least 1")]
    ZeroSampleSize,
    #[error("duplicate trace id {0}")]
    DuplicateTrace(String),
    #[error("trace {trace_id} starts at {start_us}, outside window [{window_start}, {window_end}]")]
    OutsideWindow {
        trace_id: String,
        start_us: i64,
        window_start: i64,
        window_end: i64,
    },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("guarantee must lie strictly between 0 and 1, got {0}")]
    InvalidGuarantee(f64),
    #[error("sample size must be at least 1")]
    ZeroSampleSize,
    #[error("coverage target must lie in (0, 1], got {0}")]
    InvalidTarget(f64),
    #[error("insufficient corpus: coverage {best:.4} at n = {corpus_size} is below target {target}")]
    InsufficientCorpus { target: f64, best: f64, corpus_size: usize },
    #[error("malformed statistics file: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalizeError {
    #[error("no steady-state baseline: t_before has no successful traces")]
    NoBaseline,
    #[error("incident trace set is empty")]
    EmptyIncident,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("mutation precondition violated: trace {trace_id} does not contain {target}")]
    NotEligible { trace_id: String, target: String },
    #[error("target {0} does not occur in the corpus")]
    TargetAbsent(String),
    #[error("target kind does not match category {0}")]
    TargetMismatch(String),
    #[error("fallback component {0} already exists in the corpus")]
    FallbackCollision(String),
    #[error("mutation fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("corpus has {available} labeled traces, {requested} requested")]
    InsufficientCorpus { available: usize, requested: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("nothing to localize: no failed traces in t_incident")]
    NoFailures,
    #[error("no successful traces in t_before")]
    NoBaseline,
    #[error("key {0} missing from basis")]
    KeyNotInBasis(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("technique set must include the symmetric difference")]
    MissingDiff,
    #[error(transparent)]
    Localize(#[from] LocalizeError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}
