//! Incident localization from distributed traces.
//!
//! Traces collected during an incident are compared against steady-state
//! traces. Calls that disappeared or appeared are reported as missing or
//! additional ordered component pairs, after dropping pairs too rare to be
//! meaningful in a sample and pairs explained by an upstream result.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod reach;
pub mod simulator;
pub mod stats;
pub mod store;

pub use error::{BaselineError, EvalError, IngestError, LocalizeError, ModelError, SimulationError, StatsError};
pub use ingest::{parse_traces, sample, write_traces, Format, LabelCriterion, TraceSet, Window};
pub use model::{Edge, Event, Granularity, Label, OrderedPair, Trace, View};
pub use pipeline::{localize, run_stages, DiffSet, LocalizationResult, StageSelection};
pub use stats::{coverage, min_sample_size, threshold, CorpusStats, GuaranteeConfig};
