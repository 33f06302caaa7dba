use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Label, Trace};

/// Attribute keys consulted by the status-code criterion, in order.
pub const DEFAULT_STATUS_KEYS: &[&str] = &["status", "http.status_code", "otel.status_code", "error"];

/// External success criterion used to label traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabelCriterion {
    /// Failure iff any event carries an error status under one of `keys`.
    StatusCode {
        #[serde(default = "default_keys")]
        keys: Vec<String>,
    },
    /// Failure iff any event has `key` set to one of `failure_values`.
    AttributePredicate { key: String, failure_values: Vec<String> },
    /// Labels supplied out of band, keyed by trace id.
    ExternalList { labels: BTreeMap<String, Label> },
}

fn default_keys() -> Vec<String> {
    DEFAULT_STATUS_KEYS.iter().map(|s| s.to_string()).collect()
}

impl Default for LabelCriterion {
    fn default() -> Self {
        LabelCriterion::StatusCode { keys: default_keys() }
    }
}

/// Classifies one status value. `None` means the value is not a status.
///
/// Zero, `ok`, `unset`, `false` and HTTP 1xx-3xx are successes; any other
/// integer, `error` and `true` are failures.
pub fn status_is_failure(value: &str) -> Option<bool> {
    let v = value.trim();
    match v.to_ascii_lowercase().as_str() {
        "ok" | "unset" | "false" => return Some(false),
        "error" | "true" => return Some(true),
        _ => {}
    }
    let code: i64 = v.parse().ok()?;
    Some(!(code == 0 || (100..400).contains(&code)))
}

pub fn label_trace(trace: &Trace, criterion: &LabelCriterion) -> Label {
    match criterion {
        LabelCriterion::StatusCode { keys } => {
            let mut evaluated = false;
            for event in trace.events() {
                for key in keys {
                    if let Some(failed) = event.attrs.get(key).and_then(|v| status_is_failure(v)) {
                        if failed {
                            return Label::Failure;
                        }
                        evaluated = true;
                    }
                }
            }
            if evaluated {
                Label::Success
            } else {
                Label::Unlabeled
            }
        }
        LabelCriterion::AttributePredicate { key, failure_values } => {
            let mut seen = false;
            for value in trace.events().iter().filter_map(|e| e.attrs.get(key)) {
                if failure_values.iter().any(|f| f == value) {
                    return Label::Failure;
                }
                seen = true;
            }
            if seen {
                Label::Success
            } else {
                Label::Unlabeled
            }
        }
        LabelCriterion::ExternalList { labels } => labels.get(trace.trace_id()).copied().unwrap_or_default(),
    }
}
