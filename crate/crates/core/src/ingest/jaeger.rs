//! Read-only adapter for the Jaeger query API JSON format.
//!
//! Spans become events, `CHILD_OF` references become edges from parent to
//! child, and `process.serviceName` becomes the component. Span tags are
//! flattened into string attributes; the operation name is kept under
//! `operation` and the process `hostname` tag (if any) under `instance`.
//! References to spans outside the trace are dropped.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::Deserialize;
use serde_json::Value;

use super::{OutcomeBuilder, ParseOutcome};
use crate::error::IngestError;
use crate::model::{Attributes, Event, Trace, INSTANCE_KEY};

#[derive(Deserialize)]
struct Envelope {
    data: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct JaegerTrace {
    #[serde(rename = "traceID")]
    trace_id: String,
    spans: Vec<JaegerSpan>,
    #[serde(default)]
    processes: HashMap<String, JaegerProcess>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct JaegerSpan {
    #[serde(rename = "spanID")]
    span_id: String,
    #[serde(default)]
    operation_name: String,
    #[serde(default)]
    references: Vec<JaegerReference>,
    #[serde(default)]
    start_time: i64,
    #[serde(default)]
    tags: Vec<JaegerTag>,
    #[serde(rename = "processID", default)]
    process_id: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct JaegerReference {
    ref_type: String,
    #[serde(rename = "spanID")]
    span_id: String,
}

#[derive(Deserialize)]
struct JaegerTag {
    key: String,
    value: Value,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct JaegerProcess {
    service_name: String,
    #[serde(default)]
    tags: Vec<JaegerTag>,
}

fn tag_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn convert(raw: JaegerTrace) -> Result<Trace, crate::error::ModelError> {
    let mut events = Vec::with_capacity(raw.spans.len());
    let mut edges = Vec::new();
    let known: std::collections::HashSet<&str> = raw.spans.iter().map(|s| s.span_id.as_str()).collect();
    for span in &raw.spans {
        let process = raw.processes.get(&span.process_id);
        let component = process.map(|p| p.service_name.clone()).unwrap_or_default();
        let mut attrs: Attributes = BTreeMap::new();
        for tag in &span.tags {
            attrs.insert(tag.key.clone(), tag_string(&tag.value));
        }
        if !span.operation_name.is_empty() {
            attrs.insert("operation".into(), span.operation_name.clone());
        }
        if let Some(host) = process.and_then(|p| p.tags.iter().find(|t| t.key == "hostname")) {
            attrs.insert(INSTANCE_KEY.into(), tag_string(&host.value));
        }
        events.push(Event {
            id: span.span_id.clone(),
            component,
            ts_us: span.start_time,
            attrs,
        });
        for r in &span.references {
            if r.ref_type == "CHILD_OF" && known.contains(r.span_id.as_str()) {
                edges.push((r.span_id.clone(), span.span_id.clone()));
            }
        }
    }
    Trace::new(raw.trace_id, events, edges)
}

pub fn parse_jaeger<R: BufRead>(mut input: R, source: &str) -> Result<ParseOutcome, IngestError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut out = OutcomeBuilder::new();
    if text.trim().is_empty() {
        return Ok(out.finish(source));
    }
    let envelope: Envelope = serde_json::from_str(&text)?;
    for (i, value) in envelope.data.into_iter().enumerate() {
        match serde_json::from_value::<JaegerTrace>(value) {
            Ok(raw) => out.push(i + 1, convert(raw)),
            Err(e) => out.error(i + 1, e.to_string()),
        }
    }
    Ok(out.finish(source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OrderedPair;

    const FIXTURE: &str = r#"{"data":[{"traceID":"abc","spans":[
        {"traceID":"abc","spanID":"s1","operationName":"GET /checkout","references":[],"startTime":100,"duration":50,
         "tags":[{"key":"http.status_code","type":"int64","value":200}],"processID":"p1"},
        {"traceID":"abc","spanID":"s2","operationName":"charge","references":[{"refType":"CHILD_OF","traceID":"abc","spanID":"s1"}],
         "startTime":110,"duration":10,"tags":[],"processID":"p2"},
        {"traceID":"abc","spanID":"s3","operationName":"mint","references":[{"refType":"CHILD_OF","traceID":"abc","spanID":"s1"}],
         "startTime":120,"duration":10,"tags":[{"key":"error","type":"bool","value":true}],"processID":"p3"}],
      "processes":{"p1":{"serviceName":"Frontend","tags":[{"key":"hostname","type":"string","value":"fe-1"}]},
                   "p2":{"serviceName":"PaymentsService","tags":[]},
                   "p3":{"serviceName":"TokenService","tags":[]}}}]}"#;

    #[test]
    fn spans_references_and_services_map_to_trace() {
        let out = parse_jaeger(FIXTURE.as_bytes(), "jaeger").unwrap();
        assert!(out.errors.is_empty());
        assert_eq!(out.set.len(), 1);
        let t = &out.set.traces()[0];
        assert_eq!(t.trace_id(), "abc");
        assert_eq!(t.events().len(), 3);
        assert_eq!(t.edges().len(), 2);
        assert!(t.view().contains(&OrderedPair::new("Frontend", "PaymentsService")));
        assert!(t.view().contains(&OrderedPair::new("Frontend", "TokenService")));
        let root = &t.events()[0];
        assert_eq!(root.attrs["http.status_code"], "200");
        assert_eq!(root.attrs["instance"], "fe-1");
        assert_eq!(root.attrs["operation"], "GET /checkout");
        assert_eq!(t.events()[2].attrs["error"], "true");
    }

    #[test]
    fn dangling_reference_and_bad_trace_are_tolerated() {
        let input = r#"{"data":[
            {"traceID":"x","spans":[{"spanID":"a","references":[{"refType":"CHILD_OF","spanID":"gone"}],"processID":"p"}],
             "processes":{"p":{"serviceName":"S"}}},
            {"spans":[]}]}"#;
        let out = parse_jaeger(input.as_bytes(), "j").unwrap();
        assert_eq!(out.set.len(), 1);
        assert!(out.set.traces()[0].edges().is_empty());
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].line, 2);
    }
}
