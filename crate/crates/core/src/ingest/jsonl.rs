use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{OutcomeBuilder, ParseOutcome};
use crate::error::IngestError;
use crate::model::{Attributes, Event, Trace};

/// Canonical on-disk record. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub trace_id: String,
    pub events: Vec<EventRecord>,
    pub edges: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub component: String,
    pub ts_us: i64,
    pub attrs: Attributes,
}

pub fn to_record(trace: &Trace) -> TraceRecord {
    TraceRecord {
        trace_id: trace.trace_id().to_string(),
        events: trace
            .events()
            .iter()
            .map(|e| EventRecord {
                id: e.id.clone(),
                component: e.component.clone(),
                ts_us: e.ts_us,
                attrs: e.attrs.clone(),
            })
            .collect(),
        edges: trace
            .edges()
            .iter()
            .map(|&e| {
                let ids = trace.edge_ids(e);
                [ids.source, ids.target]
            })
            .collect(),
    }
}

impl TraceRecord {
    pub fn into_trace(self) -> Result<Trace, crate::error::ModelError> {
        let events = self
            .events
            .into_iter()
            .map(|e| Event {
                id: e.id,
                component: e.component,
                ts_us: e.ts_us,
                attrs: e.attrs,
            })
            .collect();
        Trace::new(self.trace_id, events, self.edges.iter().map(|[s, t]| (s, t)))
    }
}

pub fn parse_jsonl<R: BufRead>(input: R, source: &str) -> Result<ParseOutcome, IngestError> {
    let mut out = OutcomeBuilder::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TraceRecord>(&line) {
            Ok(record) => out.push(i + 1, record.into_trace()),
            Err(e) => out.error(i + 1, e.to_string()),
        }
    }
    Ok(out.finish(source))
}

pub fn write_jsonl<'a, W: Write>(traces: impl Iterator<Item = &'a Trace>, mut out: W) -> Result<(), IngestError> {
    for trace in traces {
        serde_json::to_writer(&mut out, &to_record(trace))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"trace_id":"t1","events":[{"id":"a","component":"A","ts_us":1,"attrs":{"status":"0"}},{"id":"b","component":"B","ts_us":2,"attrs":{}}],"edges":[["a","b"]]}"#;

    #[test]
    fn canonical_line_maps_directly() {
        let out = parse_jsonl(ONE.as_bytes(), "t").unwrap();
        assert_eq!(out.set.len(), 1);
        let t = &out.set.traces()[0];
        assert_eq!(t.events().len(), 2);
        assert_eq!(t.edges().len(), 1);
        assert!(out.errors.is_empty());
    }

    #[test]
    fn empty_input_is_empty_set() {
        let out = parse_jsonl("".as_bytes(), "t").unwrap();
        assert!(out.set.is_empty());
        assert!(out.set.window().is_none());
    }

    #[test]
    fn bad_records_are_skipped_with_line_numbers() {
        let cyclic = r#"{"trace_id":"c","events":[{"id":"a","component":"A","ts_us":1,"attrs":{}},{"id":"b","component":"B","ts_us":2,"attrs":{}}],"edges":[["a","b"],["b","a"]]}"#;
        let input = format!("{ONE}\nnot json\n{cyclic}\n{ONE}\n");
        let out = parse_jsonl(input.as_bytes(), "t").unwrap();
        assert_eq!(out.set.len(), 1);
        let lines: Vec<usize> = out.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
        assert_eq!(out.cyclic_rejected, 1);
        assert_eq!(out.duplicates_rejected, 1);
    }

    #[test]
    fn writer_emits_exact_schema() {
        let out = parse_jsonl(ONE.as_bytes(), "t").unwrap();
        let mut buf = Vec::new();
        write_jsonl(out.set.iter(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{ONE}\n"));
    }
}
