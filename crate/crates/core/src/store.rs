//! On-disk trace store: a directory of canonical JSONL shards sorted by trace
//! start time, indexed by `manifest.json`.
//!
//! ```text
//! store/
//!   manifest.json        {"version":1,"shards":[{"file":"shard-00000.jsonl","start_us":..,"end_us":..,"count":..}]}
//!   shard-00000.jsonl
//!   shard-00001.jsonl
//! ```
//!
//! Labels are not persisted; they are derived on load from a
//! [`LabelCriterion`].

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::ingest::{parse_jsonl, write_jsonl, LabelCriterion, TraceSet, Window};
use crate::model::Trace;

pub const MANIFEST: &str = "manifest.json";
pub const DEFAULT_SHARD_SIZE: usize = 5_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub file: String,
    pub start_us: i64,
    pub end_us: i64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub shards: Vec<ShardInfo>,
}

impl Manifest {
    pub fn total(&self) -> usize {
        self.shards.iter().map(|s| s.count).sum()
    }

    /// Span of trace start times, if the store is non-empty.
    pub fn window(&self) -> Option<Window> {
        let start = self.shards.iter().map(|s| s.start_us).min()?;
        let end = self.shards.iter().map(|s| s.end_us).max()?;
        Some(Window {
            start_us: start,
            end_us: end,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
    manifest: Manifest,
}

impl Store {
    /// Writes `traces` into a fresh store at `root`, replacing any manifest there.
    pub fn create<'a>(
        root: impl AsRef<Path>,
        traces: impl IntoIterator<Item = &'a Trace>,
        shard_size: usize,
    ) -> Result<Store, IngestError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let mut sorted: Vec<&Trace> = traces.into_iter().collect();
        sorted.sort_by(|a, b| {
            a.start_us()
                .cmp(&b.start_us())
                .then_with(|| a.trace_id().cmp(b.trace_id()))
        });
        let mut seen = std::collections::HashSet::new();
        for t in &sorted {
            if !seen.insert(t.trace_id()) {
                return Err(IngestError::DuplicateTrace(t.trace_id().to_string()));
            }
        }
        let mut shards = Vec::new();
        for (i, chunk) in sorted.chunks(shard_size.max(1)).enumerate() {
            let file = format!("shard-{i:05}.jsonl");
            let mut out = BufWriter::new(File::create(root.join(&file))?);
            write_jsonl(chunk.iter().copied(), &mut out)?;
            out.flush()?;
            shards.push(ShardInfo {
                file,
                start_us: chunk[0].start_us(),
                end_us: chunk[chunk.len() - 1].start_us(),
                count: chunk.len(),
            });
        }
        let manifest = Manifest { version: 1, shards };
        fs::write(root.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(Store { root, manifest })
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Store, IngestError> {
        let root = root.as_ref().to_path_buf();
        let path = root.join(MANIFEST);
        let bytes =
            fs::read(&path).map_err(|e| IngestError::Malformed(format!("cannot read {}: {e}", path.display())))?;
        let manifest: Manifest = serde_json::from_slice(&bytes)?;
        Ok(Store { root, manifest })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn window(&self) -> Option<Window> {
        self.manifest.window()
    }

    fn read_shard(&self, shard: &ShardInfo, out: &mut Vec<Arc<Trace>>) -> Result<(), IngestError> {
        let file = File::open(self.root.join(&shard.file))?;
        let parsed = parse_jsonl(BufReader::new(file), &shard.file)?;
        if let Some(err) = parsed.errors.first() {
            return Err(IngestError::Malformed(format!(
                "{} line {}: {}",
                shard.file, err.line, err.message
            )));
        }
        out.extend(parsed.set.traces().iter().cloned());
        Ok(())
    }

    fn source(&self) -> String {
        self.root.display().to_string()
    }

    /// Every trace, labeled with `criterion`.
    pub fn load_all(&self, criterion: &LabelCriterion) -> Result<TraceSet, IngestError> {
        let mut traces = Vec::with_capacity(self.manifest.total());
        for shard in &self.manifest.shards {
            self.read_shard(shard, &mut traces)?;
        }
        let set = match self.window() {
            Some(w) => TraceSet::with_window(traces, w, self.source())?,
            None => TraceSet::new(traces, self.source())?,
        };
        Ok(set.relabeled(criterion))
    }

    /// Traces starting inside `window`, labeled with `criterion`.
    /// Only shards overlapping the window are read.
    pub fn load_window(&self, window: Window, criterion: &LabelCriterion) -> Result<TraceSet, IngestError> {
        let mut traces = Vec::new();
        for shard in &self.manifest.shards {
            if shard.end_us < window.start_us || shard.start_us > window.end_us {
                continue;
            }
            self.read_shard(shard, &mut traces)?;
        }
        traces.retain(|t| window.contains(t.start_us()));
        Ok(TraceSet::with_window(traces, window, self.source())?.relabeled(criterion))
    }
}
