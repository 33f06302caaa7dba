use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use act_core::simulator::{simulate_incident_with_stats, ExpectedAnswer, SimulationSpec};
use act_core::store::{Store, DEFAULT_SHARD_SIZE};
use act_core::{CorpusStats, IngestError, Label, LabelCriterion, SimulationError, Trace, TraceSet, Window};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ApiError;

/// Name of the store the service was started with.
pub const MAIN_CORPUS: &str = "main";

/// Metadata file written next to each scratch store.
pub const SIMULATION_FILE: &str = "simulation.json";

/// Gap between the last before trace and the first incident trace of a
/// simulated incident.
const SCRATCH_GAP_US: i64 = 1_000_000;

/// What `/simulate` stored and how to localize it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub id: String,
    pub spec: SimulationSpec,
    pub expected: ExpectedAnswer,
    pub visible: bool,
    pub eligible_in_sample: usize,
    pub mutated_in_sample: usize,
    pub incident_start_us: i64,
    pub before_window: Window,
    pub incident_window: Window,
    /// Largest sample size both windows can serve.
    pub suggested_sample_n: usize,
}

/// A loaded corpus. Traces carry default-criterion labels.
#[derive(Debug)]
pub struct Corpus {
    pub name: String,
    pub traces: TraceSet,
    pub simulation: Option<SimulationRecord>,
}

/// Row of `GET /corpora`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub name: String,
    pub kind: String,
    pub window: Option<Window>,
    pub traces: usize,
    pub success: usize,
    pub failure: usize,
    pub unlabeled: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationRecord>,
}

impl Corpus {
    /// Traces starting in `window`, labeled with `criterion`.
    pub fn select(&self, window: Window, criterion: &LabelCriterion) -> TraceSet {
        let set = self.traces.in_window(window);
        if *criterion == LabelCriterion::default() {
            set
        } else {
            set.relabeled(criterion)
        }
    }

    pub fn info(&self) -> CorpusInfo {
        CorpusInfo {
            name: self.name.clone(),
            kind: if self.simulation.is_some() { "scratch" } else { "store" }.into(),
            window: self.traces.window(),
            traces: self.traces.len(),
            success: self.traces.count_label(Label::Success),
            failure: self.traces.count_label(Label::Failure),
            unlabeled: self.traces.count_label(Label::Unlabeled),
            simulation: self.simulation.clone(),
        }
    }
}

struct Inner {
    main: Arc<Corpus>,
    main_stats: CorpusStats,
    scratch_dir: PathBuf,
    scratch: RwLock<BTreeMap<String, Arc<Corpus>>>,
}

/// Shared, read-mostly service state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn is_scratch_id(name: &str) -> bool {
    name.len() == 16 && name.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

fn load_store(root: &Path, name: &str) -> Result<TraceSet, IngestError> {
    let set = Store::open(root)?.load_all(&LabelCriterion::default())?;
    let traces = set.traces().to_vec();
    match set.window() {
        Some(w) => TraceSet::with_window(traces, w, name),
        None => TraceSet::new(traces, name),
    }
}

fn shifted(trace: &Trace, offset: i64) -> Trace {
    let (id, mut events, edges, label) = trace.clone().into_parts();
    for e in &mut events {
        e.ts_us += offset;
    }
    Trace::from_parts(id, events, edges, label).expect("shifting keeps a valid trace")
}

impl AppState {
    /// Loads the store at `store`. Simulated incidents go under `scratch_dir`.
    pub fn open(store: impl AsRef<Path>, scratch_dir: impl Into<PathBuf>) -> Result<AppState, IngestError> {
        Ok(Self::from_traces(load_store(store.as_ref(), MAIN_CORPUS)?, scratch_dir))
    }

    pub fn from_traces(traces: TraceSet, scratch_dir: impl Into<PathBuf>) -> AppState {
        let main_stats = CorpusStats::build(&traces);
        AppState {
            inner: Arc::new(Inner {
                main: Arc::new(Corpus {
                    name: MAIN_CORPUS.into(),
                    traces,
                    simulation: None,
                }),
                main_stats,
                scratch_dir: scratch_dir.into(),
                scratch: RwLock::new(BTreeMap::new()),
            }),
        }
    }

    pub fn scratch_dir(&self) -> &Path {
        &self.inner.scratch_dir
    }

    /// Looks a corpus up by name; `None` means the main store.
    pub fn corpus(&self, name: Option<&str>) -> Result<Arc<Corpus>, ApiError> {
        let name = name.unwrap_or(MAIN_CORPUS);
        if name == MAIN_CORPUS {
            return Ok(Arc::clone(&self.inner.main));
        }
        if let Some(c) = self.inner.scratch.read().expect("scratch lock").get(name) {
            return Ok(Arc::clone(c));
        }
        let dir = self.inner.scratch_dir.join(name);
        if !is_scratch_id(name) || !dir.join(SIMULATION_FILE).is_file() {
            return Err(ApiError::not_found(format!("unknown corpus {name}")));
        }
        let record: SimulationRecord = serde_json::from_slice(
            &std::fs::read(dir.join(SIMULATION_FILE))
                .map_err(|e| ApiError::internal(format!("cannot read {}: {e}", dir.display())))?,
        )
        .map_err(|e| ApiError::internal(e.to_string()))?;
        let corpus = Arc::new(Corpus {
            name: name.into(),
            traces: load_store(&dir, name)?,
            simulation: Some(record),
        });
        let mut scratch = self.inner.scratch.write().expect("scratch lock");
        Ok(Arc::clone(scratch.entry(name.into()).or_insert(corpus)))
    }

    /// The main corpus followed by every stored simulation, by id.
    pub fn corpora(&self) -> Result<Vec<Arc<Corpus>>, ApiError> {
        let mut names: Vec<String> = match std::fs::read_dir(&self.inner.scratch_dir) {
            Ok(entries) => entries
                .filter_map(|e| e.ok()?.file_name().into_string().ok())
                .filter(|n| is_scratch_id(n))
                .collect(),
            Err(_) => Vec::new(),
        };
        names.sort();
        let mut out = vec![Arc::clone(&self.inner.main)];
        for n in names {
            // A half-written directory from a crashed run is skipped, not fatal.
            if let Ok(c) = self.corpus(Some(&n)) {
                out.push(c);
            }
        }
        Ok(out)
    }

    /// Scratch id of `spec`: a prefix of the SHA-256 of its JSON form.
    pub fn simulation_id(spec: &SimulationSpec) -> String {
        let bytes = serde_json::to_vec(spec).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))[..16].to_string()
    }

    /// Injects `spec` into the main corpus and stores the two samples as a
    /// scratch corpus: before traces first, incident traces shifted to start
    /// after them. Repeating a spec returns the stored record.
    pub fn simulate(&self, spec: &SimulationSpec) -> Result<SimulationRecord, ApiError> {
        let id = Self::simulation_id(spec);
        if let Ok(existing) = self.corpus(Some(&id)) {
            return Ok(existing.simulation.clone().expect("scratch corpora carry a record"));
        }
        let run =
            simulate_incident_with_stats(&self.inner.main.traces, &self.inner.main_stats, spec).map_err(
                |e| match e {
                    SimulationError::InsufficientCorpus { available, requested } => {
                        ApiError::insufficient_traces(e.to_string()).with_details(serde_json::json!({
                            "available": available,
                            "requested": requested,
                        }))
                    }
                    other => ApiError::bad_request(other.to_string()),
                },
            )?;
        let before_end = run.before.iter().map(Trace::start_us).max().unwrap_or_default();
        let incident_start = run.incident.iter().map(Trace::start_us).min().unwrap_or_default();
        let offset = before_end + SCRATCH_GAP_US - incident_start;
        let moved: Vec<Trace> = run.incident.iter().map(|t| shifted(t, offset)).collect();
        let incident_end = moved.iter().map(Trace::start_us).max().unwrap_or_default();
        let before_start = run.before.iter().map(Trace::start_us).min().unwrap_or_default();

        let record = SimulationRecord {
            id: id.clone(),
            spec: spec.clone(),
            expected: run.expected.clone(),
            visible: run.visible,
            eligible_in_sample: run.eligible_in_sample,
            mutated_in_sample: run.mutated_in_sample,
            incident_start_us: incident_start + offset,
            before_window: Window {
                start_us: before_start,
                end_us: before_end,
            },
            incident_window: Window {
                start_us: incident_start + offset,
                end_us: incident_end,
            },
            suggested_sample_n: run.before.len().min(run.incident.len()),
        };
        // Written to a temporary name and renamed, so readers never see a
        // store without its record.
        let tmp = self.inner.scratch_dir.join(format!(".{id}.tmp"));
        let dir = self.inner.scratch_dir.join(&id);
        let _ = std::fs::remove_dir_all(&tmp);
        Store::create(&tmp, run.before.iter().chain(moved.iter()), DEFAULT_SHARD_SIZE)?;
        std::fs::write(
            tmp.join(SIMULATION_FILE),
            serde_json::to_vec_pretty(&record).expect("record serializes"),
        )
        .map_err(|e| ApiError::internal(e.to_string()))?;
        if std::fs::rename(&tmp, &dir).is_err() {
            // Another request stored the same spec first.
            let _ = std::fs::remove_dir_all(&tmp);
        }
        self.corpus(Some(&id))?;
        Ok(record)
    }
}
