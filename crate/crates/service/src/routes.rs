use std::time::Instant;

use act_core::ingest::{to_record, TraceRecord};
use act_core::pipeline::{Advisory, LedgerEntry, PruneCounters, RunConfig, StageSnapshots, StageTimings};
use act_core::simulator::SimulationSpec;
use act_core::stats::{coverage_curve, CoveragePoint, DEFAULT_GUARANTEE};
use act_core::{
    coverage, localize, sample, CorpusStats, DiffSet, GuaranteeConfig, Label, LabelCriterion, OrderedPair, Window,
};
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::state::{AppState, CorpusInfo, SimulationRecord};

/// OpenAPI description served at `/spec`.
pub const OPENAPI: &str = include_str!("openapi.json");

fn default_guarantee() -> f64 {
    DEFAULT_GUARANTEE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeRequest {
    /// Corpus name from `/corpora`; the main store when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<String>,
    pub incident_start_us: i64,
    /// Length of the before window; defaults to the incident window length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before_window_us: Option<i64>,
    pub sample_n: usize,
    #[serde(default = "default_guarantee")]
    pub guarantee_g: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub label_criterion: LabelCriterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub before: f64,
    pub incident: f64,
}

/// Result of `POST /localize`. Wall-clock timings travel in the
/// `server-timing` header so equal requests get equal bodies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeResponse {
    pub corpus: String,
    pub before_window: Window,
    pub incident_window: Window,
    pub before_labeled: usize,
    pub incident_labeled: usize,
    pub thresholds: Thresholds,
    pub answer: DiffSet,
    pub config: RunConfig,
    pub stages: StageSnapshots,
    pub ledger: Vec<LedgerEntry>,
    pub counters: PruneCounters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<Advisory>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct StatsQuery {
    pub corpus: Option<String>,
    /// `start_us,end_us`, inclusive; the whole corpus when absent.
    pub window: Option<String>,
    pub n: Option<usize>,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFrequency {
    pub source: String,
    pub target: String,
    pub freq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResponse {
    pub corpus: String,
    pub window: Option<Window>,
    pub total: usize,
    pub pair_count: usize,
    pub guarantee: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    pub coverage_curve: Vec<CoveragePoint>,
    pub pairs: Vec<PairFrequency>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CorpusQuery {
    pub corpus: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResponse {
    pub corpus: String,
    pub label: Label,
    pub start_us: i64,
    pub view: Vec<OrderedPair>,
    pub trace: TraceRecord,
}

pub async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

pub async fn corpora(State(state): State<AppState>) -> Result<Json<Vec<CorpusInfo>>, ApiError> {
    Ok(Json(state.corpora()?.iter().map(|c| c.info()).collect()))
}

pub async fn openapi() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI)
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

fn parse_window(raw: &str) -> Result<Window, ApiError> {
    let bad = || ApiError::bad_request(format!("window must be start_us,end_us, got {raw:?}"));
    let (s, e) = raw.split_once(',').ok_or_else(bad)?;
    let w = Window {
        start_us: s.trim().parse().map_err(|_| bad())?,
        end_us: e.trim().parse().map_err(|_| bad())?,
    };
    if w.start_us > w.end_us {
        return Err(ApiError::bad_request("window start is after its end"));
    }
    Ok(w)
}

fn check_guarantee(g: f64) -> Result<(), ApiError> {
    act_core::stats::validate_guarantee(g).map_err(|e| ApiError::bad_request(e.to_string()))
}

pub async fn stats(
    State(state): State<AppState>,
    query: Result<Query<StatsQuery>, QueryRejection>,
) -> Result<Json<StatsResponse>, ApiError> {
    let Query(q) = query?;
    let g = q.g.unwrap_or(DEFAULT_GUARANTEE);
    check_guarantee(g)?;
    if q.n == Some(0) {
        return Err(ApiError::bad_request("n must be at least 1"));
    }
    let window = q.window.as_deref().map(parse_window).transpose()?;
    let corpus = state.corpus(q.corpus.as_deref())?;
    let stats = match window {
        Some(w) => CorpusStats::build(&corpus.traces.in_window(w)),
        None => CorpusStats::build(&corpus.traces),
    };
    let usable = stats.total() > 0;
    Ok(Json(StatsResponse {
        corpus: corpus.name.clone(),
        window: window.or(corpus.traces.window()),
        total: stats.total(),
        pair_count: stats.pair_count(),
        guarantee: g,
        sample_n: q.n,
        threshold: q.n.filter(|_| usable).map(|n| stats.threshold(n, g)),
        coverage: q.n.filter(|_| usable).map(|n| coverage(&stats, n, g)),
        coverage_curve: coverage_curve(&stats, g),
        pairs: stats
            .frequencies()
            .iter()
            .map(|(p, &freq)| PairFrequency {
                source: p.source.clone(),
                target: p.target.clone(),
                freq,
            })
            .collect(),
    }))
}

pub async fn trace(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<CorpusQuery>, QueryRejection>,
) -> Result<Json<TraceResponse>, ApiError> {
    let Query(q) = query?;
    let corpus = state.corpus(q.corpus.as_deref())?;
    let t = corpus
        .traces
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no trace {id} in corpus {}", corpus.name)))?;
    Ok(Json(TraceResponse {
        corpus: corpus.name.clone(),
        label: t.label(),
        start_us: t.start_us(),
        view: t.view().iter().cloned().collect(),
        trace: to_record(t),
    }))
}

fn server_timing(t: &StageTimings, total_ms: f64) -> HeaderValue {
    let ms = |us: u64| us as f64 / 1000.0;
    let value = format!(
        "diff;dur={:.3}, threshold;dur={:.3}, reach;dur={:.3}, total;dur={total_ms:.3}",
        ms(t.diff_us),
        ms(t.threshold_us),
        ms(t.reachability_us)
    );
    HeaderValue::from_str(&value).expect("ascii header")
}

/// Splits the corpus at the incident start, samples both sides and runs the
/// pipeline with per-window statistics.
pub fn run_localize(state: &AppState, req: &LocalizeRequest) -> Result<(LocalizeResponse, StageTimings), ApiError> {
    check_guarantee(req.guarantee_g)?;
    if req.sample_n == 0 {
        return Err(ApiError::bad_request("sample_n must be at least 1"));
    }
    let corpus = state.corpus(req.corpus.as_deref())?;
    let range = corpus
        .traces
        .window()
        .ok_or_else(|| ApiError::insufficient_traces(format!("corpus {} is empty", corpus.name)))?;
    if req.incident_start_us <= range.start_us || req.incident_start_us > range.end_us {
        return Err(ApiError::bad_request(
            "incident_start_us must fall inside the stored data range, after its first trace",
        )
        .with_details(json!({"data_start_us": range.start_us, "data_end_us": range.end_us})));
    }
    let incident_window = Window {
        start_us: req.incident_start_us,
        end_us: range.end_us,
    };
    let before_len = req.before_window_us.unwrap_or(incident_window.duration_us() + 1);
    if before_len <= 0 {
        return Err(ApiError::bad_request("before_window_us must be positive"));
    }
    let before_window = Window {
        start_us: req.incident_start_us.saturating_sub(before_len),
        end_us: req.incident_start_us - 1,
    };

    let before = corpus.select(before_window, &req.label_criterion);
    let incident = corpus.select(incident_window, &req.label_criterion);
    let labeled = |s: &act_core::TraceSet| s.len() - s.count_label(Label::Unlabeled);
    let (before_labeled, incident_labeled) = (labeled(&before), labeled(&incident));
    if before_labeled < req.sample_n || incident_labeled < req.sample_n {
        return Err(ApiError::insufficient_traces(format!(
            "sample_n {} exceeds the labeled traces available: {before_labeled} before, {incident_labeled} during the incident",
            req.sample_n
        ))
        .with_details(json!({
            "sample_n": req.sample_n,
            "before_labeled": before_labeled,
            "incident_labeled": incident_labeled,
        })));
    }
    let stats_before = CorpusStats::build(&before);
    let stats_incident = CorpusStats::build(&incident);
    let before_sample = sample(&before, req.sample_n, req.seed).map_err(|e| ApiError::internal(e.to_string()))?;
    let incident_sample = sample(&incident, req.sample_n, crate::incident_seed(req.seed))
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let cfg = GuaranteeConfig::new(req.guarantee_g, req.sample_n).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut r = localize(&before_sample, &incident_sample, &stats_before, &stats_incident, &cfg)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    r.config.seed = Some(req.seed);
    let response = LocalizeResponse {
        corpus: corpus.name.clone(),
        before_window,
        incident_window,
        before_labeled,
        incident_labeled,
        thresholds: Thresholds {
            before: stats_before.threshold(req.sample_n, req.guarantee_g),
            incident: stats_incident.threshold(req.sample_n, req.guarantee_g),
        },
        answer: r.answer().clone(),
        config: r.config,
        stages: r.stages,
        ledger: r.ledger,
        counters: r.counters,
        advisory: r.advisory,
    };
    Ok((response, r.timings))
}

pub async fn post_localize(
    State(state): State<AppState>,
    body: Result<Json<LocalizeRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let start = Instant::now();
    let (response, timings) = tokio::task::spawn_blocking(move || run_localize(&state, &req)).await??;
    let total_ms = start.elapsed().as_secs_f64() * 1000.0;
    let mut out = Json(response).into_response();
    out.headers_mut()
        .insert("server-timing", server_timing(&timings, total_ms));
    Ok(out)
}

pub async fn post_simulate(
    State(state): State<AppState>,
    body: Result<Json<SimulationSpec>, JsonRejection>,
) -> Result<Json<SimulationRecord>, ApiError> {
    let Json(spec) = body?;
    let record = tokio::task::spawn_blocking(move || state.simulate(&spec)).await??;
    Ok(Json(record))
}
