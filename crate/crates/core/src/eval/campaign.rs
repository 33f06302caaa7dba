use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synth::SynthConfig;
use super::{ablation_sets, grade, stage_selection, technique_label, Grade};
use crate::baselines::{baseline_localize, BaselineKind};
use crate::error::{EvalError, SimulationError, StatsError};
use crate::ingest::TraceSet;
use crate::model::{Label, OrderedPair};
use crate::pipeline::{run_stages, DiffSet, StageSelection};
use crate::simulator::{
    simulate_incident_with_stats, ExpectedAnswer, IncidentCategory, SimulatedIncident, SimulationSpec, Target,
};
use crate::stats::{min_sample_size, validate_guarantee, CorpusStats, GuaranteeConfig, DEFAULT_GUARANTEE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Act,
    NodeCount,
    EdgeCount,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Act, Method::NodeCount, Method::EdgeCount];

    pub fn name(self) -> &'static str {
        match self {
            Method::Act => "act",
            Method::NodeCount => "node_count",
            Method::EdgeCount => "edge_count",
        }
    }

    fn baseline(self) -> Option<BaselineKind> {
        match self {
            Method::Act => None,
            Method::NodeCount => Some(BaselineKind::NodeCount),
            Method::EdgeCount => Some(BaselineKind::EdgeCount),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizePolicy {
    Fixed(usize),
    /// Smallest sample size reaching this coverage.
    Auto {
        coverage: f64,
    },
}

/// Where the CLI finds the corpus; the library takes a loaded corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    Synthetic(SynthConfig),
    Preset(String),
    Store(PathBuf),
}

fn default_categories() -> Vec<IncidentCategory> {
    IncidentCategory::ALL.to_vec()
}
fn default_policy() -> SampleSizePolicy {
    SampleSizePolicy::Auto { coverage: 0.9 }
}
fn default_guarantee() -> f64 {
    DEFAULT_GUARANTEE
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_true() -> bool {
    true
}
fn default_fraction() -> f64 {
    1.0
}
fn default_attempts() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSource>,
    #[serde(default = "default_categories")]
    pub categories: Vec<IncidentCategory>,
    /// Visible runs wanted per category.
    pub runs_per_category: usize,
    pub seed: u64,
    #[serde(default = "default_policy")]
    pub sample_size: SampleSizePolicy,
    #[serde(default = "default_guarantee")]
    pub guarantee: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_true")]
    pub ablations: bool,
    #[serde(default = "default_fraction")]
    pub mutation_fraction: f64,
    /// Attempts per category are capped at this multiple of `runs_per_category`.
    #[serde(default = "default_attempts")]
    pub max_attempts_factor: usize,
}

impl CampaignConfig {
    pub fn new(runs_per_category: usize, seed: u64) -> Self {
        CampaignConfig {
            corpus: None,
            categories: default_categories(),
            runs_per_category,
            seed,
            sample_size: default_policy(),
            guarantee: DEFAULT_GUARANTEE,
            methods: default_methods(),
            ablations: true,
            mutation_fraction: 1.0,
            max_attempts_factor: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeCounts {
    pub exact: usize,
    pub superfluous: usize,
    pub wrong: usize,
    pub no_answer: usize,
    pub errors: usize,
}

impl GradeCounts {
    fn add(&mut self, g: Option<Grade>) {
        match g {
            Some(Grade::Exact) => self.exact += 1,
            Some(Grade::Superfluous) => self.superfluous += 1,
            Some(Grade::Wrong) => self.wrong += 1,
            Some(Grade::NoAnswer) => self.no_answer += 1,
            None => self.errors += 1,
        }
    }

    pub fn graded(&self) -> usize {
        self.exact + self.superfluous + self.wrong + self.no_answer
    }

    /// Percentage of graded runs, two decimals.
    pub fn pct(&self, grade: Grade) -> f64 {
        let n = self.graded();
        if n == 0 {
            return 0.0;
        }
        let c = match grade {
            Grade::Exact => self.exact,
            Grade::Superfluous => self.superfluous,
            Grade::Wrong => self.wrong,
            Grade::NoAnswer => self.no_answer,
        };
        (c as f64 * 10_000.0 / n as f64).round() / 100.0
    }
}

/// One method on one simulated incident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grade: Option<Grade>,
    pub answer: DiffSet,
    /// Pairs entering reachability pruning.
    pub input_pairs: u64,
    pub pair_tests: u64,
    pub traces_examined: u64,
    /// Baselines only: distance computations, successes and failures scanned.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<(u64, u64, u64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub category: IncidentCategory,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    pub expected: ExpectedAnswer,
    pub visible: bool,
    pub mutated_in_sample: usize,
    pub methods: Vec<MethodRun>,
    /// Result size per technique set.
    pub ablation: BTreeMap<String, usize>,
    /// Whether the full pipeline's result is inside every two-technique result
    /// and those inside the difference alone.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation_contained: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    /// Category name or `all`.
    pub category: String,
    pub counts: GradeCounts,
    pub exact_pct: f64,
    pub superfluous_pct: f64,
    pub wrong_pct: f64,
    pub no_answer_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub techniques: String,
    pub runs: usize,
    pub mean_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub traces: usize,
    pub labeled: usize,
    pub components: usize,
    pub pairs: usize,
}

impl CorpusSummary {
    pub fn of(corpus: &TraceSet, stats: &CorpusStats) -> Self {
        let components: BTreeSet<&str> = corpus
            .iter()
            .flat_map(|t| t.events().iter().map(|e| e.component.as_str()))
            .collect();
        CorpusSummary {
            traces: corpus.len(),
            labeled: corpus.len() - corpus.count_label(Label::Unlabeled),
            components: components.len(),
            pairs: stats.pair_count(),
        }
    }
}

/// Everything deterministic about a campaign. Equal inputs give byte-equal JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub corpus: CorpusSummary,
    pub sample_size: usize,
    pub threshold: f64,
    pub attempted: usize,
    pub visible: usize,
    pub invisible: usize,
    pub errors: usize,
    pub summary: Vec<SummaryRow>,
    /// Sizes of non-exact answers, sorted, per method.
    pub result_sizes: BTreeMap<Method, Vec<usize>>,
    pub ablation: Vec<AblationRow>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub category: IncidentCategory,
    pub seed: u64,
    pub method: Method,
    pub diff_us: u64,
    pub threshold_us: u64,
    pub reachability_us: u64,
    pub total_us: u64,
}

/// Wall-clock measurements, kept apart from the deterministic report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    pub timing: TimingReport,
}

/// Targets whose change would show at sample size `n`: pairs with
/// `freq >= threshold`, and components whose every in-edge pair qualifies.
pub fn detectable_targets(stats: &CorpusStats, n: usize, g: f64) -> (Vec<OrderedPair>, Vec<String>) {
    let t = stats.threshold(n, g);
    let pairs: Vec<OrderedPair> = stats
        .frequencies()
        .iter()
        .filter(|(_, &f)| f as f64 >= t)
        .map(|(p, _)| p.clone())
        .collect();
    let mut in_edges: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (p, &f) in stats.frequencies() {
        let e = in_edges.entry(p.target.as_str()).or_default();
        e.0 += 1;
        if f as f64 >= t {
            e.1 += 1;
        }
    }
    let components = in_edges
        .into_iter()
        .filter(|(_, (all, ok))| all == ok)
        .map(|(c, _)| c.to_string())
        .collect();
    (pairs, components)
}

fn attempt_seeds(base: u64, category: usize, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base ^ ((category as u64 + 1) << 48));
    (0..count).map(|_| rng.random()).collect()
}

fn choose_spec(
    category: IncidentCategory,
    seed: u64,
    n: usize,
    pairs: &[OrderedPair],
    components: &[String],
    fraction: f64,
) -> Option<SimulationSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = match category {
        IncidentCategory::ComponentDown => Target::Component(components.choose(&mut rng)?.clone()),
        _ => Target::Pair(pairs.choose(&mut rng)?.clone()),
    };
    Some(SimulationSpec {
        category,
        target,
        mutation_fraction: fraction,
        seed: rng.random(),
        before_size: n,
        incident_size: n,
        fallback: None,
    })
}

fn contained(full: &DiffSet, twos: &[&DiffSet], diff: &DiffSet) -> bool {
    twos.iter().all(|two| full.is_subset(two) && two.is_subset(diff))
}

struct Evaluated {
    record: RunRecord,
    timings: Vec<TimingRow>,
}

fn evaluate(sim: &SimulatedIncident, cfg: &CampaignConfig, gcfg: &GuaranteeConfig) -> Evaluated {
    let spec = &sim.spec;
    let mut record = RunRecord {
        category: spec.category,
        seed: spec.seed,
        target: Some(spec.target.clone()),
        expected: sim.expected.clone(),
        visible: sim.visible,
        mutated_in_sample: sim.mutated_in_sample,
        methods: Vec::new(),
        ablation: BTreeMap::new(),
        ablation_contained: None,
        error: None,
    };
    let mut timings = Vec::new();
    if !sim.visible {
        return Evaluated { record, timings };
    }
    for &method in &cfg.methods {
        let mut run = MethodRun {
            method,
            grade: None,
            answer: DiffSet::default(),
            input_pairs: 0,
            pair_tests: 0,
            traces_examined: 0,
            comparisons: None,
            error: None,
        };
        let outcome = match method.baseline() {
            None => run_stages(
                &sim.before,
                &sim.incident,
                &sim.before_stats,
                &sim.incident_stats,
                gcfg,
                StageSelection::FULL,
            )
            .map(|r| (r, None))
            .map_err(|e| e.to_string()),
            Some(kind) => baseline_localize(kind, &sim.before, &sim.incident)
                .map(|b| {
                    let successes = sim.before.count_label(Label::Success) as u64;
                    let failures = sim.incident.count_label(Label::Failure) as u64;
                    (b.result, Some((b.matched.comparisons, successes, failures)))
                })
                .map_err(|e| e.to_string()),
        };
        match outcome {
            Ok((result, comparisons)) => {
                run.grade = Some(grade(result.answer(), &sim.expected));
                run.answer = result.answer().clone();
                run.input_pairs = result.counters.input_pairs;
                run.pair_tests = result.counters.pair_tests;
                run.traces_examined = result.counters.traces_examined;
                run.comparisons = comparisons;
                timings.push(TimingRow {
                    category: spec.category,
                    seed: spec.seed,
                    method,
                    diff_us: result.timings.diff_us,
                    threshold_us: result.timings.threshold_us,
                    reachability_us: result.timings.reachability_us,
                    total_us: result.timings.total_us(),
                });
                if method == Method::Act && cfg.ablations {
                    let diff = &result.stages.after_diff;
                    let thr = result.stages.after_threshold.as_ref().expect("full run");
                    let full = result.answer();
                    let sets = ablation_sets();
                    let reach_only = stage_selection(&sets[2]).expect("diff included");
                    match run_stages(
                        &sim.before,
                        &sim.incident,
                        &sim.before_stats,
                        &sim.incident_stats,
                        gcfg,
                        reach_only,
                    ) {
                        Ok(r) => {
                            let reach = r.answer();
                            for (set, size) in sets.iter().zip([diff.len(), thr.len(), reach.len(), full.len()]) {
                                record.ablation.insert(technique_label(set), size);
                            }
                            record.ablation_contained = Some(contained(full, &[thr, reach], diff));
                        }
                        Err(e) => record.error = Some(e.to_string()),
                    }
                }
            }
            Err(e) => run.error = Some(e),
        }
        record.methods.push(run);
    }
    Evaluated { record, timings }
}

/// Runs simulated incidents against every configured method.
///
/// Per category, attempts are drawn from a seeded stream until
/// `runs_per_category` visible incidents are collected or the attempt cap is
/// hit. Invisible incidents and per-run errors are counted, never fatal.
pub fn run_campaign(corpus: &TraceSet, cfg: &CampaignConfig) -> Result<CampaignOutcome, EvalError> {
    let clock = Instant::now();
    validate_guarantee(cfg.guarantee)?;
    let stats = CorpusStats::build(corpus);
    let labeled = corpus.len() - corpus.count_label(Label::Unlabeled);
    let n = match cfg.sample_size {
        SampleSizePolicy::Fixed(n) => n,
        SampleSizePolicy::Auto { coverage } if cfg.runs_per_category > 0 => {
            min_sample_size(&stats, coverage, cfg.guarantee)?
        }
        SampleSizePolicy::Auto { .. } => 1,
    };
    if n == 0 {
        return Err(StatsError::ZeroSampleSize.into());
    }
    if cfg.runs_per_category > 0 && 2 * n > labeled {
        return Err(SimulationError::InsufficientCorpus {
            available: labeled,
            requested: 2 * n,
        }
        .into());
    }
    let gcfg = GuaranteeConfig::new(cfg.guarantee, n)?;
    let (pairs, components) = detectable_targets(&stats, n, cfg.guarantee);

    let mut records: Vec<RunRecord> = Vec::new();
    let mut timing_rows = Vec::new();
    let mut attempted = 0;
    for (ci, &category) in cfg.categories.iter().enumerate() {
        let cap = cfg.runs_per_category * cfg.max_attempts_factor.max(1);
        let seeds = attempt_seeds(cfg.seed, ci, cap);
        let mut visible = 0;
        let mut next = 0;
        while visible < cfg.runs_per_category && next < seeds.len() {
            let batch = &seeds[next..(next + cfg.runs_per_category - visible).min(seeds.len())];
            next += batch.len();
            let results: Vec<Evaluated> = batch
                .par_iter()
                .map(
                    |&seed| match choose_spec(category, seed, n, &pairs, &components, cfg.mutation_fraction) {
                        None => Evaluated {
                            record: error_record(category, seed, "no detectable target".into()),
                            timings: Vec::new(),
                        },
                        Some(spec) => match simulate_incident_with_stats(corpus, &stats, &spec) {
                            Ok(sim) => evaluate(&sim, cfg, &gcfg),
                            Err(e) => Evaluated {
                                record: error_record(category, spec.seed, e.to_string()),
                                timings: Vec::new(),
                            },
                        },
                    },
                )
                .collect();
            for r in results {
                attempted += 1;
                if r.record.visible {
                    visible += 1;
                }
                records.push(r.record);
                timing_rows.extend(r.timings);
            }
        }
    }
    let report = summarize(
        cfg.clone(),
        CorpusSummary::of(corpus, &stats),
        n,
        stats.threshold(n, cfg.guarantee),
        attempted,
        records,
    );
    Ok(CampaignOutcome {
        report,
        timing: TimingReport {
            rows: timing_rows,
            wall_clock_ms: clock.elapsed().as_millis() as u64,
        },
    })
}

fn error_record(category: IncidentCategory, seed: u64, error: String) -> RunRecord {
    RunRecord {
        category,
        seed,
        target: None,
        expected: ExpectedAnswer::default(),
        visible: false,
        mutated_in_sample: 0,
        methods: Vec::new(),
        ablation: BTreeMap::new(),
        ablation_contained: None,
        error: Some(error),
    }
}

fn summarize(
    config: CampaignConfig,
    corpus: CorpusSummary,
    n: usize,
    threshold: f64,
    attempted: usize,
    runs: Vec<RunRecord>,
) -> CampaignReport {
    let visible = runs.iter().filter(|r| r.visible).count();
    let errors = runs.iter().filter(|r| r.error.is_some()).count();
    let mut summary = Vec::new();
    let mut result_sizes: BTreeMap<Method, Vec<usize>> = BTreeMap::new();
    for &method in &config.methods {
        let mut per_cat: BTreeMap<String, GradeCounts> = BTreeMap::new();
        let mut all = GradeCounts::default();
        let sizes = result_sizes.entry(method).or_default();
        for r in runs.iter().filter(|r| r.visible) {
            if let Some(m) = r.methods.iter().find(|m| m.method == method) {
                per_cat.entry(r.category.name().to_string()).or_default().add(m.grade);
                all.add(m.grade);
                if m.grade.is_some_and(|g| g != Grade::Exact) {
                    sizes.push(m.answer.len());
                }
            }
        }
        sizes.sort_unstable();
        for (category, counts) in per_cat.into_iter().chain([("all".to_string(), all)]) {
            summary.push(SummaryRow {
                method,
                category,
                exact_pct: counts.pct(Grade::Exact),
                superfluous_pct: counts.pct(Grade::Superfluous),
                wrong_pct: counts.pct(Grade::Wrong),
                no_answer_pct: counts.pct(Grade::NoAnswer),
                counts,
            });
        }
    }
    let mut ablation = Vec::new();
    if config.ablations {
        for set in ablation_sets() {
            let label = technique_label(&set);
            let sizes: Vec<usize> = runs.iter().filter_map(|r| r.ablation.get(&label).copied()).collect();
            let mean_size = if sizes.is_empty() {
                0.0
            } else {
                sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
            };
            ablation.push(AblationRow {
                techniques: label,
                runs: sizes.len(),
                mean_size,
            });
        }
    }
    CampaignReport {
        config,
        corpus,
        sample_size: n,
        threshold,
        attempted,
        visible,
        invisible: attempted - visible,
        errors,
        summary,
        result_sizes,
        ablation,
        runs,
    }
}

fn cdf_rows(values: &[u64]) -> Vec<(u64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut out: Vec<(u64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let y = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = y,
            _ => out.push((*v, y)),
        }
    }
    out
}

impl CampaignReport {
    pub fn summary_row(&self, method: Method, category: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.method == method && r.category == category)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `results.csv`: one row per method and category, grade counts and percentages.
    pub fn write_results_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "method",
            "category",
            "exact",
            "superfluous",
            "wrong",
            "no_answer",
            "errors",
            "exact_pct",
            "superfluous_pct",
            "wrong_pct",
            "no_answer_pct",
        ])?;
        for r in &self.summary {
            let c = &r.counts;
            w.write_record([
                r.method.name().to_string(),
                r.category.clone(),
                c.exact.to_string(),
                c.superfluous.to_string(),
                c.wrong.to_string(),
                c.no_answer.to_string(),
                c.errors.to_string(),
                format!("{:.2}", r.exact_pct),
                format!("{:.2}", r.superfluous_pct),
                format!("{:.2}", r.wrong_pct),
                format!("{:.2}", r.no_answer_pct),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `result_size_cdf.csv`: result sizes of non-exact answers.
    pub fn write_size_cdf_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "x", "y"])?;
        for (method, sizes) in &self.result_sizes {
            let values: Vec<u64> = sizes.iter().map(|&s| s as u64).collect();
            for (x, y) in cdf_rows(&values) {
                w.write_record([method.name().to_string(), x.to_string(), format!("{y:.6}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `ablation.csv`: mean result size per technique set.
    pub fn write_ablation_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["techniques", "runs", "mean_size"])?;
        for r in &self.ablation {
            w.write_record([r.techniques.clone(), r.runs.to_string(), format!("{:.4}", r.mean_size)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `report.json` and the CSV tables into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<(), EvalError> {
        std::fs::create_dir_all(dir).map_err(crate::error::IngestError::from)?;
        let file = |name: &str| std::fs::File::create(dir.join(name)).map_err(crate::error::IngestError::from);
        std::fs::write(dir.join("report.json"), self.to_json()).map_err(crate::error::IngestError::from)?;
        self.write_results_csv(file("results.csv")?)
            .map_err(crate::error::IngestError::from)?;
        self.write_size_cdf_csv(file("result_size_cdf.csv")?)
            .map_err(crate::error::IngestError::from)?;
        self.write_ablation_csv(file("ablation.csv")?)
            .map_err(crate::error::IngestError::from)?;
        Ok(())
    }
}

impl TimingReport {
    /// `time_cdf.csv`: total time per method in microseconds.
    pub fn write_time_cdf_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "x", "y"])?;
        for method in Method::ALL {
            let values: Vec<u64> = self
                .rows
                .iter()
                .filter(|r| r.method == method)
                .map(|r| r.total_us)
                .collect();
            for (x, y) in cdf_rows(&values) {
                w.write_record([method.name().to_string(), x.to_string(), format!("{y:.6}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Median wall-clock per method at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub sample_size: usize,
    pub method: Method,
    pub median_us: f64,
    pub runs: usize,
}

/// Times each method on the same simulated incidents at several sample sizes.
pub fn scaling_probe(
    corpus: &TraceSet,
    sizes: &[usize],
    runs_per_size: usize,
    seed: u64,
    g: f64,
) -> Result<Vec<ScalingPoint>, EvalError> {
    let stats = CorpusStats::build(corpus);
    let smallest = *sizes.iter().min().ok_or(StatsError::ZeroSampleSize)?;
    let (pairs, components) = detectable_targets(&stats, smallest, g);
    let mut out = Vec::new();
    for &n in sizes {
        let gcfg = GuaranteeConfig::new(g, n)?;
        let mut times: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
        let seeds = attempt_seeds(seed, 0, runs_per_size * 3);
        let mut done = 0;
        for (i, &s) in seeds.iter().enumerate() {
            if done == runs_per_size {
                break;
            }
            let category = IncidentCategory::ALL[i % 3];
            let Some(spec) = choose_spec(category, s, n, &pairs, &components, 1.0) else {
                continue;
            };
            let Ok(sim) = simulate_incident_with_stats(corpus, &stats, &spec) else {
                continue;
            };
            if !sim.visible {
                continue;
            }
            done += 1;
            let start = Instant::now();
            run_stages(
                &sim.before,
                &sim.incident,
                &sim.before_stats,
                &sim.incident_stats,
                &gcfg,
                StageSelection::FULL,
            )?;
            times
                .entry(Method::Act)
                .or_default()
                .push(start.elapsed().as_secs_f64() * 1e6);
            for kind in BaselineKind::ALL {
                let start = Instant::now();
                let _ = baseline_localize(kind, &sim.before, &sim.incident);
                let method = match kind {
                    BaselineKind::NodeCount => Method::NodeCount,
                    BaselineKind::EdgeCount => Method::EdgeCount,
                };
                times
                    .entry(method)
                    .or_default()
                    .push(start.elapsed().as_secs_f64() * 1e6);
            }
        }
        for (method, mut ts) in times {
            ts.sort_by(f64::total_cmp);
            out.push(ScalingPoint {
                sample_size: n,
                method,
                median_us: ts[ts.len() / 2],
                runs: ts.len(),
            });
        }
    }
    Ok(out)
}

/// Least-squares slope of `log(median)` against `log(sample size)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
