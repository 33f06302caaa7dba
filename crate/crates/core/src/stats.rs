//! Ordered-pair frequency statistics and the sampling threshold.
//!
//! For a corpus of `N` traces in which a pair occurs in `f` traces, the
//! probability that a uniform sample of `n` traces misses the pair entirely is
//! `(1 - f/N)^n`. The threshold is the frequency at which that miss
//! probability equals `1 - g`:
//!
//! ```text
//! t = N * (1 - exp(ln(1 - g) / n))
//! ```
//!
//! A pair with `f >= t` shows up in a sample of size `n` with probability at
//! least `g`, so its presence or absence in the sample is meaningful.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::ingest::{TraceSet, Window};
use crate::model::{OrderedPair, Trace};

/// Guarantee used when none is given.
pub const DEFAULT_GUARANTEE: f64 = 0.99;

/// Probability guarantee and planned sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeConfig {
    pub guarantee: f64,
    pub sample_size: usize,
}

impl GuaranteeConfig {
    pub fn new(guarantee: f64, sample_size: usize) -> Result<Self, StatsError> {
        validate_guarantee(guarantee)?;
        if sample_size == 0 {
            return Err(StatsError::ZeroSampleSize);
        }
        Ok(GuaranteeConfig { guarantee, sample_size })
    }

    pub fn with_default_guarantee(sample_size: usize) -> Result<Self, StatsError> {
        Self::new(DEFAULT_GUARANTEE, sample_size)
    }
}

pub fn validate_guarantee(g: f64) -> Result<(), StatsError> {
    if g > 0.0 && g < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidGuarantee(g))
    }
}

/// Minimum corpus frequency for a pair to be retained.
///
/// # Panics
///
/// If `corpus_size` or `sample_size` is zero, or `guarantee` is outside (0, 1).
pub fn threshold(corpus_size: usize, sample_size: usize, guarantee: f64) -> f64 {
    assert!(corpus_size >= 1 && sample_size >= 1, "sizes must be positive");
    assert!(guarantee > 0.0 && guarantee < 1.0, "guarantee must lie in (0, 1)");
    // 1 - e^x computed as -expm1(x) keeps precision when x is tiny.
    let exponent = (-guarantee).ln_1p() / sample_size as f64;
    corpus_size as f64 * -exponent.exp_m1()
}

/// Smallest sample size whose threshold admits a pair of frequency `freq`.
/// `None` when even `n = corpus_size` is not enough.
pub fn sample_size_for_frequency(corpus_size: usize, freq: usize, guarantee: f64) -> Option<usize> {
    if freq == 0 || corpus_size == 0 {
        return None;
    }
    if freq >= corpus_size {
        return Some(1);
    }
    let p = freq as f64 / corpus_size as f64;
    let estimate = ((-guarantee).ln_1p() / (-p).ln_1p()).ceil().max(1.0) as usize;
    // Settle rounding at the boundary against the forward formula.
    let mut n = estimate.saturating_sub(2).max(1);
    while n <= corpus_size {
        if freq as f64 >= threshold(corpus_size, n, guarantee) {
            return Some(n);
        }
        n += 1;
    }
    None
}

/// Per-window frequency map: pair -> number of traces containing it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    window: Option<Window>,
    total: usize,
    freq: BTreeMap<OrderedPair, usize>,
}

impl CorpusStats {
    pub fn build(set: &TraceSet) -> Self {
        let mut acc = StatsAccumulator::default();
        for t in set.iter() {
            acc.add(t);
        }
        acc.finish(set.window())
    }

    pub fn from_parts(window: Option<Window>, total: usize, freq: BTreeMap<OrderedPair, usize>) -> Self {
        let freq = freq.into_iter().filter(|(_, f)| *f > 0).collect();
        CorpusStats { window, total, freq }
    }

    pub fn window(&self) -> Option<Window> {
        self.window
    }

    /// Corpus size `N`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn freq(&self, pair: &OrderedPair) -> usize {
        self.freq.get(pair).copied().unwrap_or(0)
    }

    pub fn frequencies(&self) -> &BTreeMap<OrderedPair, usize> {
        &self.freq
    }

    pub fn pair_count(&self) -> usize {
        self.freq.len()
    }

    /// Threshold for this corpus at sample size `n` and guarantee `g`.
    pub fn threshold(&self, n: usize, g: f64) -> f64 {
        threshold(self.total.max(1), n, g)
    }

    /// Replaces the contribution of `before` with that of `after`.
    pub fn replace_trace(&mut self, before: &Trace, after: &Trace) {
        for pair in before.view().iter() {
            if let Some(f) = self.freq.get_mut(pair) {
                *f -= 1;
                if *f == 0 {
                    self.freq.remove(pair);
                }
            }
        }
        for pair in after.view().iter() {
            *self.freq.entry(pair.clone()).or_insert(0) += 1;
        }
    }

    /// Writes `source,target,freq` rows sorted by pair, after a `#` header
    /// line carrying `N` and the window.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), crate::error::IngestError> {
        let (ws, we) = self
            .window
            .map(|w| (w.start_us.to_string(), w.end_us.to_string()))
            .unwrap_or_default();
        writeln!(out, "#N={},window_start={},window_end={}", self.total, ws, we)?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["source", "target", "freq"])?;
        for (pair, f) in &self.freq {
            writer.write_record([pair.source.as_str(), pair.target.as_str(), &f.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, StatsError> {
        let mut text = String::new();
        let mut input = input;
        input
            .read_to_string(&mut text)
            .map_err(|e| StatsError::Malformed(e.to_string()))?;
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| StatsError::Malformed("missing header".into()))?;
        let fields: HashMap<&str, &str> = header
            .trim_start_matches('#')
            .trim()
            .split(',')
            .filter_map(|kv| kv.split_once('='))
            .collect();
        let total = fields
            .get("N")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| StatsError::Malformed("header lacks N".into()))?;
        let window = match (fields.get("window_start"), fields.get("window_end")) {
            (Some(s), Some(e)) if !s.is_empty() && !e.is_empty() => Some(Window {
                start_us: s
                    .parse()
                    .map_err(|_| StatsError::Malformed("bad window_start".into()))?,
                end_us: e.parse().map_err(|_| StatsError::Malformed("bad window_end".into()))?,
            }),
            _ => None,
        };
        let mut freq = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        for row in reader.records() {
            let row = row.map_err(|e| StatsError::Malformed(e.to_string()))?;
            let f: usize = row
                .get(2)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| StatsError::Malformed("bad freq column".into()))?;
            if f > total {
                return Err(StatsError::Malformed(format!("frequency {f} exceeds N = {total}")));
            }
            freq.insert(OrderedPair::new(&row[0], &row[1]), f);
        }
        Ok(CorpusStats::from_parts(window, total, freq))
    }
}

/// Incremental builder; partial accumulators can be merged.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    total: usize,
    freq: HashMap<OrderedPair, usize>,
}

impl StatsAccumulator {
    pub fn add(&mut self, trace: &Trace) {
        self.total += 1;
        for pair in trace.view().iter() {
            *self.freq.entry(pair.clone()).or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: StatsAccumulator) {
        self.total += other.total;
        for (pair, f) in other.freq {
            *self.freq.entry(pair).or_insert(0) += f;
        }
    }

    pub fn finish(self, window: Option<Window>) -> CorpusStats {
        CorpusStats::from_parts(window, self.total, self.freq.into_iter().collect())
    }
}

/// Fraction of recorded pairs whose frequency reaches the threshold at `n`.
pub fn coverage(stats: &CorpusStats, n: usize, g: f64) -> f64 {
    if stats.pair_count() == 0 || stats.total() == 0 {
        return 0.0;
    }
    let t = stats.threshold(n, g);
    let covered = stats.frequencies().values().filter(|&&f| f as f64 >= t).count();
    covered as f64 / stats.pair_count() as f64
}

/// Smallest `n` in `[1, N]` with `coverage(n) >= target`.
pub fn min_sample_size(stats: &CorpusStats, target: f64, g: f64) -> Result<usize, StatsError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(StatsError::InvalidTarget(target));
    }
    validate_guarantee(g)?;
    let n_max = stats.total();
    let best = if n_max == 0 { 0.0 } else { coverage(stats, n_max, g) };
    if best < target {
        return Err(StatsError::InsufficientCorpus {
            target,
            best,
            corpus_size: n_max,
        });
    }
    let (mut lo, mut hi) = (1, n_max);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if coverage(stats, mid, g) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// A point on the coverage CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub sample_size: usize,
    pub coverage: f64,
}

/// Coverage at the sample sizes where it changes, plus `n = N`.
pub fn coverage_curve(stats: &CorpusStats, g: f64) -> Vec<CoveragePoint> {
    let n_max = stats.total();
    if n_max == 0 {
        return Vec::new();
    }
    let mut sizes: Vec<usize> = stats
        .frequencies()
        .values()
        .filter_map(|&f| sample_size_for_frequency(n_max, f, g))
        .collect();
    sizes.push(n_max);
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| CoveragePoint {
            sample_size: n,
            coverage: coverage(stats, n, g),
        })
        .collect()
}
