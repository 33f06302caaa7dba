//! `act`: batch front end for ingestion, statistics, localization, simulation
//! and evaluation, plus the HTTP service.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use act_core::baselines::{baseline_localize, BaselineKind};
use act_core::eval::synth::{generate, SynthConfig};
use act_core::eval::{run_campaign, CampaignConfig, CorpusSource};
use act_core::simulator::{simulate_incident, SimulationSpec};
use act_core::stats::{coverage, min_sample_size};
use act_core::store::{Store, DEFAULT_SHARD_SIZE};
use act_core::{
    localize, parse_traces, sample, CorpusStats, Format, GuaranteeConfig, LabelCriterion, TraceSet, Window,
};
use act_service::{incident_seed, AppState};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "act", version, about = "Localize incidents by comparing trace sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Jsonl,
    Jaeger,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Node,
    Edge,
}

#[derive(Subcommand)]
enum Command {
    /// Parse traces and write them into a store.
    Ingest {
        #[arg(long, value_enum, default_value = "jsonl")]
        format: InputFormat,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
        shard_size: usize,
        /// Input files; standard input when none are given.
        inputs: Vec<PathBuf>,
    },
    /// Build or inspect per-pair frequency statistics.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
    /// Run the three-stage pipeline on two stores.
    Localize {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        incident: PathBuf,
        /// Incident start (microseconds). Before traces must start earlier,
        /// incident traces at or after it.
        #[arg(long)]
        since: Option<i64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.99)]
        g: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Label criterion as JSON; status codes when absent.
        #[arg(long)]
        criterion: Option<PathBuf>,
        /// Precomputed statistics CSV; built from the before store otherwise.
        #[arg(long)]
        stats_before: Option<PathBuf>,
        #[arg(long)]
        stats_incident: Option<PathBuf>,
    },
    /// Inject an incident into a corpus and write the two samples.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closest-pair baseline over count vectors.
    Baseline {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        incident: PathBuf,
        #[arg(long)]
        since: Option<i64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        criterion: Option<PathBuf>,
    },
    /// Run an evaluation campaign and write its report tables.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "campaign-report")]
        out: PathBuf,
    },
    /// Generate a synthetic corpus into a store.
    Generate {
        /// shallow-wide or deep-narrow.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Generator configuration as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        traces: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
        shard_size: usize,
    },
    /// Serve the HTTP API over a store.
    Serve {
        #[arg(long, env = "ACT_STORE")]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Where simulated incidents are kept; `<store>/scratch` by default.
        #[arg(long)]
        scratch: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Count, per ordered pair, the traces whose view contains it.
    Build {
        #[arg(long)]
        store: PathBuf,
        /// `start_us,end_us`, inclusive.
        #[arg(long)]
        window: Option<String>,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a statistics CSV.
    Inspect {
        file: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.99)]
        g: f64,
        /// Most frequent pairs to list.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn criterion(path: &Option<PathBuf>) -> Result<LabelCriterion> {
    path.as_deref()
        .map(read_json)
        .transpose()
        .map(Option::unwrap_or_default)
}

fn parse_window(raw: &str) -> Result<Window> {
    let (s, e) = raw.split_once(',').context("window must be start_us,end_us")?;
    Ok(Window {
        start_us: s.trim().parse()?,
        end_us: e.trim().parse()?,
    })
}

fn read_stats(path: &Path) -> Result<CorpusStats> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    CorpusStats::read_csv(file).with_context(|| format!("cannot read {}", path.display()))
}

/// Loads the before and incident sets; `since` splits them in time.
fn load_pair(before: &Path, incident: &Path, since: Option<i64>, c: &LabelCriterion) -> Result<(TraceSet, TraceSet)> {
    let open = |p: &Path| Store::open(p).with_context(|| format!("cannot open store {}", p.display()));
    let (b, i) = (open(before)?, open(incident)?);
    Ok(match since {
        None => (b.load_all(c)?, i.load_all(c)?),
        Some(t) => {
            let before_w = Window {
                start_us: i64::MIN,
                end_us: t - 1,
            };
            let incident_w = Window {
                start_us: t,
                end_us: i64::MAX,
            };
            (b.load_window(before_w, c)?, i.load_window(incident_w, c)?)
        }
    })
}

fn ingest(format: InputFormat, out: &Path, shard_size: usize, inputs: &[PathBuf]) -> Result<()> {
    let format = match format {
        InputFormat::Jsonl => Format::Jsonl,
        InputFormat::Jaeger => Format::Jaeger,
    };
    let mut traces = Vec::new();
    let mut skipped = 0;
    let mut parse = |reader: Box<dyn BufRead>, name: &str| -> Result<()> {
        let parsed = parse_traces(reader, format, name)?;
        for e in &parsed.errors {
            eprintln!("{name}:{}: {}", e.line, e.message);
        }
        skipped += parsed.skipped();
        traces.extend(parsed.set.traces().iter().cloned());
        Ok(())
    };
    if inputs.is_empty() {
        parse(Box::new(std::io::stdin().lock()), "stdin")?;
    }
    for path in inputs {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        parse(Box::new(BufReader::new(file)), &path.display().to_string())?;
    }
    let store = Store::create(out, traces.iter().map(|t| t.as_ref()), shard_size)?;
    println!(
        "ingested {} traces into {} shards, skipped {skipped} records",
        store.manifest().total(),
        store.manifest().shards.len()
    );
    Ok(())
}

fn stats_build(store: &Path, window: Option<&str>, out: Option<&Path>) -> Result<()> {
    let store = Store::open(store)?;
    let c = LabelCriterion::default();
    let set = match window {
        Some(w) => store.load_window(parse_window(w)?, &c)?,
        None => store.load_all(&c)?,
    };
    let stats = CorpusStats::build(&set);
    match out {
        Some(p) => stats.write_csv(BufWriter::new(File::create(p)?))?,
        None => stats.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

fn stats_inspect(file: &Path, n: Option<usize>, g: f64, top: usize) -> Result<()> {
    let stats = read_stats(file)?;
    println!("N       {}", stats.total());
    if let Some(w) = stats.window() {
        println!("window  {},{}", w.start_us, w.end_us);
    }
    println!("pairs   {}", stats.pair_count());
    if let Some(n) = n {
        let t = stats.threshold(n, g);
        println!(
            "n = {n}, g = {g}: threshold {t:.4}, coverage {:.4}",
            coverage(&stats, n, g)
        );
    }
    for target in [0.5, 0.8, 0.9] {
        match min_sample_size(&stats, target, g) {
            Ok(m) => println!("coverage {target} from n = {m}"),
            Err(e) => println!("coverage {target}: {e}"),
        }
    }
    let mut by_freq: Vec<_> = stats.frequencies().iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (pair, f) in by_freq.into_iter().take(top) {
        println!("{f:>10}  {pair}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn localize_cmd(
    before: &Path,
    incident: &Path,
    since: Option<i64>,
    n: usize,
    g: f64,
    seed: u64,
    c: &LabelCriterion,
    stats_before: Option<&Path>,
    stats_incident: Option<&Path>,
) -> Result<()> {
    let (b, i) = load_pair(before, incident, since, c)?;
    let sb = stats_before
        .map(read_stats)
        .transpose()?
        .unwrap_or_else(|| CorpusStats::build(&b));
    let si = stats_incident
        .map(read_stats)
        .transpose()?
        .unwrap_or_else(|| CorpusStats::build(&i));
    let cfg = GuaranteeConfig::new(g, n)?;
    let mut r = localize(
        &sample(&b, n, seed)?,
        &sample(&i, n, incident_seed(seed))?,
        &sb,
        &si,
        &cfg,
    )?;
    r.config.seed = Some(seed);
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}

fn simulate_cmd(spec: &Path, corpus: &Path, out: &Path) -> Result<()> {
    let spec: SimulationSpec = read_json(spec)?;
    let corpus = Store::open(corpus)?.load_all(&LabelCriterion::default())?;
    let run = simulate_incident(&corpus, &spec)?;
    std::fs::create_dir_all(out)?;
    Store::create(out.join("before"), run.before.iter(), DEFAULT_SHARD_SIZE)?;
    Store::create(out.join("incident"), run.incident.iter(), DEFAULT_SHARD_SIZE)?;
    run.before_stats
        .write_csv(BufWriter::new(File::create(out.join("before_stats.csv"))?))?;
    run.incident_stats
        .write_csv(BufWriter::new(File::create(out.join("incident_stats.csv"))?))?;
    write_json(&out.join("spec.json"), &spec)?;
    write_json(&out.join("expected.json"), &run.expected)?;
    println!(
        "{}: mutated {} of {} eligible sampled traces, visible {}",
        spec.category.name(),
        run.mutated_in_sample,
        run.eligible_in_sample,
        run.visible
    );
    if let Some(a) = &run.advisory {
        println!("{a}");
    }
    Ok(())
}

fn baseline_cmd(
    kind: KindArg,
    before: &Path,
    incident: &Path,
    since: Option<i64>,
    n: usize,
    seed: u64,
    c: &LabelCriterion,
) -> Result<()> {
    let kind = match kind {
        KindArg::Node => BaselineKind::NodeCount,
        KindArg::Edge => BaselineKind::EdgeCount,
    };
    let (b, i) = load_pair(before, incident, since, c)?;
    let r = baseline_localize(kind, &sample(&b, n, seed)?, &sample(&i, n, incident_seed(seed))?)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}

fn campaign_cmd(config: &Path, out: &Path) -> Result<()> {
    let cfg: CampaignConfig = read_json(config)?;
    let corpus = match cfg
        .corpus
        .clone()
        .unwrap_or(CorpusSource::Preset("shallow-wide".into()))
    {
        CorpusSource::Synthetic(s) => generate(&s),
        CorpusSource::Preset(name) => {
            generate(&SynthConfig::preset(&name).with_context(|| format!("unknown preset {name}"))?)
        }
        CorpusSource::Store(p) => Store::open(&p)?.load_all(&LabelCriterion::default())?,
    };
    let outcome = run_campaign(&corpus, &cfg)?;
    std::fs::create_dir_all(out)?;
    outcome.report.write_all(out)?;
    outcome
        .timing
        .write_time_cdf_csv(BufWriter::new(File::create(out.join("time_cdf.csv"))?))?;
    let r = &outcome.report;
    println!(
        "n = {}, {} graded of {} attempted",
        r.sample_size, r.visible, r.attempted
    );
    for row in r.summary.iter().filter(|s| s.category == "all") {
        println!(
            "{:<10} exact {:>6.2}%  superfluous {:>6.2}%  wrong {:>6.2}%  no answer {:>6.2}%",
            row.method.name(),
            row.exact_pct,
            row.superfluous_pct,
            row.wrong_pct,
            row.no_answer_pct
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn generate_cmd(
    preset: Option<&str>,
    config: Option<&Path>,
    traces: Option<usize>,
    out: &Path,
    shard: usize,
) -> Result<()> {
    let mut cfg = match (preset, config) {
        (_, Some(p)) => read_json::<SynthConfig>(p)?,
        (Some(name), None) => SynthConfig::preset(name).with_context(|| format!("unknown preset {name}"))?,
        (None, None) => SynthConfig::shallow_wide(),
    };
    if let Some(t) = traces {
        cfg.traces = t;
    }
    let corpus = generate(&cfg);
    let store = Store::create(out, corpus.iter(), shard)?;
    println!(
        "wrote {} traces in {} shards",
        store.manifest().total(),
        store.manifest().shards.len()
    );
    Ok(())
}

fn serve_cmd(store: &Path, host: std::net::IpAddr, port: u16, scratch: Option<PathBuf>) -> Result<()> {
    let scratch = scratch.unwrap_or_else(|| store.join("scratch"));
    let state = AppState::open(store, scratch).with_context(|| format!("cannot load store {}", store.display()))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(act_service::serve(state, SocketAddr::new(host, port)))?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest {
            format,
            out,
            shard_size,
            inputs,
        } => ingest(format, &out, shard_size, &inputs),
        Command::Stats { command } => match command {
            StatsCommand::Build { store, window, out } => stats_build(&store, window.as_deref(), out.as_deref()),
            StatsCommand::Inspect { file, n, g, top } => stats_inspect(&file, n, g, top),
        },
        Command::Localize {
            before,
            incident,
            since,
            n,
            g,
            seed,
            criterion: c,
            stats_before,
            stats_incident,
        } => localize_cmd(
            &before,
            &incident,
            since,
            n,
            g,
            seed,
            &criterion(&c)?,
            stats_before.as_deref(),
            stats_incident.as_deref(),
        ),
        Command::Simulate { spec, corpus, out } => simulate_cmd(&spec, &corpus, &out),
        Command::Baseline {
            kind,
            before,
            incident,
            since,
            n,
            seed,
            criterion: c,
        } => baseline_cmd(kind, &before, &incident, since, n, seed, &criterion(&c)?),
        Command::Campaign { config, out } => campaign_cmd(&config, &out),
        Command::Generate {
            preset,
            config,
            traces,
            out,
            shard_size,
        } => generate_cmd(preset.as_deref(), config.as_deref(), traces, &out, shard_size),
        Command::Serve {
            store,
            port,
            host,
            scratch,
        } => {
            if !store.join(act_core::store::MANIFEST).is_file() {
                bail!("{} is not a trace store (no manifest)", store.display());
            }
            serve_cmd(&store, host, port, scratch)
        }
    }
}
