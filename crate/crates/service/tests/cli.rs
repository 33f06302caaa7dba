use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use act_core::baselines::BaselineResult;
use act_core::fixtures::{running_example, shop_corpus, shop_rare_pair, shop_unreachable_spec};
use act_core::store::Store;
use act_core::{CorpusStats, LocalizationResult, OrderedPair};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");

fn act(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_act")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "act {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(FIXTURES).join(rel)
}

#[test]
fn ingest_stats_and_localize_the_running_example() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let before = fixture("running_example/before.jsonl");
    let incident = fixture("running_example/incident.jsonl");
    let out = act(&[
        "ingest",
        "--format",
        "jsonl",
        "--out",
        s(&store),
        s(&before),
        s(&incident),
    ]);
    assert!(stdout(&out).contains("ingested 80 traces"), "{}", stdout(&out));

    let csv = dir.path().join("stats.csv");
    act(&["stats", "build", "--store", s(&store), "--out", s(&csv)]);
    let stats = CorpusStats::read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(stats.total(), 80);
    let inspect = stdout(&act(&["stats", "inspect", s(&csv), "--n", "40", "--top", "3"]));
    assert!(inspect.starts_with("N       80\n"), "{inspect}");
    assert!(inspect.contains("threshold"));

    let fx = running_example();
    let since = fx.incident.window().unwrap().start_us.to_string();
    let out = act(&[
        "localize",
        "--before",
        s(&store),
        "--incident",
        s(&store),
        "--since",
        &since,
        "--n",
        "40",
        "--g",
        "0.99",
    ]);
    let r: LocalizationResult = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(*r.answer(), fx.expected.as_diff());
    assert_eq!(r.config.seed, Some(0));
}

#[test]
fn ingest_jaeger_and_report_bad_records() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("jaeger");
    let out = act(&[
        "ingest",
        "--format",
        "jaeger",
        "--out",
        s(&store),
        s(&fixture("jaeger/checkout.json")),
    ]);
    assert!(stdout(&out).contains("ingested 3 traces"));
    assert_eq!(Store::open(&store).unwrap().manifest().total(), 3);

    let good = act_core::fixtures::RUNNING_EXAMPLE_BEFORE_JSONL.lines().next().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_act"))
        .args(["ingest", "--out", s(&dir.path().join("stdin"))])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    write!(child.stdin.take().unwrap(), "{good}\n{{broken\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("ingested 1 traces"));
    assert!(stdout(&out).contains("skipped 1 records"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stdin:2:"));
}

#[test]
fn simulate_then_localize_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("shop");
    Store::create(&corpus, shop_corpus().iter(), 2_500).unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, serde_json::to_vec(&shop_unreachable_spec(4000, 3)).unwrap()).unwrap();
    let sim = dir.path().join("sim");
    let out = act(&["simulate", "--spec", s(&spec), "--corpus", s(&corpus), "--out", s(&sim)]);
    assert!(stdout(&out).starts_with("component_unreachable"), "{}", stdout(&out));
    for f in [
        "before/manifest.json",
        "incident/manifest.json",
        "before_stats.csv",
        "incident_stats.csv",
        "expected.json",
    ] {
        assert!(sim.join(f).is_file(), "{f}");
    }
    let out = act(&[
        "localize",
        "--before",
        s(&sim.join("before")),
        "--incident",
        s(&sim.join("incident")),
        "--n",
        "4000",
        "--stats-before",
        s(&sim.join("before_stats.csv")),
        "--stats-incident",
        s(&sim.join("incident_stats.csv")),
    ]);
    let r: LocalizationResult = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.answer().missing, [shop_rare_pair()].into());
    assert!(r.answer().additional.is_empty());

    let out = act(&[
        "baseline",
        "--kind",
        "edge",
        "--before",
        s(&sim.join("before")),
        "--incident",
        s(&sim.join("incident")),
        "--n",
        "300",
    ]);
    let b: BaselineResult = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(b.kind, act_core::baselines::BaselineKind::EdgeCount);
    // One comparison per (success before, failure during) pair of the 300-trace samples.
    assert!(b.matched.comparisons > 0 && b.matched.comparisons <= 300 * 300);
    let pair = OrderedPair::new("PaymentService", "OrderMgmtService");
    assert!(!b.result.answer().additional.contains(&pair));
}

#[test]
fn generate_and_campaign_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("gen");
    let out = act(&[
        "generate",
        "--preset",
        "deep-narrow",
        "--traces",
        "1500",
        "--out",
        s(&store),
    ]);
    assert!(stdout(&out).contains("wrote 1500 traces"));

    let config = dir.path().join("campaign.json");
    let cfg = serde_json::json!({
        "corpus": {"store": store},
        "runs_per_category": 1,
        "seed": 2,
        "sample_size": {"fixed": 500},
    });
    std::fs::write(&config, cfg.to_string()).unwrap();
    let report = dir.path().join("report");
    act(&["campaign", "--config", s(&config), "--out", s(&report)]);
    for f in [
        "report.json",
        "results.csv",
        "result_size_cdf.csv",
        "ablation.csv",
        "time_cdf.csv",
    ] {
        assert!(report.join(f).is_file(), "{f}");
    }
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["sample_size"], 500);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_act"))
        .args([
            "localize",
            "--before",
            "/nonexistent",
            "--incident",
            "/nonexistent",
            "--n",
            "5",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot open store"));
    let out = Command::new(env!("CARGO_BIN_EXE_act"))
        .args(["serve"])
        .env_remove("ACT_STORE")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn serve_reads_the_store_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    act(&[
        "ingest",
        "--out",
        s(&store),
        s(&fixture("running_example/before.jsonl")),
    ]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_act"))
        .args(["serve", "--port", "0"])
        .env("ACT_STORE", &store)
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap_or_else(|| panic!("{line}"))
        .to_string();

    let mut conn = TcpStream::connect(&addr).unwrap();
    write!(
        conn,
        "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    conn.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with(r#"{"status":"ok"}"#), "{response}");
}
