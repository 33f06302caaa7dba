use std::collections::BTreeSet;

use act_core::eval::synth::{generate, SynthConfig};
use act_core::eval::{run_campaign, CampaignConfig, CampaignReport, Grade, Method};

fn mean(report: &CampaignReport, techniques: &str) -> f64 {
    report
        .ablation
        .iter()
        .find(|a| a.techniques == techniques)
        .map(|a| a.mean_size)
        .unwrap()
}

fn act_only(runs: usize, seed: u64) -> CampaignConfig {
    CampaignConfig {
        methods: vec![Method::Act],
        ..CampaignConfig::new(runs, seed)
    }
}

#[test]
fn reachability_matters_more_on_deep_traces() {
    let ratio = |cfg: SynthConfig| {
        let corpus = generate(&cfg);
        let report = run_campaign(&corpus, &act_only(20, 3)).unwrap().report;
        assert_eq!(report.visible, 60);
        mean(&report, "diff+reach") / mean(&report, "diff+threshold")
    };
    let deep = ratio(SynthConfig::deep_narrow());
    let shallow = ratio(SynthConfig::shallow_wide());
    assert!(
        deep < 1.0,
        "deep: reach alone should beat threshold alone, ratio {deep}"
    );
    assert!(
        deep < shallow,
        "deep ratio {deep} should be below shallow ratio {shallow}"
    );
}

#[test]
fn identical_config_gives_identical_report_bytes() {
    let corpus = generate(&SynthConfig {
        traces: 5_000,
        ..SynthConfig::shallow_wide()
    });
    let cfg = CampaignConfig::new(4, 11);
    let a = run_campaign(&corpus, &cfg).unwrap();
    let b = run_campaign(&corpus, &cfg).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    a.report.write_all(dir_a.path()).unwrap();
    b.report.write_all(dir_b.path()).unwrap();
    for file in ["report.json", "results.csv", "result_size_cdf.csv", "ablation.csv"] {
        let x = std::fs::read(dir_a.path().join(file)).unwrap();
        let y = std::fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    // A different seed picks different incidents.
    let c = run_campaign(&corpus, &CampaignConfig::new(4, 12)).unwrap();
    assert_ne!(a.report.to_json(), c.report.to_json());
}

#[test]
fn report_tables_have_the_documented_shape() {
    let corpus = generate(&SynthConfig {
        traces: 5_000,
        ..SynthConfig::shallow_wide()
    });
    let out = run_campaign(&corpus, &CampaignConfig::new(3, 5)).unwrap();
    let r = &out.report;
    assert_eq!(r.attempted, r.visible + r.invisible);

    // Percentages of every summary row add up to 100 up to rounding.
    for row in &r.summary {
        if row.counts.graded() == 0 {
            continue;
        }
        let total = row.exact_pct + row.superfluous_pct + row.wrong_pct + row.no_answer_pct;
        assert!((total - 100.0).abs() <= 0.02, "{row:?}");
    }
    let categories: BTreeSet<&str> = r.summary.iter().map(|s| s.category.as_str()).collect();
    assert!(categories.contains("all") && categories.contains("component_down"));

    let dir = tempfile::tempdir().unwrap();
    r.write_all(dir.path()).unwrap();
    let mut results = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
    let header: Vec<String> = results.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
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
            "no_answer_pct"
        ]
    );
    assert_eq!(results.records().count(), r.summary.len());

    let mut cdf = csv::Reader::from_path(dir.path().join("result_size_cdf.csv")).unwrap();
    assert_eq!(cdf.headers().unwrap(), vec!["method", "x", "y"]);
    for rec in cdf.records() {
        let y: f64 = rec.unwrap()[2].parse().unwrap();
        assert!(y > 0.0 && y <= 1.0);
    }
    let ablation = std::fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    assert!(ablation.starts_with("techniques,runs,mean_size\n"));
    assert_eq!(ablation.lines().count(), 5);

    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    for key in [
        "config",
        "corpus",
        "sample_size",
        "threshold",
        "summary",
        "result_sizes",
        "ablation",
        "runs",
    ] {
        assert!(json.get(key).is_some(), "report.json lacks {key}");
    }
    // Wall-clock numbers stay out of the deterministic report.
    assert!(!r.to_json().contains("_us\""));

    let mut timing = Vec::new();
    out.timing.write_time_cdf_csv(&mut timing).unwrap();
    assert!(String::from_utf8(timing).unwrap().starts_with("method,x,y\n"));
}

#[test]
fn baselines_are_graded_alongside_act() {
    let corpus = generate(&SynthConfig {
        traces: 5_000,
        ..SynthConfig::shallow_wide()
    });
    let r = run_campaign(&corpus, &CampaignConfig::new(3, 9)).unwrap().report;
    for run in r.runs.iter().filter(|x| x.visible) {
        let methods: Vec<Method> = run.methods.iter().map(|m| m.method).collect();
        assert_eq!(methods, Method::ALL);
        for m in &run.methods {
            if m.method != Method::Act {
                let (cmp, s, u) = m.comparisons.unwrap();
                assert_eq!(cmp, s * u);
            }
            if m.answer.is_empty() {
                assert_eq!(m.grade, Some(Grade::NoAnswer));
            }
        }
    }
}
