use std::fs::File;
use std::io::BufReader;

use act_core::fixtures::{
    running_example, shop_corpus, shop_rare_pair, shop_recovery_spec, shop_timeline, shop_unreachable_spec,
};
use act_core::pipeline::{DiscardReason, Side};
use act_core::simulator::simulate_incident_with_stats;
use act_core::store::Store;
use act_core::{
    localize, parse_traces, sample, CorpusStats, Format, GuaranteeConfig, Label, LabelCriterion, OrderedPair,
};

fn pair(a: &str, b: &str) -> OrderedPair {
    OrderedPair::new(a, b)
}

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

#[test]
fn running_example_goes_through_every_stage() {
    let fx = running_example();
    let r = localize(
        &fx.before,
        &fx.incident,
        &fx.stats_before,
        &fx.stats_incident,
        &fx.config,
    )
    .unwrap();
    assert_eq!(
        r.stages.after_diff.missing,
        [
            pair("CatalogService", "RecommendationService"),
            pair("PaymentsService", "TokenService"),
            pair("TokenService", "KeyVault"),
        ]
        .into()
    );
    assert_eq!(
        r.stages.after_diff.additional,
        [pair("PaymentsService", "TokenFallbackService")].into()
    );

    let below: Vec<_> = r
        .ledger
        .iter()
        .filter(|e| matches!(e.reason, DiscardReason::BelowThreshold { .. }))
        .collect();
    assert_eq!(below.len(), 1);
    assert_eq!(below[0].pair, pair("CatalogService", "RecommendationService"));
    let DiscardReason::BelowThreshold { freq, threshold } = below[0].reason else {
        unreachable!()
    };
    assert_eq!(freq, 3);
    assert!((threshold - 4.35).abs() < 0.01);

    let pruned: Vec<_> = r
        .ledger
        .iter()
        .filter_map(|e| match &e.reason {
            DiscardReason::PrunedAsEffectOf { cause, .. } => Some((e.side, &e.pair, cause)),
            _ => None,
        })
        .collect();
    assert_eq!(
        pruned,
        [(
            Side::Missing,
            &pair("TokenService", "KeyVault"),
            &pair("PaymentsService", "TokenService")
        )]
    );
    assert_eq!(*r.answer(), fx.expected.as_diff());
    assert!(r.advisory.is_none());
}

#[test]
fn bundled_jsonl_loads_from_disk() {
    let path = format!("{FIXTURES}/running_example/before.jsonl");
    let parsed = parse_traces(BufReader::new(File::open(path).unwrap()), Format::Jsonl, "before").unwrap();
    assert!(parsed.errors.is_empty());
    assert_eq!(parsed.set.len(), 40);
    let labeled = parsed.set.relabeled(&LabelCriterion::default());
    assert_eq!(labeled.count_label(Label::Success), 40);
}

#[test]
fn jaeger_fixture_converts_spans_and_references() {
    let path = format!("{FIXTURES}/jaeger/checkout.json");
    let parsed = parse_traces(BufReader::new(File::open(path).unwrap()), Format::Jaeger, "jaeger").unwrap();
    assert!(parsed.errors.is_empty());
    let set = parsed.set.relabeled(&LabelCriterion::default());
    let t: Vec<_> = set.iter().collect();
    assert_eq!(t.len(), 3);
    assert_eq!((t[0].events().len(), t[0].edges().len()), (3, 2));
    assert_eq!(t[0].label(), Label::Success);
    assert_eq!(t[1].label(), Label::Failure);
    assert_eq!(t[2].label(), Label::Unlabeled);
    // FOLLOWS_FROM and out-of-trace references are not edges.
    assert_eq!(t[1].edges().len(), 2);
    assert!(t[1].view().contains(&pair("PaymentsService", "TokenFallbackService")));
    assert_eq!(t[0].events()[1].attrs["instance"], "pay-2");
}

#[test]
fn shop_threshold_trade_off() {
    let shop = shop_corpus();
    let stats = CorpusStats::build(&shop);
    let run = simulate_incident_with_stats(&shop, &stats, &shop_unreachable_spec(2000, 3)).unwrap();
    assert_eq!(run.expected.missing_expected, [shop_rare_pair()].into());
    let at = |g: f64| {
        let cfg = GuaranteeConfig::new(g, 2000).unwrap();
        localize(&run.before, &run.incident, &run.before_stats, &run.incident_stats, &cfg).unwrap()
    };
    // freq 16 sits below t(10000, 2000, 0.99) ~ 23: nothing survives.
    let strict = at(0.99);
    assert!(strict.stages.after_diff.missing.contains(&shop_rare_pair()));
    assert!(strict.answer().is_empty());
    let advisory = strict.advisory.as_ref().expect("empty result carries an advisory");
    assert!(advisory.lower_guarantee.is_some() && advisory.resample.is_some());

    // At g = 0.75 the threshold drops to ~6.9 and the retained set grows.
    let loose = at(0.75);
    let retained = loose.stages.after_threshold.as_ref().unwrap();
    assert!(retained.len() > strict.stages.after_threshold.as_ref().unwrap().len());
    assert_eq!(loose.answer().missing, [shop_rare_pair()].into());
}

#[test]
fn shop_larger_sample_localizes_exactly() {
    let shop = shop_corpus();
    let stats = CorpusStats::build(&shop);
    let run = simulate_incident_with_stats(&shop, &stats, &shop_unreachable_spec(4000, 3)).unwrap();
    let cfg = GuaranteeConfig::new(0.99, 4000).unwrap();
    let r = localize(&run.before, &run.incident, &run.before_stats, &run.incident_stats, &cfg).unwrap();
    assert_eq!(*r.answer(), run.expected.as_diff());
    assert_eq!(r.answer().missing, [pair("PaymentService", "OrderMgmtService")].into());
}

#[test]
fn shop_buggy_recovery_reports_both_sides() {
    let shop = shop_corpus();
    let stats = CorpusStats::build(&shop);
    let run = simulate_incident_with_stats(&shop, &stats, &shop_recovery_spec(2000, 3)).unwrap();
    let cfg = GuaranteeConfig::new(0.99, 2000).unwrap();
    let r = localize(&run.before, &run.incident, &run.before_stats, &run.incident_stats, &cfg).unwrap();
    assert_eq!(r.answer().missing, [pair("PaymentService", "TokenService")].into());
    assert_eq!(
        r.answer().additional,
        [pair("PaymentService", "TokenService-fallback")].into()
    );
}

#[test]
fn timeline_store_windows_localize_the_cut() {
    let tl = shop_timeline();
    let dir = tempfile::tempdir().unwrap();
    let store = Store::create(dir.path(), &tl.traces, 1_000).unwrap();
    assert_eq!(store.manifest().shards.len(), 10);
    let criterion = LabelCriterion::default();
    let before = store.load_window(tl.before, &criterion).unwrap();
    let incident = store.load_window(tl.incident, &criterion).unwrap();
    assert_eq!(before.len() + incident.len(), tl.traces.len());
    let (sb, si) = (CorpusStats::build(&before), CorpusStats::build(&incident));
    let cfg = GuaranteeConfig::new(0.99, 2000).unwrap();
    let r = localize(
        &sample(&before, 2000, 1).unwrap(),
        &sample(&incident, 2000, 2).unwrap(),
        &sb,
        &si,
        &cfg,
    )
    .unwrap();
    assert_eq!(*r.answer(), tl.expected.as_diff());
}
