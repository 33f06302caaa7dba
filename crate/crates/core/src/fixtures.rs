//! Hand-built corpora with known answers.
//!
//! * The running example: a payments service whose token service stops
//!   answering, so payments falls back to a token fallback service. Bundled as
//!   JSONL under `fixtures/running_example/`.
//! * The shop corpus: 10,000 traces over a dozen named services with one rare
//!   request type (subscriptions, 16 traces) that is the only caller of
//!   `(PaymentService, OrderMgmtService)`. Built in code from a pinned seed.
//! * The shop timeline: the shop corpus laid out in time, with
//!   `(CheckoutService, ShippingService)` cut in every trace of the second
//!   half. Used to exercise windowed stores.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{label_trace, parse_jsonl, LabelCriterion, TraceSet, Window};
use crate::model::{Edge, Event, OrderedPair, Trace};
use crate::simulator::{mutate_unreachable, ExpectedAnswer, IncidentCategory, SimulationSpec, Target};
use crate::stats::{CorpusStats, GuaranteeConfig};

pub const RUNNING_EXAMPLE_BEFORE_JSONL: &str = include_str!("../fixtures/running_example/before.jsonl");
pub const RUNNING_EXAMPLE_INCIDENT_JSONL: &str = include_str!("../fixtures/running_example/incident.jsonl");

const RUNNING_EXAMPLE_START_US: i64 = 1_700_000_000_000_000;
const MINUTE_US: i64 = 60_000_000;

/// A call tree used to write fixture traces by hand.
#[derive(Debug, Clone)]
struct Call {
    component: &'static str,
    status: Option<&'static str>,
    children: Vec<Call>,
}

fn call(component: &'static str, children: Vec<Call>) -> Call {
    Call {
        component,
        status: None,
        children,
    }
}

fn with_status(mut c: Call, status: &'static str) -> Call {
    c.status = Some(status);
    c
}

/// Lays out `root` in pre-order, one microsecond per event, and labels the
/// result with the default status criterion.
fn build(trace_id: String, start_us: i64, root: &Call) -> Trace {
    fn walk(c: &Call, parent: Option<usize>, start_us: i64, events: &mut Vec<Event>, edges: &mut Vec<Edge>) {
        let idx = events.len();
        let mut e = Event::new(format!("e{idx}"), c.component, start_us + idx as i64);
        if let Some(s) = c.status {
            e = e.with_attr("status", s);
        }
        events.push(e);
        if let Some(p) = parent {
            edges.push(Edge::new(p, idx));
        }
        for child in &c.children {
            walk(child, Some(idx), start_us, events, edges);
        }
    }
    let (mut events, mut edges) = (Vec::new(), Vec::new());
    walk(root, None, start_us, &mut events, &mut edges);
    let unlabeled = Trace::from_parts(trace_id, events, edges, Default::default()).expect("fixture trees are DAGs");
    let label = label_trace(&unlabeled, &LabelCriterion::default());
    unlabeled.with_label(label)
}

/// Inputs and the known answer of a localization fixture.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub before: TraceSet,
    pub incident: TraceSet,
    pub stats_before: CorpusStats,
    pub stats_incident: CorpusStats,
    pub config: GuaranteeConfig,
    pub expected: ExpectedAnswer,
}

/// Builds the running example's before and incident traces.
///
/// Half of the traces are purchases, half are catalog browses. Three before
/// browses also fetch recommendations; that pair is too rare to survive the
/// threshold. In the incident every purchase fails over to the fallback.
pub fn running_example_traces() -> (Vec<Trace>, Vec<Trace>) {
    let purchase = call(
        "Frontend",
        vec![call(
            "PaymentsService",
            vec![
                call("TokenService", vec![call("KeyVault", vec![])]),
                call("LedgerService", vec![]),
            ],
        )],
    );
    let failed_purchase = with_status(
        call(
            "Frontend",
            vec![with_status(
                call(
                    "PaymentsService",
                    vec![
                        with_status(call("TokenFallbackService", vec![]), "500"),
                        call("LedgerService", vec![]),
                    ],
                ),
                "500",
            )],
        ),
        "500",
    );
    let browse = |recommend: bool| {
        let mut catalog = vec![call("InventoryService", vec![])];
        if recommend {
            catalog.push(call("RecommendationService", vec![]));
        }
        with_status(call("Frontend", vec![call("CatalogService", catalog)]), "200")
    };

    let before = (0..40)
        .map(|i| {
            let root = if i % 2 == 0 {
                with_status(purchase.clone(), "200")
            } else {
                browse(i < 6)
            };
            build(
                format!("before-{i:02}"),
                RUNNING_EXAMPLE_START_US + i * MINUTE_US,
                &root,
            )
        })
        .collect();
    let incident_start = RUNNING_EXAMPLE_START_US + 60 * MINUTE_US;
    let incident = (0..40)
        .map(|i| {
            let root = if i % 2 == 0 {
                failed_purchase.clone()
            } else {
                browse(false)
            };
            build(format!("incident-{i:02}"), incident_start + i * MINUTE_US, &root)
        })
        .collect();
    (before, incident)
}

fn parse_bundled(text: &str, source: &str) -> TraceSet {
    let parsed = parse_jsonl(text.as_bytes(), source).expect("bundled fixture parses");
    assert!(parsed.errors.is_empty(), "bundled fixture has malformed records");
    parsed.set.relabeled(&LabelCriterion::default())
}

/// The running example, loaded from the bundled JSONL. Statistics come from
/// the two sets themselves and the sample size is the whole set.
pub fn running_example() -> Fixture {
    let before = parse_bundled(RUNNING_EXAMPLE_BEFORE_JSONL, "running_example/before.jsonl");
    let incident = parse_bundled(RUNNING_EXAMPLE_INCIDENT_JSONL, "running_example/incident.jsonl");
    let stats_before = CorpusStats::build(&before);
    let stats_incident = CorpusStats::build(&incident);
    let config = GuaranteeConfig::new(0.99, before.len()).expect("valid guarantee");
    Fixture {
        before,
        incident,
        stats_before,
        stats_incident,
        config,
        expected: ExpectedAnswer {
            missing_expected: [OrderedPair::new("PaymentsService", "TokenService")].into(),
            additional_expected: [OrderedPair::new("PaymentsService", "TokenFallbackService")].into(),
        },
    }
}

pub const SHOP_SEED: u64 = 2024;
pub const SHOP_TRACES: usize = 10_000;
/// Traces of the rare subscription request type.
pub const SHOP_SUBSCRIPTIONS: usize = 16;
const SHOP_START_US: i64 = 1_700_000_000_000_000;
const SHOP_SPACING_US: i64 = 100_000;

/// The pair only subscriptions exercise.
pub fn shop_rare_pair() -> OrderedPair {
    OrderedPair::new("PaymentService", "OrderMgmtService")
}

/// A pair on every checkout.
pub fn shop_frequent_pair() -> OrderedPair {
    OrderedPair::new("PaymentService", "TokenService")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShopRequest {
    Browse,
    Cart,
    Checkout,
    Subscription,
    Account,
}

fn shop_call(kind: ShopRequest, rng: &mut ChaCha8Rng, failed: bool) -> Call {
    use ShopRequest::*;
    let payment = |rng: &mut ChaCha8Rng, failed: bool| {
        let mut calls = Vec::new();
        if failed {
            // Fraud check errors out and the payment aborts before tokenizing.
            calls.push(with_status(call("FraudService", vec![]), "503"));
            return call("PaymentService", calls);
        }
        if rng.random::<f64>() < 0.4 {
            calls.push(call("FraudService", vec![]));
        }
        calls.push(call("TokenService", vec![call("KeyVault", vec![])]));
        call("PaymentService", calls)
    };
    let child = match kind {
        Browse => {
            let mut calls = vec![call("InventoryService", vec![])];
            if rng.random::<f64>() < 0.5 {
                calls.push(call("RecommendationService", vec![]));
            }
            let mut top = vec![call("CatalogService", calls)];
            if rng.random::<f64>() < 0.3 {
                top.push(call("AdService", vec![]));
            }
            return call("Frontend", top);
        }
        Cart => call(
            "CartService",
            vec![call("CacheService", vec![]), call("CatalogService", vec![])],
        ),
        Checkout => {
            let mut calls = vec![
                call("CartService", vec![call("CacheService", vec![])]),
                payment(rng, failed),
            ];
            if !failed {
                calls.push(call("ShippingService", vec![call("InventoryService", vec![])]));
                calls.push(call("EmailService", vec![]));
            }
            call("CheckoutService", calls)
        }
        Subscription => {
            let mut pay = payment(rng, false);
            pay.children.push(call(
                "OrderMgmtService",
                vec![call("LedgerService", vec![]), call("EmailService", vec![])],
            ));
            call("SubscriptionService", vec![pay])
        }
        Account => {
            let mut auth = Vec::new();
            if rng.random::<f64>() < 0.006 {
                auth.push(call("MfaService", vec![]));
            }
            let mut calls = vec![call("AuthService", auth)];
            if rng.random::<f64>() < 0.01 {
                calls.push(call("AuditService", vec![]));
            }
            call("AccountService", calls)
        }
    };
    call("Frontend", vec![child])
}

/// Builds the shop corpus. Deterministic; the layout is a seeded shuffle of
/// fixed request-type counts.
pub fn shop_corpus() -> TraceSet {
    use ShopRequest::*;
    let mut rng = ChaCha8Rng::seed_from_u64(SHOP_SEED);
    let counts = [
        (Browse, 5_000),
        (Cart, 2_500),
        (Checkout, 2_000),
        (Subscription, SHOP_SUBSCRIPTIONS),
        (Account, SHOP_TRACES - 9_500 - SHOP_SUBSCRIPTIONS),
    ];
    let mut kinds: Vec<ShopRequest> = counts.iter().flat_map(|&(k, n)| std::iter::repeat_n(k, n)).collect();
    kinds.shuffle(&mut rng);
    let traces = kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| {
            let failed = kind == Checkout && rng.random::<f64>() < 0.02;
            let mut root = shop_call(kind, &mut rng, failed);
            // One trace in a thousand is missing its status entirely.
            if i % 1000 != 999 {
                root.status = Some(if failed { "500" } else { "200" });
            }
            build(
                format!("shop-{i:05}"),
                SHOP_START_US + i as i64 * SHOP_SPACING_US,
                &root,
            )
        })
        .collect();
    TraceSet::from_traces(traces, "fixture:shop").expect("unique ids")
}

/// Cuts `(PaymentService, OrderMgmtService)` in every subscription.
pub fn shop_unreachable_spec(sample_size: usize, seed: u64) -> SimulationSpec {
    SimulationSpec {
        category: IncidentCategory::ComponentUnreachable,
        target: Target::Pair(shop_rare_pair()),
        mutation_fraction: 1.0,
        seed,
        before_size: sample_size,
        incident_size: sample_size,
        fallback: None,
    }
}

/// Token service fails and payments calls `TokenService-fallback` instead.
pub fn shop_recovery_spec(sample_size: usize, seed: u64) -> SimulationSpec {
    SimulationSpec {
        category: IncidentCategory::BuggyFailureRecovery,
        target: Target::Pair(shop_frequent_pair()),
        mutation_fraction: 1.0,
        seed,
        before_size: sample_size,
        incident_size: sample_size,
        fallback: None,
    }
}

/// The shop corpus split in time with an incident in the second half.
#[derive(Debug, Clone)]
pub struct Timeline {
    /// Every trace in start-time order.
    pub traces: Vec<Trace>,
    pub before: Window,
    pub incident: Window,
    /// Start of the first mutated trace's window.
    pub incident_start_us: i64,
    pub expected: ExpectedAnswer,
}

pub fn shop_timeline_pair() -> OrderedPair {
    OrderedPair::new("CheckoutService", "ShippingService")
}

/// Cuts `(CheckoutService, ShippingService)` in every trace of the second
/// half of the shop corpus.
pub fn shop_timeline() -> Timeline {
    let corpus = shop_corpus();
    let half = corpus.len() / 2;
    let pair = shop_timeline_pair();
    let traces: Vec<Trace> = corpus
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i >= half && t.view().contains(&pair) {
                mutate_unreachable(t, &pair).expect("pair is present")
            } else {
                t.clone()
            }
        })
        .collect();
    let start = |i: usize| traces[i].start_us();
    let before = Window {
        start_us: start(0),
        end_us: start(half - 1),
    };
    let incident = Window {
        start_us: start(half),
        end_us: start(traces.len() - 1),
    };
    Timeline {
        incident_start_us: incident.start_us,
        before,
        incident,
        traces,
        expected: ExpectedAnswer {
            missing_expected: BTreeSet::from([pair]),
            additional_expected: BTreeSet::new(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_jsonl;
    use crate::model::Label;

    fn jsonl(traces: &[Trace]) -> String {
        let mut out = Vec::new();
        write_jsonl(traces.iter(), &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn bundled_running_example_matches_the_builder() {
        let (before, incident) = running_example_traces();
        assert_eq!(jsonl(&before), RUNNING_EXAMPLE_BEFORE_JSONL);
        assert_eq!(jsonl(&incident), RUNNING_EXAMPLE_INCIDENT_JSONL);
        let fx = running_example();
        assert_eq!(
            fx.before.traces().iter().map(|t| (**t).clone()).collect::<Vec<_>>(),
            before
        );
    }

    #[test]
    fn running_example_labels_and_frequencies() {
        let fx = running_example();
        assert_eq!(fx.before.count_label(Label::Success), 40);
        assert_eq!(fx.incident.count_label(Label::Failure), 20);
        assert_eq!(
            fx.stats_before
                .freq(&OrderedPair::new("PaymentsService", "TokenService")),
            20
        );
        assert_eq!(
            fx.stats_before
                .freq(&OrderedPair::new("CatalogService", "RecommendationService")),
            3
        );
    }

    #[test]
    fn shop_corpus_shape() {
        let shop = shop_corpus();
        assert_eq!(shop.len(), SHOP_TRACES);
        let stats = CorpusStats::build(&shop);
        assert_eq!(stats.freq(&shop_rare_pair()), SHOP_SUBSCRIPTIONS);
        let unlabeled = shop.count_label(Label::Unlabeled);
        assert_eq!(unlabeled, 10);
        assert!((unlabeled as f64) < 0.002 * shop.len() as f64);
        assert!(shop.count_label(Label::Failure) > 0);
    }

    #[test]
    fn timeline_mutates_only_the_second_half() {
        let tl = shop_timeline();
        let pair = shop_timeline_pair();
        let (first, second) = tl.traces.split_at(tl.traces.len() / 2);
        assert!(first.iter().any(|t| t.view().contains(&pair)));
        assert!(!second.iter().any(|t| t.view().contains(&pair)));
        assert!(tl.before.end_us < tl.incident_start_us);
    }
}
