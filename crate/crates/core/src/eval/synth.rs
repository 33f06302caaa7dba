//! Synthetic trace corpora.
//!
//! Components sit in layers and only call into the next layer down. A
//! request type is a call tree over that graph whose branches are either
//! mandatory or optional (included with probability `optional_inclusion`)
//! and may be loops whose iteration count varies per trace. Request types
//! are drawn with Zipf popularity. A small
//! fraction of traces fail naturally (a random call returns an error and the
//! request aborts there), and a smaller fraction carry no status at all and
//! so stay unlabeled.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::ingest::TraceSet;
use crate::model::{Edge, Event, Label, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub traces: usize,
    /// Components per layer, top (entry points) first.
    pub layers: Vec<usize>,
    /// Callees each component may use in the next layer.
    pub fan_out: usize,
    pub request_types: usize,
    pub zipf_exponent: f64,
    /// Maximum children per call in a request type.
    pub max_children: usize,
    /// Chance a branch of a request type is optional.
    pub optional_branch: f64,
    /// Chance an optional branch is taken.
    pub optional_inclusion: f64,
    /// Chance a branch is a loop, called a varying number of times per trace.
    pub repeat: f64,
    /// Most iterations of a loop branch; each trace draws 1..=max_repeats.
    pub max_repeats: usize,
    /// Chance a call tree stops descending at a given node.
    pub stop: f64,
    pub natural_failure_rate: f64,
    pub unlabeled_rate: f64,
    pub start_us: i64,
    pub spacing_us: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::shallow_wide()
    }
}

impl SynthConfig {
    /// Many request types over a wide, shallow call graph.
    pub fn shallow_wide() -> Self {
        SynthConfig {
            seed: 531,
            traces: 20_000,
            layers: vec![3, 12, 20, 22],
            fan_out: 3,
            request_types: 60,
            zipf_exponent: 2.0,
            max_children: 4,
            optional_branch: 0.2,
            optional_inclusion: 0.5,
            repeat: 0.5,
            max_repeats: 6,
            stop: 0.1,
            natural_failure_rate: 0.01,
            unlabeled_rate: 0.001,
            start_us: 1_700_000_000_000_000,
            spacing_us: 1_000,
        }
    }

    /// Few request types over a deep, narrow call graph.
    pub fn deep_narrow() -> Self {
        SynthConfig {
            seed: 11,
            traces: 20_000,
            layers: vec![2, 6, 6, 7, 7, 7, 7, 6, 6],
            fan_out: 2,
            request_types: 40,
            zipf_exponent: 1.5,
            max_children: 2,
            optional_branch: 0.25,
            optional_inclusion: 0.5,
            repeat: 0.2,
            max_repeats: 3,
            stop: 0.05,
            natural_failure_rate: 0.01,
            unlabeled_rate: 0.001,
            start_us: 1_700_000_000_000_000,
            spacing_us: 1_000,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "shallow-wide" | "shallow_wide" => Some(Self::shallow_wide()),
            "deep-narrow" | "deep_narrow" => Some(Self::deep_narrow()),
            _ => None,
        }
    }

    pub fn component_count(&self) -> usize {
        self.layers.iter().sum()
    }
}

#[derive(Debug, Clone)]
struct Node {
    component: usize,
    optional: bool,
    looped: bool,
    children: Vec<Node>,
}

fn component_name(layer: usize, idx: usize) -> String {
    format!("l{layer}-svc{idx:02}")
}

fn build_template(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    callees: &[Vec<Vec<usize>>],
    layer: usize,
    component: usize,
) -> Vec<Node> {
    if layer + 1 >= cfg.layers.len() || (layer > 0 && rng.random::<f64>() < cfg.stop) {
        return Vec::new();
    }
    let options = &callees[layer][component];
    let k = rng.random_range(1..=cfg.max_children.min(options.len()));
    let mut picked: Vec<usize> = options.choose_multiple(rng, k).copied().collect();
    picked.sort_unstable();
    // The first call is always made, so a node with a template never runs alone.
    picked
        .into_iter()
        .enumerate()
        .map(|(i, c)| Node {
            component: c,
            optional: i > 0 && rng.random::<f64>() < cfg.optional_branch,
            looped: rng.random::<f64>() < cfg.repeat,
            children: build_template(rng, cfg, callees, layer + 1, c),
        })
        .collect()
}

struct Builder<'a> {
    names: &'a [Vec<String>],
    events: Vec<Event>,
    edges: Vec<Edge>,
    depth: Vec<usize>,
    ts: i64,
}

impl Builder<'_> {
    fn event(&mut self, layer: usize, component: usize) -> usize {
        let id = format!("e{}", self.events.len());
        self.ts += 1;
        self.events
            .push(Event::new(id, self.names[layer][component].clone(), self.ts));
        self.depth.push(layer);
        self.events.len() - 1
    }

    fn expand(&mut self, rng: &mut ChaCha8Rng, cfg: &SynthConfig, parent: usize, layer: usize, children: &[Node]) {
        for child in children {
            if child.optional && rng.random::<f64>() >= cfg.optional_inclusion {
                continue;
            }
            let reps = if child.looped {
                rng.random_range(1..=cfg.max_repeats.max(1))
            } else {
                1
            };
            for _ in 0..reps {
                let v = self.event(layer + 1, child.component);
                self.edges.push(Edge::new(parent, v));
                self.expand(rng, cfg, v, layer + 1, &child.children);
            }
        }
    }
}

/// Generates a corpus from `cfg`. Deterministic in `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> TraceSet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names: Vec<Vec<String>> = cfg
        .layers
        .iter()
        .enumerate()
        .map(|(l, &n)| (0..n).map(|i| component_name(l, i)).collect())
        .collect();
    // callees[layer][component] = components of layer + 1 it may call.
    let callees: Vec<Vec<Vec<usize>>> = (0..cfg.layers.len())
        .map(|l| {
            (0..cfg.layers[l])
                .map(|c| {
                    if l + 1 >= cfg.layers.len() {
                        return Vec::new();
                    }
                    let below = cfg.layers[l + 1];
                    // A deterministic stripe keeps every lower component reachable.
                    let mut out: Vec<usize> = (0..cfg.fan_out.min(below))
                        .map(|j| (c * cfg.fan_out + j) % below)
                        .collect();
                    out.sort_unstable();
                    out.dedup();
                    out
                })
                .collect()
        })
        .collect();
    let templates: Vec<(usize, Vec<Node>)> = (0..cfg.request_types)
        .map(|_| {
            let root = rng.random_range(0..cfg.layers[0]);
            (root, build_template(&mut rng, cfg, &callees, 0, root))
        })
        .collect();
    let zipf = Zipf::new(cfg.request_types as f64, cfg.zipf_exponent).expect("valid zipf parameters");

    let mut traces = Vec::with_capacity(cfg.traces);
    for i in 0..cfg.traces {
        let kind = zipf.sample(&mut rng) as usize - 1;
        let (root, template) = &templates[kind];
        let mut b = Builder {
            names: &names,
            events: Vec::new(),
            edges: Vec::new(),
            depth: Vec::new(),
            ts: cfg.start_us + i as i64 * cfg.spacing_us,
        };
        let r = b.event(0, *root);
        b.expand(&mut rng, cfg, r, 0, template);

        let unlabeled = rng.random::<f64>() < cfg.unlabeled_rate;
        let failed = rng.random::<f64>() < cfg.natural_failure_rate;
        let (mut events, mut edges) = (b.events, b.edges);
        if failed && events.len() > 1 {
            let victim = rng.random_range(1..events.len());
            let (kept_events, kept_edges) = abort_at(&events, &edges, victim);
            events = kept_events;
            edges = kept_edges;
            events[victim].attrs.insert("status".into(), "503".into());
        }
        if !unlabeled {
            let code = if failed { "500" } else { "200" };
            events[0].attrs.insert("status".into(), code.into());
        }
        let label = if unlabeled {
            Label::Unlabeled
        } else if failed {
            Label::Failure
        } else {
            Label::Success
        };
        let trace = Trace::from_parts(format!("t{i:06}"), events, edges, label).expect("generated trees are DAGs");
        traces.push(trace);
    }
    TraceSet::from_traces(traces, format!("synthetic:{}", cfg.seed)).expect("unique ids")
}

/// Keeps events up to and including `victim`: the request aborts when that
/// call fails. Events are numbered in pre-order, so what remains is the
/// victim, its ancestors and everything that ran before it.
fn abort_at(events: &[Event], edges: &[Edge], victim: usize) -> (Vec<Event>, Vec<Edge>) {
    let kept = events[..=victim].to_vec();
    let kept_edges = edges.iter().filter(|e| e.target <= victim).copied().collect();
    (kept, kept_edges)
}
