//! Shared fixtures and generators for the integration test targets.
//!
//! Each test binary compiles this module independently, so not every item
//! is used by every binary.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;

use soa_cost::graph::{Scalar, ServiceGraph, ServiceId, ServiceKind, ServiceNode};
use soa_cost::metrics::{
    builtin_registry, ChildSummary, EstimatorContext, IntegrationEstimator, LeafEstimator,
    MeasureMode, MetricError, MetricSet, Params,
};
use soa_cost::{Level, MilliAmount};

/// Path of a shareable document under the repository's `fixtures/`
/// directory.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// Path of a test-only document under this crate's `tests/fixtures/`.
pub fn test_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// The rail-freight invoice automation case: two combined subsystems that
/// share a migratable legacy wrap and a transformation service.
pub fn railco() -> ServiceGraph {
    railco_with(|node| node)
}

/// The same case with a two-point size declared on every basic service,
/// matching `fixtures/railco.json`.
pub fn railco_sized() -> ServiceGraph {
    railco_with(|node| {
        if node.kind == ServiceKind::Combined {
            node
        } else {
            node.with_attr("size_points", 2.0)
        }
    })
}

fn railco_with(decorate: impl Fn(ServiceNode) -> ServiceNode) -> ServiceGraph {
    let ids =
        |names: &[&str]| -> Vec<ServiceId> { names.iter().copied().map(ServiceId::new).collect() };
    let nodes = [
        ServiceNode::combined(
            "AutomationSystem",
            ids(&["InvoiceProcessing", "POProcessing"]),
        )
        .with_name("Automation System"),
        ServiceNode::combined(
            "InvoiceProcessing",
            ids(&[
                "MetadataChecking",
                "LegacySystem",
                "PollingNotification",
                "Transform",
            ]),
        )
        .with_name("Invoice Processing"),
        ServiceNode::combined("POProcessing", ids(&["LegacySystem", "Transform"]))
            .with_name("PO Processing"),
        ServiceNode::new("MetadataChecking", ServiceKind::Available).with_name("Metadata Checking"),
        ServiceNode::new("LegacySystem", ServiceKind::Migratable).with_name("Legacy System"),
        ServiceNode::new("PollingNotification", ServiceKind::New).with_name("Polling Notification"),
        ServiceNode::new("Transform", ServiceKind::New).with_name("Transform"),
    ];
    ServiceGraph::new(
        ServiceId::new("AutomationSystem"),
        nodes.into_iter().map(decorate),
    )
    .expect("fixture ids are unique")
}

fn basic_kind(rng: &mut impl Rng) -> ServiceKind {
    match rng.gen_range(0..3) {
        0 => ServiceKind::Available,
        1 => ServiceKind::Migratable,
        _ => ServiceKind::New,
    }
}

/// Generates a small valid service graph: at most twelve nodes, at most
/// three children per combined node, duplicate references to shared
/// services allowed across parents.  Always passes validation with no
/// errors.
pub fn random_graph(rng: &mut impl Rng) -> ServiceGraph {
    let n = rng.gen_range(1..=12usize);
    if n == 1 {
        let node = decorate(ServiceNode::new("s0", basic_kind(rng)), rng);
        return ServiceGraph::new(ServiceId::new("s0"), [node]).expect("one id");
    }

    let mut kinds = vec![ServiceKind::Combined];
    for i in 1..n {
        let may_have_children = i < n - 1;
        kinds.push(if may_have_children && rng.gen_bool(0.35) {
            ServiceKind::Combined
        } else {
            basic_kind(rng)
        });
    }

    // Grow a tree first so every kept node is reachable, then add a few
    // cross edges to create shared services.  Edges always point from a
    // lower index to a higher one, so cycles cannot occur.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut placed = vec![false; n];
    placed[0] = true;
    for j in 1..n {
        let parents: Vec<usize> = (0..j)
            .filter(|&i| kinds[i] == ServiceKind::Combined && placed[i] && children[i].len() < 3)
            .collect();
        if parents.is_empty() {
            continue;
        }
        let parent = parents[rng.gen_range(0..parents.len())];
        children[parent].push(j);
        placed[j] = true;
    }
    for _ in 0..rng.gen_range(0..=3) {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            if kinds[i] != ServiceKind::Combined || !placed[i] || children[i].len() >= 3 {
                continue;
            }
            for (j, &is_placed) in placed.iter().enumerate().skip(i + 1) {
                if is_placed && !children[i].contains(&j) {
                    pairs.push((i, j));
                }
            }
        }
        if pairs.is_empty() {
            break;
        }
        let (i, j) = pairs[rng.gen_range(0..pairs.len())];
        children[i].push(j);
    }
    for i in 0..n {
        if kinds[i] == ServiceKind::Combined && children[i].is_empty() {
            kinds[i] = basic_kind(rng);
        }
    }

    let nodes: Vec<ServiceNode> = (0..n)
        .filter(|&i| placed[i])
        .map(|i| {
            let child_ids: Vec<ServiceId> = children[i]
                .iter()
                .map(|j| ServiceId::new(format!("s{j}")))
                .collect();
            let node = ServiceNode::new(format!("s{i}"), kinds[i]).with_children(child_ids);
            decorate(node, rng)
        })
        .collect();
    let graph = ServiceGraph::new(ServiceId::new("s0"), nodes).expect("indices are unique");
    debug_assert!(graph.validate().is_ok(), "generator must emit valid graphs");
    graph
}

/// Sprinkles plausible estimation attributes over a generated node.
fn decorate(mut node: ServiceNode, rng: &mut impl Rng) -> ServiceNode {
    node = node.with_attr("size_points", rng.gen_range(0..=20) as f64);
    if rng.gen_bool(0.3) {
        let technique = ["registry", "semantic_annotation", "qos_matching"][rng.gen_range(0..3)];
        node = node.with_attr("discovery_technique", technique);
    }
    if rng.gen_bool(0.3) {
        let box_type = ["black", "grey", "white"][rng.gen_range(0..3)];
        node = node.with_attr("box_type", box_type);
    }
    if rng.gen_bool(0.25) {
        node = node.with_attr("interface_cost", rng.gen_range(0..=40) as f64 / 10.0);
    }
    if rng.gen_bool(0.2) {
        node = node.with_attr("infrastructure_factor", [0.5, 1.0, 1.5, 2.0][rng.gen_range(0..4)]);
    }
    if rng.gen_bool(0.15) {
        node = node.with_attr("soa_compliant", rng.gen_bool(0.5));
    }
    node
}

/// Returns a copy of the graph with every child list shuffled.
pub fn shuffle_children(graph: &ServiceGraph, rng: &mut impl Rng) -> ServiceGraph {
    let nodes: Vec<ServiceNode> = graph
        .nodes()
        .values()
        .map(|node| {
            let mut node = node.clone();
            // Fisher-Yates over the child list.
            for i in (1..node.children.len()).rev() {
                node.children.swap(i, rng.gen_range(0..=i));
            }
            node
        })
        .collect();
    ServiceGraph::new(graph.root().clone(), nodes).expect("ids unchanged")
}

/// A leaf estimator returning a fixed amount per first encounter and a
/// fixed amount per repeat, optionally raised for one specific service.
#[derive(Clone, Debug)]
pub struct FlatLeaf {
    pub amount_milli: u64,
    pub re_reference_milli: u64,
    pub boost: Option<(ServiceId, u64)>,
}

impl FlatLeaf {
    pub fn new(amount_milli: u64, re_reference_milli: u64) -> Self {
        Self {
            amount_milli,
            re_reference_milli,
            boost: None,
        }
    }
}

impl LeafEstimator for FlatLeaf {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        _params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        let mut milli = if ctx.repeat_encounter {
            self.re_reference_milli
        } else {
            self.amount_milli
        };
        if let Some((target, delta)) = &self.boost {
            if !ctx.repeat_encounter && ctx.node.id == *target {
                milli += delta;
            }
        }
        Ok(MilliAmount::from_milli(milli))
    }
}

/// An integration estimator charging a fixed amount per direct child,
/// independent of level, plus an optional flat raise per call.
#[derive(Clone, Debug)]
pub struct FlatIntegration {
    pub per_child_milli: u64,
    pub boost_milli: u64,
}

impl IntegrationEstimator for FlatIntegration {
    fn estimate(
        &self,
        children: &[ChildSummary],
        _level: Level,
        _params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        let base = self.per_child_milli.checked_mul(children.len() as u64);
        base.and_then(|amount| amount.checked_add(self.boost_milli))
            .map(MilliAmount::from_milli)
            .ok_or(MetricError::Overflow)
    }
}

/// A randomized but level-independent pricing scheme built from the flat
/// test estimators; its slots can be rebuilt with one output raised.
#[derive(Clone, Debug)]
pub struct FlatConfig {
    pub e1_milli: u64,
    pub e2_milli: u64,
    pub e3_milli: u64,
    pub per_child_milli: u64,
    pub re_reference_milli: u64,
}

impl FlatConfig {
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            e1_milli: rng.gen_range(0..=5000),
            e2_milli: rng.gen_range(0..=5000),
            e3_milli: rng.gen_range(0..=5000),
            per_child_milli: rng.gen_range(0..=5000),
            re_reference_milli: if rng.gen_bool(0.75) {
                0
            } else {
                rng.gen_range(1..=400)
            },
        }
    }

    pub fn metric_set(&self) -> MetricSet {
        self.build(None, 0)
    }

    /// Rebuilds the set with the named service's first-encounter price
    /// raised by `delta` in the slot that prices its kind.
    pub fn boosted_leaf(&self, kind: ServiceKind, target: &ServiceId, delta: u64) -> MetricSet {
        let boost = Some((target.clone(), delta));
        match kind {
            ServiceKind::Available => self.build_slots(Some((Slot::E1, boost)), 0),
            ServiceKind::Migratable => self.build_slots(Some((Slot::E2, boost)), 0),
            ServiceKind::New => self.build_slots(Some((Slot::E3, boost)), 0),
            ServiceKind::Combined => self.build(None, delta),
        }
    }

    fn build(&self, boost: Option<(ServiceId, u64)>, integration_boost_milli: u64) -> MetricSet {
        self.build_slots(boost.map(|pair| (Slot::E1, Some(pair))), integration_boost_milli)
    }

    fn build_slots(
        &self,
        leaf_boost: Option<(Slot, Option<(ServiceId, u64)>)>,
        integration_boost_milli: u64,
    ) -> MetricSet {
        let boost_for = |slot: Slot| -> Option<(ServiceId, u64)> {
            leaf_boost
                .as_ref()
                .filter(|(boosted, _)| *boosted == slot)
                .and_then(|(_, boost)| boost.clone())
        };
        let leaf = |amount: u64, slot: Slot| FlatLeaf {
            amount_milli: amount,
            re_reference_milli: self.re_reference_milli,
            boost: boost_for(slot),
        };
        MetricSet::with_unit_slots(MeasureMode::Cost)
            .with_e1(leaf(self.e1_milli, Slot::E1), Params::new())
            .with_e2(leaf(self.e2_milli, Slot::E2), Params::new())
            .with_e3(leaf(self.e3_milli, Slot::E3), Params::new())
            .with_e4(
                FlatIntegration {
                    per_child_milli: self.per_child_milli,
                    boost_milli: integration_boost_milli,
                },
                Params::new(),
            )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    E1,
    E2,
    E3,
}

fn number(value: f64) -> Scalar {
    Scalar::Number(value)
}

/// A randomized pricing scheme resolved through the builtin registry, with
/// one uniform integration weight so pricing never depends on level.
pub fn random_registry_metrics(rng: &mut impl Rng) -> MetricSet {
    let registry = builtin_registry();
    if rng.gen_bool(0.25) {
        return registry
            .metric_set(
                MeasureMode::Size,
                [
                    ("service-points", Params::new()),
                    ("service-points", Params::new()),
                    ("service-points", Params::new()),
                    ("service-points", Params::new()),
                ],
            )
            .expect("size slots resolve");
    }
    let e1: Params = [
        ("registry".to_owned(), number(rng.gen_range(5..=60) as f64 / 10.0)),
        (
            "semantic_annotation".to_owned(),
            number(rng.gen_range(5..=60) as f64 / 10.0),
        ),
        (
            "qos_matching".to_owned(),
            number(rng.gen_range(5..=60) as f64 / 10.0),
        ),
        (
            "re_reference_cost".to_owned(),
            number(if rng.gen_bool(0.7) {
                0.0
            } else {
                rng.gen_range(1..=40) as f64 / 100.0
            }),
        ),
    ]
    .into_iter()
    .collect();
    let e2: Params = [
        ("black".to_owned(), number(rng.gen_range(5..=40) as f64 / 100.0)),
        ("grey".to_owned(), number(rng.gen_range(30..=70) as f64 / 100.0)),
        ("white".to_owned(), number(rng.gen_range(60..=95) as f64 / 100.0)),
    ]
    .into_iter()
    .collect();
    let e3: Params = [
        ("a".to_owned(), number(rng.gen_range(5..=30) as f64 / 10.0)),
        ("b".to_owned(), number(rng.gen_range(90..=125) as f64 / 100.0)),
    ]
    .into_iter()
    .collect();
    let e4: Params = [
        (
            "level_weight_default".to_owned(),
            number(rng.gen_range(5..=25) as f64 / 10.0),
        ),
        (
            "soa_compliance_discount".to_owned(),
            number(if rng.gen_bool(0.7) { 1.0 } else { 0.5 }),
        ),
    ]
    .into_iter()
    .collect();
    registry
        .metric_set(
            MeasureMode::Cost,
            [
                ("table-discovery", e1),
                ("factor-migration", e2),
                ("power-law", e3),
                ("level-weighted-integration", e4),
            ],
        )
        .expect("cost slots resolve")
}

/// Draws one pricing scheme: flat custom estimators or registry builtins.
pub fn random_metric_set(rng: &mut impl Rng) -> MetricSet {
    if rng.gen_bool(0.5) {
        FlatConfig::random(rng).metric_set()
    } else {
        random_registry_metrics(rng)
    }
}
