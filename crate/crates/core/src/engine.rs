//! Divide-and-conquer evaluation of a service graph.
//!
//! Estimation recurses structurally: a basic service is priced directly by
//! the slot matching its kind, a combined service is decomposed, its
//! children solved, and their subtotals composed with one integration term
//! per level. A service referenced more than once is priced in full at its
//! first encounter only — deterministic depth-first order, children in
//! declaration order — and every later reference is priced by the
//! discovery slot with the repeat flag set.
//!
//! The first-encounter assignment is fixed by a sequential pre-pass, after
//! which sibling subtrees are independent and may be evaluated on parallel
//! workers; results are bit-identical for any worker count.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::amount::MilliAmount;
use crate::graph::{InvalidGraphError, Level, ServiceGraph, ServiceId, ServiceKind, ServiceNode};
use crate::metrics::{
    attr_number_or, ChildSummary, EstimatorContext, MeasureMode, MetricError, MetricSet,
};

/// What a line item charges for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostCategory {
    /// First encounter of an available service (E1).
    Discovery,
    /// First encounter of a migratable service (E2).
    Migration,
    /// First encounter of a service built from scratch (E3).
    Development,
    /// A combined service's own integration work (E4).
    Integration,
    /// A second or later reference to any service (E1, repeat flag).
    ReReference,
}

impl CostCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            CostCategory::Discovery => "discovery",
            CostCategory::Migration => "migration",
            CostCategory::Development => "development",
            CostCategory::Integration => "integration",
            CostCategory::ReReference => "re_reference",
        }
    }
}

impl fmt::Display for CostCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One priced charge in a breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct LineItem {
    pub service_id: ServiceId,
    pub kind: ServiceKind,
    /// Depth of the call site this charge was priced at.
    pub level: Level,
    pub category: CostCategory,
    pub amount: MilliAmount,
}

/// The itemized result of one estimation run.
#[derive(Clone, Debug, PartialEq)]
pub struct Breakdown {
    pub mode: MeasureMode,
    /// All charges in evaluation order: leaves before their parent's
    /// integration item, subtrees in declaration order.
    pub line_items: Vec<LineItem>,
    /// Integration charges subtotaled by level; only levels that carry an
    /// integration item appear.
    pub per_level_integration: BTreeMap<Level, MilliAmount>,
    /// Exact sum of all line items.
    pub total: MilliAmount,
}

/// What one evaluation step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceAction {
    Divide,
    Estimate,
    Integrate,
    Sum,
}

impl TraceAction {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceAction::Divide => "DIVIDE",
            TraceAction::Estimate => "ESTIMATE",
            TraceAction::Integrate => "INTEGRATE",
            TraceAction::Sum => "SUM",
        }
    }
}

impl fmt::Display for TraceAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One numbered step of the evaluation narrative.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    /// 1-based, consecutive.
    pub ordinal: usize,
    pub action: TraceAction,
    /// The service acted on; absent for the final SUM.
    pub subject: Option<ServiceId>,
    pub detail: String,
    /// The amount this step contributed; absent for DIVIDE.
    pub amount: Option<MilliAmount>,
}

/// Failure of an estimation run.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    InvalidGraph(#[from] InvalidGraphError),
    #[error("`{id}` is not a combined service and cannot be decomposed")]
    NotCombined { id: ServiceId },
    #[error("estimator failed for `{service}`: {source}")]
    Metric {
        service: ServiceId,
        source: MetricError,
    },
    #[error("total overflows the exact integer range")]
    Overflow,
}

/// True when a node is priced directly rather than decomposed.
pub fn is_base(node: &ServiceNode) -> bool {
    node.kind != ServiceKind::Combined
}

/// The component services of a combined node, in declaration order.
pub fn decompose(node: &ServiceNode) -> Result<&[ServiceId], EngineError> {
    if node.kind == ServiceKind::Combined {
        Ok(&node.children)
    } else {
        Err(EngineError::NotCombined {
            id: node.id.clone(),
        })
    }
}

/// Exact sum of solved child subtotals plus one integration term.
pub fn compose(
    child_subtotals: &[MilliAmount],
    integration: MilliAmount,
) -> Result<MilliAmount, EngineError> {
    MilliAmount::checked_sum(child_subtotals.iter().copied().chain([integration]))
        .ok_or(EngineError::Overflow)
}

/// Estimates sequentially. See [`estimate_with_workers`].
pub fn estimate(graph: &ServiceGraph, metrics: &MetricSet) -> Result<Breakdown, EngineError> {
    estimate_with_workers(graph, metrics, 1)
}

/// Estimates the whole graph and returns the itemized breakdown.
///
/// `workers` ≤ 1 evaluates on the calling thread; larger values evaluate
/// sibling subtrees on a pool of that many threads. The result is
/// bit-identical either way.
pub fn estimate_with_workers(
    graph: &ServiceGraph,
    metrics: &MetricSet,
    workers: usize,
) -> Result<Breakdown, EngineError> {
    let run = evaluate(graph, metrics, workers)?;
    Ok(breakdown_of(&run, metrics.mode()))
}

/// Estimates and narrates every step: one DIVIDE per combined node before
/// its children, one ESTIMATE per leaf or repeat reference, one INTEGRATE
/// per combined node after its children, and a final SUM carrying the
/// total.
pub fn trace(graph: &ServiceGraph, metrics: &MetricSet) -> Result<Vec<TraceStep>, EngineError> {
    let run = evaluate(graph, metrics, 1)?;
    let breakdown = breakdown_of(&run, metrics.mode());
    let mut steps = Vec::new();
    trace_walk(&run, graph, &mut steps);
    steps.push(TraceStep {
        ordinal: steps.len() + 1,
        action: TraceAction::Sum,
        subject: None,
        detail: format!(
            "total {} {}",
            breakdown.total.to_decimal_string(),
            metrics.mode().unit_label()
        ),
        amount: Some(breakdown.total),
    });
    Ok(steps)
}

/// Computes the total by a deliberately different route than [`estimate`]:
/// a flat worklist classifies every call site, then per-service totals are
/// filled bottom-up in dependency order. Exists to cross-check the
/// recursive engine; the two must agree exactly on every valid input.
pub fn flat_oracle(graph: &ServiceGraph, metrics: &MetricSet) -> Result<MilliAmount, EngineError> {
    let report = graph.validate();
    if !report.is_ok() {
        return Err(EngineError::InvalidGraph(InvalidGraphError { report }));
    }

    // Pass 1: classify every call site reachable from the root. A site is
    // one listing of a service under one parent; the first site of each
    // service in scan order is its first encounter. The scan keeps
    // depth-first order with an explicit stack instead of building a tree.
    struct Site {
        parent: Option<ServiceId>,
        id: ServiceId,
        level: Level,
        repeat: bool,
    }
    let mut sites: Vec<Site> = Vec::new();
    let mut first_seen: HashSet<ServiceId> = HashSet::new();
    let mut worklist: Vec<(Option<ServiceId>, ServiceId, Level)> =
        vec![(None, graph.root().clone(), Level::ROOT)];
    while let Some((parent, id, level)) = worklist.pop() {
        let repeat = !first_seen.insert(id.clone());
        if !repeat {
            let node = &graph.nodes()[&id];
            for child in node.children.iter().rev() {
                worklist.push((Some(id.clone()), child.clone(), level.child()));
            }
        }
        sites.push(Site {
            parent,
            id,
            level,
            repeat,
        });
    }

    let first_level: HashMap<&ServiceId, Level> = sites
        .iter()
        .filter(|s| !s.repeat)
        .map(|s| (&s.id, s.level))
        .collect();

    // Pass 2: per-service totals with children settled strictly before
    // their parents — a dependency count over distinct children, drained
    // in sorted order for reproducibility.
    let reachable: Vec<&ServiceId> = first_level.keys().copied().collect();
    let mut pending: HashMap<&ServiceId, usize> = HashMap::new();
    let mut dependents: HashMap<&ServiceId, Vec<&ServiceId>> = HashMap::new();
    for &id in &reachable {
        let distinct: HashSet<&ServiceId> = graph.nodes()[id].children.iter().collect();
        pending.insert(id, distinct.len());
        for child in distinct {
            dependents.entry(child).or_default().push(id);
        }
    }
    let mut ready: Vec<&ServiceId> = reachable
        .iter()
        .copied()
        .filter(|id| pending[id] == 0)
        .collect();
    ready.sort_unstable();

    let mode = metrics.mode();
    let price_repeat = |id: &ServiceId, level: Level| -> Result<MilliAmount, EngineError> {
        let ctx = EstimatorContext {
            node: &graph.nodes()[id],
            level,
            repeat_encounter: true,
            measure_mode: mode,
        };
        metrics
            .estimate_discovery(&ctx)
            .map_err(|source| EngineError::Metric {
                service: id.clone(),
                source,
            })
    };

    let mut totals: HashMap<&ServiceId, MilliAmount> = HashMap::new();
    while let Some(id) = ready.pop() {
        let node = &graph.nodes()[id];
        let level = first_level[id];
        let total = if is_base(node) {
            price_leaf(node, level, metrics)?
        } else {
            // This parent's child listings, in declaration order, each
            // contributing either the child's full total (first-encounter
            // site) or a repeat price.
            let mut child_part = MilliAmount::ZERO;
            let mut order: Vec<&ServiceId> = Vec::new();
            let mut gathered: HashMap<&ServiceId, MilliAmount> = HashMap::new();
            for site in sites.iter().filter(|s| s.parent.as_ref() == Some(id)) {
                let child = &site.id;
                let contribution = if site.repeat {
                    price_repeat(child, site.level)?
                } else {
                    totals[child]
                };
                child_part = child_part
                    .checked_add(contribution)
                    .ok_or(EngineError::Overflow)?;
                match gathered.get_mut(child) {
                    Some(sum) => {
                        *sum = sum.checked_add(contribution).ok_or(EngineError::Overflow)?
                    }
                    None => {
                        order.push(child);
                        gathered.insert(child, contribution);
                    }
                }
            }
            let summaries: Vec<ChildSummary> = order
                .iter()
                .map(|child| {
                    let child_node = &graph.nodes()[*child];
                    let interface_cost = attr_number_or(child_node, "interface_cost", 1.0)
                        .map_err(|source| EngineError::Metric {
                            service: (*child).clone(),
                            source,
                        })?;
                    Ok(ChildSummary {
                        child_id: (*child).clone(),
                        child_kind: child_node.kind,
                        child_subtotal: gathered[*child],
                        interface_cost,
                    })
                })
                .collect::<Result<_, EngineError>>()?;
            let integration = metrics
                .estimate_integration(&summaries, level)
                .map_err(|source| EngineError::Metric {
                    service: id.clone(),
                    source,
                })?;
            child_part
                .checked_add(integration)
                .ok_or(EngineError::Overflow)?
        };
        totals.insert(id, total);
        for dependent in dependents.get(id).cloned().unwrap_or_default() {
            let n = pending.get_mut(dependent).expect("dependent is reachable");
            *n -= 1;
            if *n == 0 {
                ready.push(dependent);
                ready.sort_unstable();
            }
        }
    }

    Ok(totals[graph.root()])
}

/// One evaluated call site, mirroring the shape of the pre-pass plan.
enum EvalNode {
    /// First encounter of a basic service.
    Basic {
        id: ServiceId,
        kind: ServiceKind,
        level: Level,
        category: CostCategory,
        amount: MilliAmount,
    },
    /// Second or later reference to any service.
    Repeat {
        id: ServiceId,
        kind: ServiceKind,
        level: Level,
        amount: MilliAmount,
    },
    /// First encounter of a combined service.
    Combined {
        id: ServiceId,
        level: Level,
        children: Vec<EvalNode>,
        /// Count of distinct direct children, for the narrative.
        distinct_children: usize,
        integration: MilliAmount,
        subtotal: MilliAmount,
    },
}

impl EvalNode {
    /// This site's contribution to its parent.
    fn contribution(&self) -> MilliAmount {
        match self {
            EvalNode::Basic { amount, .. } | EvalNode::Repeat { amount, .. } => *amount,
            EvalNode::Combined { subtotal, .. } => *subtotal,
        }
    }

    fn id(&self) -> &ServiceId {
        match self {
            EvalNode::Basic { id, .. }
            | EvalNode::Repeat { id, .. }
            | EvalNode::Combined { id, .. } => id,
        }
    }
}

/// The call-site plan fixed by the sequential pre-pass.
enum PlanNode {
    Basic { id: ServiceId, level: Level },
    Repeat { id: ServiceId, level: Level },
    Combined {
        id: ServiceId,
        level: Level,
        children: Vec<PlanNode>,
    },
}

fn build_plan(graph: &ServiceGraph) -> Result<PlanNode, EngineError> {
    let report = graph.validate();
    if !report.is_ok() {
        return Err(EngineError::InvalidGraph(InvalidGraphError { report }));
    }
    let mut seen = HashSet::new();
    Ok(build_plan_node(graph, graph.root(), Level::ROOT, &mut seen))
}

fn build_plan_node(
    graph: &ServiceGraph,
    id: &ServiceId,
    level: Level,
    seen: &mut HashSet<ServiceId>,
) -> PlanNode {
    if !seen.insert(id.clone()) {
        return PlanNode::Repeat {
            id: id.clone(),
            level,
        };
    }
    let node = &graph.nodes()[id];
    if is_base(node) {
        PlanNode::Basic {
            id: id.clone(),
            level,
        }
    } else {
        let children = node
            .children
            .iter()
            .map(|child| build_plan_node(graph, child, level.child(), seen))
            .collect();
        PlanNode::Combined {
            id: id.clone(),
            level,
            children,
        }
    }
}

fn price_leaf(
    node: &ServiceNode,
    level: Level,
    metrics: &MetricSet,
) -> Result<MilliAmount, EngineError> {
    let ctx = EstimatorContext {
        node,
        level,
        repeat_encounter: false,
        measure_mode: metrics.mode(),
    };
    let priced = match node.kind {
        ServiceKind::Available => metrics.estimate_discovery(&ctx),
        ServiceKind::Migratable => metrics.estimate_migration(&ctx),
        ServiceKind::New => metrics.estimate_development(&ctx),
        ServiceKind::Combined => unreachable!("combined nodes are never priced as leaves"),
    };
    priced.map_err(|source| EngineError::Metric {
        service: node.id.clone(),
        source,
    })
}

fn evaluate(
    graph: &ServiceGraph,
    metrics: &MetricSet,
    workers: usize,
) -> Result<EvalNode, EngineError> {
    let plan = build_plan(graph)?;
    if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool construction");
        pool.install(|| eval_node(&plan, graph, metrics, true))
    } else {
        eval_node(&plan, graph, metrics, false)
    }
}

fn eval_node(
    plan: &PlanNode,
    graph: &ServiceGraph,
    metrics: &MetricSet,
    parallel: bool,
) -> Result<EvalNode, EngineError> {
    match plan {
        PlanNode::Basic { id, level } => {
            let node = &graph.nodes()[id];
            let category = match node.kind {
                ServiceKind::Available => CostCategory::Discovery,
                ServiceKind::Migratable => CostCategory::Migration,
                ServiceKind::New => CostCategory::Development,
                ServiceKind::Combined => unreachable!(),
            };
            Ok(EvalNode::Basic {
                id: id.clone(),
                kind: node.kind,
                level: *level,
                category,
                amount: price_leaf(node, *level, metrics)?,
            })
        }
        PlanNode::Repeat { id, level } => {
            let node = &graph.nodes()[id];
            let ctx = EstimatorContext {
                node,
                level: *level,
                repeat_encounter: true,
                measure_mode: metrics.mode(),
            };
            let amount = metrics
                .estimate_discovery(&ctx)
                .map_err(|source| EngineError::Metric {
                    service: id.clone(),
                    source,
                })?;
            Ok(EvalNode::Repeat {
                id: id.clone(),
                kind: node.kind,
                level: *level,
                amount,
            })
        }
        PlanNode::Combined {
            id,
            level,
            children,
        } => {
            // Evaluate children first — in parallel when allowed; results
            // are collected in declaration order and any error is reported
            // from the first failing child, so parallelism cannot change
            // the outcome.
            let results: Vec<Result<EvalNode, EngineError>> = if parallel && children.len() > 1 {
                children
                    .par_iter()
                    .map(|child| eval_node(child, graph, metrics, parallel))
                    .collect()
            } else {
                children
                    .iter()
                    .map(|child| eval_node(child, graph, metrics, parallel))
                    .collect()
            };
            let mut evaluated = Vec::with_capacity(results.len());
            for result in results {
                evaluated.push(result?);
            }

            // Integration sees one summary per distinct direct child, in
            // first-declaration order; a child listed twice contributes the
            // sum of its sites (first encounter plus re-references).
            let mut order: Vec<&ServiceId> = Vec::new();
            let mut gathered: BTreeMap<&ServiceId, MilliAmount> = BTreeMap::new();
            for child in &evaluated {
                let amount = child.contribution();
                match gathered.get_mut(child.id()) {
                    Some(sum) => {
                        *sum = sum.checked_add(amount).ok_or(EngineError::Overflow)?;
                    }
                    None => {
                        order.push(child.id());
                        gathered.insert(child.id(), amount);
                    }
                }
            }
            let summaries: Vec<ChildSummary> = order
                .iter()
                .map(|child_id| {
                    let child_node = &graph.nodes()[*child_id];
                    let interface_cost = attr_number_or(child_node, "interface_cost", 1.0)
                        .map_err(|source| EngineError::Metric {
                            service: (*child_id).clone(),
                            source,
                        })?;
                    Ok(ChildSummary {
                        child_id: (*child_id).clone(),
                        child_kind: child_node.kind,
                        child_subtotal: gathered[*child_id],
                        interface_cost,
                    })
                })
                .collect::<Result<_, EngineError>>()?;

            let integration = metrics
                .estimate_integration(&summaries, *level)
                .map_err(|source| EngineError::Metric {
                    service: id.clone(),
                    source,
                })?;
            let child_subtotals: Vec<MilliAmount> =
                evaluated.iter().map(EvalNode::contribution).collect();
            let subtotal = compose(&child_subtotals, integration)?;
            Ok(EvalNode::Combined {
                id: id.clone(),
                level: *level,
                distinct_children: summaries.len(),
                children: evaluated,
                integration,
                subtotal,
            })
        }
    }
}

fn breakdown_of(run: &EvalNode, mode: MeasureMode) -> Breakdown {
    let mut line_items = Vec::new();
    collect_items(run, &mut line_items);
    let total = MilliAmount::checked_sum(line_items.iter().map(|item| item.amount))
        .expect("itemized total fits: every subtotal was composed without overflow");
    assert_eq!(
        total,
        run.contribution(),
        "line items must conserve the composed total exactly"
    );
    let mut per_level_integration = BTreeMap::new();
    for item in &line_items {
        if item.category == CostCategory::Integration {
            let slot = per_level_integration
                .entry(item.level)
                .or_insert(MilliAmount::ZERO);
            *slot = slot
                .checked_add(item.amount)
                .expect("level subtotal is bounded by the conserved total");
        }
    }
    Breakdown {
        mode,
        line_items,
        per_level_integration,
        total,
    }
}

fn collect_items(node: &EvalNode, items: &mut Vec<LineItem>) {
    match node {
        EvalNode::Basic {
            id,
            kind,
            level,
            category,
            amount,
        } => items.push(LineItem {
            service_id: id.clone(),
            kind: *kind,
            level: *level,
            category: *category,
            amount: *amount,
        }),
        EvalNode::Repeat {
            id,
            kind,
            level,
            amount,
        } => items.push(LineItem {
            service_id: id.clone(),
            kind: *kind,
            level: *level,
            category: CostCategory::ReReference,
            amount: *amount,
        }),
        EvalNode::Combined {
            id,
            level,
            children,
            integration,
            ..
        } => {
            for child in children {
                collect_items(child, items);
            }
            items.push(LineItem {
                service_id: id.clone(),
                kind: ServiceKind::Combined,
                level: *level,
                category: CostCategory::Integration,
                amount: *integration,
            });
        }
    }
}

fn trace_walk(node: &EvalNode, graph: &ServiceGraph, steps: &mut Vec<TraceStep>) {
    match node {
        EvalNode::Basic {
            id,
            kind,
            level: _,
            category,
            amount,
        } => {
            let slot = match category {
                CostCategory::Discovery => "discovery",
                CostCategory::Migration => "migration",
                CostCategory::Development => "development",
                _ => unreachable!("basic first encounters price by a leaf slot"),
            };
            steps.push(TraceStep {
                ordinal: steps.len() + 1,
                action: TraceAction::Estimate,
                subject: Some(id.clone()),
                detail: format!("{kind} service priced by {slot}"),
                amount: Some(*amount),
            });
        }
        EvalNode::Repeat {
            id, kind, amount, ..
        } => {
            steps.push(TraceStep {
                ordinal: steps.len() + 1,
                action: TraceAction::Estimate,
                subject: Some(id.clone()),
                detail: format!("re-reference of {kind} service priced by discovery"),
                amount: Some(*amount),
            });
        }
        EvalNode::Combined {
            id,
            level,
            children,
            distinct_children,
            integration,
            ..
        } => {
            let declared = &graph.nodes()[id].children;
            let listed: Vec<&str> = declared.iter().map(ServiceId::as_str).collect();
            steps.push(TraceStep {
                ordinal: steps.len() + 1,
                action: TraceAction::Divide,
                subject: Some(id.clone()),
                detail: format!(
                    "into {} component services: {}",
                    declared.len(),
                    listed.join(", ")
                ),
                amount: None,
            });
            for child in children {
                trace_walk(child, graph, steps);
            }
            steps.push(TraceStep {
                ordinal: steps.len() + 1,
                action: TraceAction::Integrate,
                subject: Some(id.clone()),
                detail: format!(
                    "{} component services integrated at level {}",
                    distinct_children, level
                ),
                amount: Some(*integration),
            });
        }
    }
}
