//! Rendering of breakdowns, traces, and scenario comparisons.
//!
//! Two output families: fixed-width text tables for people, and canonical
//! JSON for machines. Canonical means deterministic — object keys sorted,
//! compact separators, one trailing newline, amounts carried both as
//! integer milli-units and as derived decimal strings — so identical
//! inputs always serialize to byte-identical documents, which golden tests
//! and the concurrency contract both rely on.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::amount::MilliAmount;
use crate::engine::{Breakdown, CostCategory, TraceAction, TraceStep};
use crate::graph::ServiceId;
use crate::metrics::MeasureMode;

/// The difference between two estimation runs over the same measure mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDiff {
    pub mode: MeasureMode,
    pub base_total: MilliAmount,
    pub variant_total: MilliAmount,
    /// variant − base, in signed milli-units.
    pub delta_milli: i64,
    /// Exactly the charges that differ, in service-id order.
    pub changed_items: Vec<ChangedItem>,
}

/// One charge that differs between base and variant: absent on one side,
/// reclassified, or re-priced.
#[derive(Clone, Debug, PartialEq)]
pub struct ChangedItem {
    pub service_id: ServiceId,
    pub base_category: Option<CostCategory>,
    pub variant_category: Option<CostCategory>,
    pub base_amount: Option<MilliAmount>,
    pub variant_amount: Option<MilliAmount>,
}

/// Comparing runs that measure different things is refused.
#[derive(Debug, Error, PartialEq)]
#[error("cannot diff a {base} breakdown against a {variant} breakdown")]
pub struct ModeMismatchError {
    pub base: MeasureMode,
    pub variant: MeasureMode,
}

/// How a line item participates in diff matching: primary pricing of a
/// service, its integration charge, or its accumulated re-references.
/// Matching on the role rather than the exact category lets a reclassified
/// service (say development → discovery) surface as one changed item
/// instead of an unrelated removal and addition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum DiffRole {
    Primary,
    Integration,
    ReReference,
}

fn role_of(category: CostCategory) -> DiffRole {
    match category {
        CostCategory::Discovery | CostCategory::Migration | CostCategory::Development => {
            DiffRole::Primary
        }
        CostCategory::Integration => DiffRole::Integration,
        CostCategory::ReReference => DiffRole::ReReference,
    }
}

/// Per-service/role aggregation of one breakdown's items. Re-reference
/// amounts are summed per service so a service listed three times compares
/// as one figure.
fn aggregate(
    breakdown: &Breakdown,
) -> std::collections::BTreeMap<(ServiceId, DiffRole), (CostCategory, MilliAmount)> {
    let mut map = std::collections::BTreeMap::new();
    for item in &breakdown.line_items {
        let key = (item.service_id.clone(), role_of(item.category));
        let entry = map.entry(key).or_insert((item.category, MilliAmount::ZERO));
        entry.1 = entry
            .1
            .checked_add(item.amount)
            .expect("aggregates are bounded by the conserved total");
    }
    map
}

/// Compares two breakdowns of the same mode: exact signed delta plus the
/// list of charges that differ in amount or classification.
pub fn diff(base: &Breakdown, variant: &Breakdown) -> Result<ScenarioDiff, ModeMismatchError> {
    if base.mode != variant.mode {
        return Err(ModeMismatchError {
            base: base.mode,
            variant: variant.mode,
        });
    }
    let base_items = aggregate(base);
    let variant_items = aggregate(variant);

    let mut keys: Vec<&(ServiceId, DiffRole)> =
        base_items.keys().chain(variant_items.keys()).collect();
    keys.sort();
    keys.dedup();

    let mut changed_items = Vec::new();
    for key in keys {
        let b = base_items.get(key);
        let v = variant_items.get(key);
        let differs = match (b, v) {
            (Some(b), Some(v)) => b != v,
            _ => true,
        };
        if differs {
            changed_items.push(ChangedItem {
                service_id: key.0.clone(),
                base_category: b.map(|(c, _)| *c),
                variant_category: v.map(|(c, _)| *c),
                base_amount: b.map(|(_, a)| *a),
                variant_amount: v.map(|(_, a)| *a),
            });
        }
    }

    let delta_milli = variant.total.milli() as i64 - base.total.milli() as i64;
    Ok(ScenarioDiff {
        mode: base.mode,
        base_total: base.total,
        variant_total: variant.total,
        delta_milli,
        changed_items,
    })
}

/// Rounds a monetary value half-even to two decimals and renders it.
fn money_string(amount: MilliAmount, rate: f64) -> String {
    let value = amount.units_f64() * rate;
    let cents = (value * 100.0).round_ties_even();
    format!("{:.2}", cents / 100.0)
}

/// Renders a breakdown as a fixed-width table: one row per charge,
/// integration subtotals per level, and a total row. `currency_rate`
/// (per person-hour) adds a monetary column rounded half-even to two
/// decimals.
pub fn render_table(breakdown: &Breakdown, currency_rate: Option<f64>) -> String {
    let unit = breakdown.mode.unit_label();
    let mut rows: Vec<[String; 5]> = Vec::new();
    for item in &breakdown.line_items {
        rows.push([
            item.service_id.to_string(),
            item.kind.to_string(),
            item.level.to_string(),
            item.category.to_string(),
            item.amount.to_decimal_string(),
        ]);
    }

    let mut widths = [7usize, 4, 5, 8, unit.len().max(6)];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }

    let mut out = String::new();
    let headers = ["SERVICE", "KIND", "LEVEL", "CATEGORY", unit];
    for (i, (header, w)) in headers.iter().zip(widths).enumerate() {
        if i > 0 {
            out.push_str("  ");
        }
        let _ = write!(out, "{header:<w$}");
    }
    if currency_rate.is_some() {
        out.push_str("  MONEY");
    }
    out.push('\n');

    for (row, item) in rows.iter().zip(&breakdown.line_items) {
        for (i, (cell, w)) in row.iter().zip(widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{cell:<w$}");
        }
        if let Some(rate) = currency_rate {
            let _ = write!(out, "  {}", money_string(item.amount, rate));
        }
        out.push('\n');
    }

    for (level, amount) in &breakdown.per_level_integration {
        let _ = writeln!(
            out,
            "integration at level {level}: {} {unit}",
            amount.to_decimal_string()
        );
    }
    let _ = write!(
        out,
        "TOTAL: {} {unit}",
        breakdown.total.to_decimal_string()
    );
    if let Some(rate) = currency_rate {
        let _ = write!(out, "  ({})", money_string(breakdown.total, rate));
    }
    out.push('\n');
    out
}

/// Renders a trace as numbered lines, one per step:
/// `N. ACTION subject — detail [amount unit]`.
pub fn render_trace_text(steps: &[TraceStep], mode: MeasureMode) -> String {
    let unit = mode.unit_label();
    let mut out = String::new();
    for step in steps {
        let _ = write!(out, "{}. {}", step.ordinal, step.action);
        if let Some(subject) = &step.subject {
            let _ = write!(out, " {subject}");
        }
        let _ = write!(out, " — {}", step.detail);
        if step.action != TraceAction::Sum {
            if let Some(amount) = step.amount {
                let _ = write!(out, " [{} {unit}]", amount.to_decimal_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Renders a scenario diff as human-readable text.
pub fn render_diff_text(diff: &ScenarioDiff) -> String {
    let unit = diff.mode.unit_label();
    let sign = if diff.delta_milli < 0 { "-" } else { "+" };
    let magnitude = MilliAmount::from_milli(diff.delta_milli.unsigned_abs());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "base total:    {} {unit}",
        diff.base_total.to_decimal_string()
    );
    let _ = writeln!(
        out,
        "variant total: {} {unit}",
        diff.variant_total.to_decimal_string()
    );
    let _ = writeln!(
        out,
        "delta:         {sign}{} {unit}",
        magnitude.to_decimal_string()
    );
    if diff.changed_items.is_empty() {
        let _ = writeln!(out, "no changed items");
    } else {
        let _ = writeln!(out, "changed items:");
        for item in &diff.changed_items {
            let side = |category: Option<CostCategory>, amount: Option<MilliAmount>| match (
                category, amount,
            ) {
                (Some(c), Some(a)) => format!("{c} {}", a.to_decimal_string()),
                _ => "absent".to_owned(),
            };
            let _ = writeln!(
                out,
                "  {}: {} -> {}",
                item.service_id,
                side(item.base_category, item.base_amount),
                side(item.variant_category, item.variant_amount)
            );
        }
    }
    out
}

fn amount_fields(map: &mut Map<String, Value>, prefix: &str, amount: MilliAmount) {
    map.insert(format!("{prefix}_milli",), json!(amount.milli()));
    map.insert(prefix.to_owned(), json!(amount.to_decimal_string()));
}

/// Canonical JSON document for a breakdown.
pub fn render_breakdown_json(breakdown: &Breakdown) -> String {
    let items: Vec<Value> = breakdown
        .line_items
        .iter()
        .map(|item| {
            json!({
                "service": item.service_id.as_str(),
                "kind": item.kind.as_str(),
                "level": item.level.depth(),
                "category": item.category.as_str(),
                "milli": item.amount.milli(),
                "amount": item.amount.to_decimal_string(),
            })
        })
        .collect();
    let levels: Vec<Value> = breakdown
        .per_level_integration
        .iter()
        .map(|(level, amount)| {
            json!({
                "level": level.depth(),
                "milli": amount.milli(),
                "amount": amount.to_decimal_string(),
            })
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("mode".to_owned(), json!(breakdown.mode.as_str()));
    doc.insert("unit".to_owned(), json!(breakdown.mode.unit_label()));
    doc.insert("items".to_owned(), Value::Array(items));
    doc.insert("per_level_integration".to_owned(), Value::Array(levels));
    amount_fields(&mut doc, "total", breakdown.total);
    finish(doc)
}

/// Canonical JSON document for a trace.
pub fn render_trace_json(steps: &[TraceStep], mode: MeasureMode) -> String {
    let rendered: Vec<Value> = steps
        .iter()
        .map(|step| {
            let mut m = Map::new();
            m.insert("ordinal".to_owned(), json!(step.ordinal));
            m.insert("action".to_owned(), json!(step.action.as_str()));
            if let Some(subject) = &step.subject {
                m.insert("subject".to_owned(), json!(subject.as_str()));
            }
            m.insert("detail".to_owned(), json!(step.detail));
            if let Some(amount) = step.amount {
                amount_fields(&mut m, "amount", amount);
            }
            Value::Object(m)
        })
        .collect();
    let total = steps
        .iter()
        .rev()
        .find(|s| s.action == TraceAction::Sum)
        .and_then(|s| s.amount)
        .unwrap_or(MilliAmount::ZERO);
    let mut doc = Map::new();
    doc.insert("mode".to_owned(), json!(mode.as_str()));
    doc.insert("unit".to_owned(), json!(mode.unit_label()));
    doc.insert("steps".to_owned(), Value::Array(rendered));
    amount_fields(&mut doc, "total", total);
    finish(doc)
}

/// Canonical JSON document for a scenario diff.
pub fn render_diff_json(diff: &ScenarioDiff) -> String {
    let changed: Vec<Value> = diff
        .changed_items
        .iter()
        .map(|item| {
            let mut m = Map::new();
            m.insert("service".to_owned(), json!(item.service_id.as_str()));
            if let Some(category) = item.base_category {
                m.insert("base_category".to_owned(), json!(category.as_str()));
            }
            if let Some(category) = item.variant_category {
                m.insert("variant_category".to_owned(), json!(category.as_str()));
            }
            if let Some(amount) = item.base_amount {
                amount_fields(&mut m, "base_amount", amount);
            }
            if let Some(amount) = item.variant_amount {
                amount_fields(&mut m, "variant_amount", amount);
            }
            Value::Object(m)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("mode".to_owned(), json!(diff.mode.as_str()));
    doc.insert("unit".to_owned(), json!(diff.mode.unit_label()));
    amount_fields(&mut doc, "base_total", diff.base_total);
    amount_fields(&mut doc, "variant_total", diff.variant_total);
    doc.insert("delta_milli".to_owned(), json!(diff.delta_milli));
    doc.insert("changed_items".to_owned(), Value::Array(changed));
    finish(doc)
}

/// Canonical JSON document for a validation report.
pub fn render_validation_json(report: &crate::graph::ValidationReport) -> String {
    let render = |diags: &[crate::graph::Diagnostic]| -> Value {
        Value::Array(
            diags
                .iter()
                .map(|d| {
                    let mut m = Map::new();
                    m.insert("code".to_owned(), json!(d.code.as_str()));
                    if let Some(node) = &d.node {
                        m.insert("node".to_owned(), json!(node.as_str()));
                    }
                    m.insert("message".to_owned(), json!(d.message));
                    Value::Object(m)
                })
                .collect(),
        )
    };
    let mut doc = Map::new();
    doc.insert("ok".to_owned(), json!(report.is_ok()));
    doc.insert("errors".to_owned(), render(&report.errors));
    doc.insert("warnings".to_owned(), render(&report.warnings));
    finish(doc)
}

/// Serializes with sorted keys, compactly, newline-terminated.
fn finish(doc: Map<String, Value>) -> String {
    let mut text = serde_json::to_string(&Value::Object(doc))
        .expect("report documents contain no non-serializable values");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{estimate, trace};
    use crate::graph::{ServiceGraph, ServiceKind, ServiceNode};
    use crate::metrics::{
        unit_metrics, LevelWeightedIntegration, Params, TableDiscovery,
    };
    use crate::testgraphs::railco;

    fn single_leaf() -> ServiceGraph {
        ServiceGraph::new(
            ServiceId::new("only"),
            [ServiceNode::new("only", ServiceKind::New)],
        )
        .unwrap()
    }

    #[test]
    fn table_total_row() {
        let breakdown = estimate(&railco(), &unit_metrics()).unwrap();
        let table = render_table(&breakdown, None);
        assert!(table.ends_with("TOTAL: 12.000 PH\n"), "table:\n{table}");
        assert!(table.contains("integration at level 0: 2.000 PH"));
        assert!(table.contains("integration at level 1: 6.000 PH"));
        // One header + nine items + two level rows + total.
        assert_eq!(table.lines().count(), 13);
    }

    #[test]
    fn table_money_column() {
        let breakdown = estimate(&single_leaf(), &unit_metrics()).unwrap();
        let table = render_table(&breakdown, Some(100.0));
        assert!(table.contains("100.00"), "table:\n{table}");
        assert!(table.contains("MONEY"));
    }

    #[test]
    fn table_size_mode_label() {
        let graph = ServiceGraph::new(
            ServiceId::new("only"),
            [ServiceNode::new("only", ServiceKind::New).with_attr("size_points", 3.0)],
        )
        .unwrap();
        let metrics = crate::metrics::MetricSet::with_unit_slots(MeasureMode::Size)
            .with_e3(crate::metrics::ServicePoints, Params::new());
        let breakdown = estimate(&graph, &metrics).unwrap();
        let table = render_table(&breakdown, None);
        assert!(table.contains("pts"));
        assert!(!table.contains("PH"));
    }

    #[test]
    fn breakdown_json_is_canonical() {
        let breakdown = estimate(&railco(), &unit_metrics()).unwrap();
        let first = render_breakdown_json(&breakdown);
        let second = render_breakdown_json(&breakdown);
        assert_eq!(first, second);
        assert!(first.ends_with('\n'));
        assert!(first.contains("\"total_milli\":12000"));
        // Keys are sorted: mode before total, items before unit.
        let value: serde_json::Value = serde_json::from_str(&first).unwrap();
        assert_eq!(value["items"].as_array().unwrap().len(), 9);
    }

    #[test]
    fn trace_json_step_count() {
        let steps = trace(&railco(), &unit_metrics()).unwrap();
        let doc = render_trace_json(&steps, MeasureMode::Cost);
        let value: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(value["steps"].as_array().unwrap().len(), 13);
        assert_eq!(value["total_milli"], 12000);
    }

    #[test]
    fn trace_text_format() {
        let steps = trace(&railco(), &unit_metrics()).unwrap();
        let text = render_trace_text(&steps, MeasureMode::Cost);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        assert!(lines[0].starts_with("1. DIVIDE AutomationSystem — "));
        assert!(lines[2].ends_with("[1.000 PH]"));
        assert_eq!(lines[12], "13. SUM — total 12.000 PH");
    }

    #[test]
    fn diff_of_identical_runs_is_empty() {
        let breakdown = estimate(&railco(), &unit_metrics()).unwrap();
        let d = diff(&breakdown, &breakdown).unwrap();
        assert_eq!(d.delta_milli, 0);
        assert!(d.changed_items.is_empty());
    }

    #[test]
    fn diff_is_antisymmetric() {
        let base = estimate(&railco(), &unit_metrics()).unwrap();
        let variant = estimate(&single_leaf(), &unit_metrics()).unwrap();
        let forward = diff(&base, &variant).unwrap();
        let backward = diff(&variant, &base).unwrap();
        assert_eq!(forward.delta_milli, -backward.delta_milli);
        assert_eq!(forward.changed_items.len(), backward.changed_items.len());
    }

    #[test]
    fn diff_surfaces_reclassification_as_one_item() {
        // Reclassify PollingNotification from built-from-scratch to already
        // available, with discovery priced at the same 1 PH the unit
        // metrics charge — so only the category moves, not the money.
        let base_graph = railco();
        let nodes: Vec<ServiceNode> = base_graph
            .nodes()
            .values()
            .cloned()
            .map(|mut node| {
                if node.id.as_str() == "PollingNotification" {
                    node.kind = ServiceKind::Available;
                }
                node
            })
            .collect();
        let variant_graph = ServiceGraph::new(base_graph.root().clone(), nodes).unwrap();

        let metrics = unit_metrics().with_e1(TableDiscovery, Params::new());
        let base = estimate(&base_graph, &metrics).unwrap();
        let variant = estimate(&variant_graph, &metrics).unwrap();
        let d = diff(&base, &variant).unwrap();
        assert_eq!(d.delta_milli, 0);
        assert_eq!(d.changed_items.len(), 1);
        let item = &d.changed_items[0];
        assert_eq!(item.service_id.as_str(), "PollingNotification");
        assert_eq!(item.base_category, Some(CostCategory::Development));
        assert_eq!(item.variant_category, Some(CostCategory::Discovery));
        assert_eq!(item.base_amount, item.variant_amount);
    }

    #[test]
    fn diff_reports_doubled_integration() {
        let base = estimate(&railco(), &unit_metrics()).unwrap();
        let doubled = unit_metrics().with_e4(
            LevelWeightedIntegration,
            Params::new().set("level_weight_default", 2.0),
        );
        let variant = estimate(&railco(), &doubled).unwrap();
        let d = diff(&base, &variant).unwrap();
        assert_eq!(d.delta_milli, 8_000);
        assert_eq!(d.changed_items.len(), 3);
        assert!(d
            .changed_items
            .iter()
            .all(|i| i.base_category == Some(CostCategory::Integration)));
    }

    #[test]
    fn diff_rejects_mixed_modes() {
        let cost = estimate(&single_leaf(), &unit_metrics()).unwrap();
        let size = estimate(
            &single_leaf(),
            &crate::metrics::MetricSet::with_unit_slots(MeasureMode::Size),
        )
        .unwrap();
        assert!(diff(&cost, &size).is_err());
    }

    #[test]
    fn diff_json_carries_signed_delta() {
        let base = estimate(&railco(), &unit_metrics()).unwrap();
        let variant = estimate(&single_leaf(), &unit_metrics()).unwrap();
        let d = diff(&base, &variant).unwrap();
        let doc = render_diff_json(&d);
        let value: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(value["delta_milli"], -11_000);
        assert_eq!(value["base_total_milli"], 12_000);
    }

    #[test]
    fn validation_json_shape() {
        let report = railco().validate();
        let doc = render_validation_json(&report);
        let value: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(value["ok"], true);
        assert_eq!(value["errors"].as_array().unwrap().len(), 0);
    }
}
