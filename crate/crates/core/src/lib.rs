//! Divide-and-conquer cost and size estimation for service-oriented
//! systems.
//!
//! A project is declared as a graph of classified services — available,
//! migratable, new, or combined — and priced by four pluggable estimator
//! slots: discovery, migration, development, and integration. Estimation
//! recursively decomposes combined services, prices each basic service at
//! its first encounter, charges re-references through the discovery slot,
//! and composes subtotals level by level into an exact, itemized total.
//!
//! All amounts are integer milli-units (0.001 person-hour or 0.001 size
//! point) with rounding applied once at each estimator boundary, so
//! aggregation is exact, order-invariant, and safe to parallelize.

pub mod amount;
pub mod cli;
pub mod doc;
pub mod engine;
pub mod graph;
pub mod metrics;
pub mod report;

#[cfg(test)]
mod testgraphs;

pub use amount::MilliAmount;
pub use engine::{
    compose, decompose, estimate, estimate_with_workers, flat_oracle, is_base, trace, Breakdown,
    CostCategory, EngineError, LineItem, TraceAction, TraceStep,
};
pub use graph::{
    Diagnostic, DiagnosticCode, InvalidGraphError, Level, Scalar, ServiceGraph, ServiceId,
    ServiceKind, ServiceNode, ValidationReport,
};
pub use metrics::{
    builtin_registry, data_complexity_factor, linthicum_cost, service_points_term, unit_metrics,
    ChildSummary, DataStorageTechnology, EstimatorContext, IntegrationEstimator, LeafEstimator,
    MeasureMode, MetricError, MetricSet, Params,
};
pub use report::{diff, ChangedItem, ModeMismatchError, ScenarioDiff};
