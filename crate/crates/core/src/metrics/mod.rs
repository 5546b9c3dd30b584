//! Estimator slots and measurement primitives.
//!
//! An estimation run binds four slots: E1 prices discovery of already
//! available services, E2 prices migration of legacy components, E3 prices
//! development from scratch, and E4 prices the integration work of a
//! combined service. The same four slots serve two measure modes — effort
//! in person-hours or size in service points — so switching a project from
//! costing to sizing is a matter of binding different estimators, not of
//! changing the traversal.
//!
//! Estimators are pure: identical inputs give identical outputs, and a
//! [`MetricSet`] is immutable after construction, so one set can be shared
//! across concurrent evaluation workers.

mod builtins;

pub use builtins::{
    builtin_registry, unit_metrics, BuiltinRegistry, FactorMigration, LevelWeightedIntegration,
    PowerLawDevelopment, ResolveError, ServicePoints, SlotName, TableDiscovery, Unit,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::amount::MilliAmount;
use crate::graph::{Level, Scalar, ServiceId, ServiceKind, ServiceNode};

/// What an estimation run measures: effort in person-hours, or size in
/// service points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasureMode {
    Cost,
    Size,
}

impl MeasureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureMode::Cost => "cost",
            MeasureMode::Size => "size",
        }
    }

    /// Unit label used in rendered output.
    pub fn unit_label(self) -> &'static str {
        match self {
            MeasureMode::Cost => "PH",
            MeasureMode::Size => "pts",
        }
    }
}

impl fmt::Display for MeasureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Failure of a single estimator call or of the rounding boundary that
/// converts its result to an exact amount.
#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    /// A computed amount was NaN or infinite.
    #[error("computed amount is not finite ({value})")]
    NonFinite { value: f64 },
    /// A computed amount came out negative; estimates must be ≥ 0.
    #[error("computed amount is negative ({value})")]
    NegativeAmount { value: f64 },
    /// A computed amount exceeds the exactly-representable integer range.
    #[error("computed amount overflows the exact integer range")]
    Overflow,
    /// A `discovery_technique` value with no entry in the lookup table.
    #[error("unknown discovery technique `{value}`")]
    UnknownTechnique { value: String },
    /// A `box_type` value outside black/grey/white.
    #[error("unknown migration box type `{value}`")]
    UnknownBoxType { value: String },
    /// A size input below zero.
    #[error("negative size ({value})")]
    NegativeSize { value: f64 },
    /// A cost-driver multiplier below zero.
    #[error("negative multiplier `{name}` ({value})")]
    NegativeMultiplier { name: String, value: f64 },
    /// A scalar input below zero where only non-negative values make sense.
    #[error("negative {name} ({value})")]
    NegativeInput { name: &'static str, value: f64 },
    /// Integration was asked to price an empty child list.
    #[error("integration estimator called with no children")]
    EmptyChildren,
    /// A data storage technology tag outside the known set.
    #[error("unknown data storage technology `{value}`")]
    UnknownTechnology { value: String },
    /// An attribute or parameter was present with the wrong scalar type.
    #[error("{subject} must be a {expected}, got {found}")]
    WrongType {
        subject: String,
        expected: &'static str,
        found: &'static str,
    },
}

/// Named scalar parameters for one estimator slot.
///
/// Parameters are a flat map; estimators document the keys they read and
/// the defaults that apply when a key is absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, Scalar>);

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    /// Builder-style insert.
    pub fn set(mut self, name: impl Into<String>, value: impl Into<Scalar>) -> Self {
        self.0.insert(name.into(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&Scalar> {
        self.0.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Scalar)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Numeric parameter, or `default` when absent. Present non-numbers are
    /// type errors, not silently ignored.
    pub fn number_or(&self, name: &str, default: f64) -> Result<f64, MetricError> {
        match self.0.get(name) {
            None => Ok(default),
            Some(Scalar::Number(n)) => Ok(*n),
            Some(other) => Err(MetricError::WrongType {
                subject: format!("parameter `{name}`"),
                expected: "number",
                found: other.type_name(),
            }),
        }
    }
}

impl<K: Into<String>, V: Into<Scalar>> FromIterator<(K, V)> for Params {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Params(
            iter.into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        )
    }
}

/// Numeric attribute of a node, or `default` when absent.
pub(crate) fn attr_number_or(
    node: &ServiceNode,
    name: &str,
    default: f64,
) -> Result<f64, MetricError> {
    match node.attr(name) {
        None => Ok(default),
        Some(Scalar::Number(n)) => Ok(*n),
        Some(other) => Err(MetricError::WrongType {
            subject: format!("attribute `{name}` of `{}`", node.id),
            expected: "number",
            found: other.type_name(),
        }),
    }
}

/// String attribute of a node, or `default` when absent.
pub(crate) fn attr_str_or<'n>(
    node: &'n ServiceNode,
    name: &str,
    default: &'static str,
) -> Result<&'n str, MetricError> {
    match node.attr(name) {
        None => Ok(default),
        Some(Scalar::String(s)) => Ok(s),
        Some(other) => Err(MetricError::WrongType {
            subject: format!("attribute `{name}` of `{}`", node.id),
            expected: "string",
            found: other.type_name(),
        }),
    }
}

/// Everything a leaf estimator may see about the call site.
#[derive(Clone, Copy, Debug)]
pub struct EstimatorContext<'a> {
    pub node: &'a ServiceNode,
    /// Depth of this call site beneath the root.
    pub level: Level,
    /// True for the second and later references to the same service;
    /// repeat references are priced by the discovery slot regardless of the
    /// service's kind.
    pub repeat_encounter: bool,
    pub measure_mode: MeasureMode,
}

/// What the integration estimator sees of one direct child: who it is and
/// what its subtree contributed at this site.
#[derive(Clone, Debug, PartialEq)]
pub struct ChildSummary {
    pub child_id: ServiceId,
    pub child_kind: ServiceKind,
    /// The child's contribution at this site: its full subtree amount for a
    /// first encounter, the re-reference amount for a repeat.
    pub child_subtotal: MilliAmount,
    /// Value of the child's `interface_cost` attribute (1.0 when absent).
    pub interface_cost: f64,
}

/// Prices one basic (non-combined) service reference.
pub trait LeafEstimator: Send + Sync {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        params: &Params,
    ) -> Result<MilliAmount, MetricError>;
}

/// Prices the integration work a combined service adds on top of its
/// children.
pub trait IntegrationEstimator: Send + Sync {
    fn estimate(
        &self,
        children: &[ChildSummary],
        level: Level,
        params: &Params,
    ) -> Result<MilliAmount, MetricError>;
}

impl<T: LeafEstimator + ?Sized> LeafEstimator for Arc<T> {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        (**self).estimate(ctx, params)
    }
}

impl<T: IntegrationEstimator + ?Sized> IntegrationEstimator for Arc<T> {
    fn estimate(
        &self,
        children: &[ChildSummary],
        level: Level,
        params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        (**self).estimate(children, level, params)
    }
}

#[derive(Clone)]
struct LeafSlot {
    estimator: Arc<dyn LeafEstimator>,
    params: Params,
}

#[derive(Clone)]
struct IntegrationSlot {
    estimator: Arc<dyn IntegrationEstimator>,
    params: Params,
}

/// The four bound estimator slots plus the measure mode — one complete
/// pricing scheme for an estimation run.
#[derive(Clone)]
pub struct MetricSet {
    mode: MeasureMode,
    e1: LeafSlot,
    e2: LeafSlot,
    e3: LeafSlot,
    e4: IntegrationSlot,
}

impl MetricSet {
    /// A set with every slot bound to the unit estimator and no parameters;
    /// override slots with the `with_*` builders.
    pub fn with_unit_slots(mode: MeasureMode) -> Self {
        let unit = Arc::new(Unit);
        MetricSet {
            mode,
            e1: LeafSlot {
                estimator: unit.clone(),
                params: Params::new(),
            },
            e2: LeafSlot {
                estimator: unit.clone(),
                params: Params::new(),
            },
            e3: LeafSlot {
                estimator: unit.clone(),
                params: Params::new(),
            },
            e4: IntegrationSlot {
                estimator: unit,
                params: Params::new(),
            },
        }
    }

    pub fn with_e1(mut self, estimator: impl LeafEstimator + 'static, params: Params) -> Self {
        self.e1 = LeafSlot {
            estimator: Arc::new(estimator),
            params,
        };
        self
    }

    pub fn with_e2(mut self, estimator: impl LeafEstimator + 'static, params: Params) -> Self {
        self.e2 = LeafSlot {
            estimator: Arc::new(estimator),
            params,
        };
        self
    }

    pub fn with_e3(mut self, estimator: impl LeafEstimator + 'static, params: Params) -> Self {
        self.e3 = LeafSlot {
            estimator: Arc::new(estimator),
            params,
        };
        self
    }

    pub fn with_e4(
        mut self,
        estimator: impl IntegrationEstimator + 'static,
        params: Params,
    ) -> Self {
        self.e4 = IntegrationSlot {
            estimator: Arc::new(estimator),
            params,
        };
        self
    }

    pub fn mode(&self) -> MeasureMode {
        self.mode
    }

    /// E1: price a first encounter of an available service, or a repeat
    /// reference to a service of any kind.
    pub fn estimate_discovery(
        &self,
        ctx: &EstimatorContext<'_>,
    ) -> Result<MilliAmount, MetricError> {
        debug_assert!(
            ctx.repeat_encounter || ctx.node.kind == ServiceKind::Available,
            "discovery slot called for a non-repeat {} service",
            ctx.node.kind
        );
        self.e1.estimator.estimate(ctx, &self.e1.params)
    }

    /// E2: price a first encounter of a migratable service.
    pub fn estimate_migration(
        &self,
        ctx: &EstimatorContext<'_>,
    ) -> Result<MilliAmount, MetricError> {
        debug_assert!(ctx.node.kind == ServiceKind::Migratable && !ctx.repeat_encounter);
        self.e2.estimator.estimate(ctx, &self.e2.params)
    }

    /// E3: price a first encounter of a service developed from scratch.
    pub fn estimate_development(
        &self,
        ctx: &EstimatorContext<'_>,
    ) -> Result<MilliAmount, MetricError> {
        debug_assert!(ctx.node.kind == ServiceKind::New && !ctx.repeat_encounter);
        self.e3.estimator.estimate(ctx, &self.e3.params)
    }

    /// E4: price the integration work of a combined service over its direct
    /// children.
    pub fn estimate_integration(
        &self,
        children: &[ChildSummary],
        level: Level,
    ) -> Result<MilliAmount, MetricError> {
        self.e4.estimator.estimate(children, level, &self.e4.params)
    }
}

/// One service-points term: infrastructure factor × raw service size,
/// rounded half-even to milli-points. The engine sums these terms over the
/// basic services of a project to obtain its size.
pub fn service_points_term(
    infrastructure_factor: f64,
    service_size: f64,
) -> Result<MilliAmount, MetricError> {
    if infrastructure_factor < 0.0 {
        return Err(MetricError::NegativeInput {
            name: "infrastructure factor",
            value: infrastructure_factor,
        });
    }
    if service_size < 0.0 {
        return Err(MetricError::NegativeInput {
            name: "service size",
            value: service_size,
        });
    }
    MilliAmount::round_from(infrastructure_factor * service_size)
}

/// Flat four-component integration cost baseline: data complexity +
/// service complexity + process complexity + enabling technology, as one
/// exact sum. A whole-project figure, independent of any decomposition.
pub fn linthicum_cost(
    data_cost: MilliAmount,
    service_cost: MilliAmount,
    process_cost: MilliAmount,
    enabling_tech_cost: MilliAmount,
) -> Result<MilliAmount, MetricError> {
    MilliAmount::checked_sum([data_cost, service_cost, process_cost, enabling_tech_cost])
        .ok_or(MetricError::Overflow)
}

/// Storage technology behind the data a project integrates; each carries a
/// conventional complexity fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataStorageTechnology {
    Relational,
    ObjectOriented,
    Isam,
}

impl DataStorageTechnology {
    pub fn as_str(self) -> &'static str {
        match self {
            DataStorageTechnology::Relational => "relational",
            DataStorageTechnology::ObjectOriented => "object_oriented",
            DataStorageTechnology::Isam => "isam",
        }
    }
}

impl FromStr for DataStorageTechnology {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relational" => Ok(DataStorageTechnology::Relational),
            "object_oriented" => Ok(DataStorageTechnology::ObjectOriented),
            "isam" => Ok(DataStorageTechnology::Isam),
            _ => Err(MetricError::UnknownTechnology {
                value: s.to_owned(),
            }),
        }
    }
}

impl fmt::Display for DataStorageTechnology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fraction of a base effort attributable to data complexity for the given
/// storage technology.
pub fn data_complexity_factor(technology: DataStorageTechnology) -> f64 {
    match technology {
        DataStorageTechnology::Relational => 0.30,
        DataStorageTechnology::ObjectOriented => 0.60,
        DataStorageTechnology::Isam => 0.80,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ph(milli: u64) -> MilliAmount {
        MilliAmount::from_milli(milli)
    }

    #[test]
    fn service_points_identity_factor() {
        assert_eq!(service_points_term(1.0, 7.0).unwrap(), ph(7_000));
        // Identity factor passes any representable size through unchanged.
        for p in [0.0, 0.001, 2.5, 1e6] {
            assert_eq!(
                service_points_term(1.0, p).unwrap(),
                MilliAmount::round_from(p).unwrap()
            );
        }
    }

    #[test]
    fn service_points_product() {
        assert_eq!(service_points_term(1.2, 10.0).unwrap(), ph(12_000));
    }

    #[test]
    fn service_points_sum_of_three_terms() {
        let total = MilliAmount::checked_sum([
            service_points_term(1.2, 10.0).unwrap(),
            service_points_term(1.0, 5.0).unwrap(),
            service_points_term(0.8, 10.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(total, ph(25_000));
    }

    #[test]
    fn service_points_rejects_negative_inputs() {
        assert!(matches!(
            service_points_term(-1.0, 5.0),
            Err(MetricError::NegativeInput { .. })
        ));
        assert!(matches!(
            service_points_term(1.0, -5.0),
            Err(MetricError::NegativeInput { .. })
        ));
    }

    #[test]
    fn linthicum_cost_sums_exactly() {
        assert_eq!(
            linthicum_cost(ph(0), ph(0), ph(0), ph(0)).unwrap(),
            MilliAmount::ZERO
        );
        assert_eq!(
            linthicum_cost(ph(10_000), ph(20_000), ph(30_000), ph(40_000)).unwrap(),
            ph(100_000)
        );
    }

    #[test]
    fn linthicum_cost_is_commutative() {
        let parts = [ph(1), ph(22), ph(333), ph(4_444)];
        let reference = linthicum_cost(parts[0], parts[1], parts[2], parts[3]).unwrap();
        // All 24 orderings of four distinct components agree.
        let idx = [0usize, 1, 2, 3];
        for a in idx {
            for b in idx {
                for c in idx {
                    for d in idx {
                        let mut chosen = [a, b, c, d];
                        chosen.sort_unstable();
                        if chosen != [0, 1, 2, 3] {
                            continue;
                        }
                        assert_eq!(
                            linthicum_cost(parts[a], parts[b], parts[c], parts[d]).unwrap(),
                            reference
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn linthicum_cost_overflow_is_an_error() {
        let huge = MilliAmount::from_milli(u64::MAX - 1);
        assert_eq!(
            linthicum_cost(huge, huge, ph(0), ph(0)),
            Err(MetricError::Overflow)
        );
    }

    #[test]
    fn data_complexity_factors() {
        assert_eq!(data_complexity_factor(DataStorageTechnology::Relational), 0.30);
        assert_eq!(
            data_complexity_factor(DataStorageTechnology::ObjectOriented),
            0.60
        );
        assert_eq!(data_complexity_factor(DataStorageTechnology::Isam), 0.80);
    }

    #[test]
    fn data_complexity_factor_feeds_flat_baseline() {
        // A 50 PH base priced at the relational fraction contributes 15 PH.
        let base = 50.0;
        let data = MilliAmount::round_from(
            data_complexity_factor(DataStorageTechnology::Relational) * base,
        )
        .unwrap();
        assert_eq!(
            linthicum_cost(data, ph(0), ph(0), ph(0)).unwrap(),
            ph(15_000)
        );
    }

    #[test]
    fn technology_tags_round_trip() {
        for tech in [
            DataStorageTechnology::Relational,
            DataStorageTechnology::ObjectOriented,
            DataStorageTechnology::Isam,
        ] {
            assert_eq!(tech.as_str().parse::<DataStorageTechnology>().unwrap(), tech);
        }
        assert!(matches!(
            "hierarchical".parse::<DataStorageTechnology>(),
            Err(MetricError::UnknownTechnology { .. })
        ));
    }

    #[test]
    fn params_number_or_defaults_and_type_checks() {
        let params = Params::new().set("black", 0.25).set("label", "x");
        assert_eq!(params.number_or("black", 0.2).unwrap(), 0.25);
        assert_eq!(params.number_or("grey", 0.5).unwrap(), 0.5);
        assert!(matches!(
            params.number_or("label", 1.0),
            Err(MetricError::WrongType { .. })
        ));
    }
}
