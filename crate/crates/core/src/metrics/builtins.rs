//! Built-in estimators and the id registry that binds them from
//! configuration.
//!
//! Each built-in is a deliberately simple parameterized shape: a lookup
//! table for discovery, a per-size-point factor for migration, a power law
//! for development, a weighted per-interface sum for integration, a
//! factor×size product for sizing, and a unit estimator for calibration and
//! golden tests. They are reference plugs for the four slots; anything
//! smarter arrives through the same two traits.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::amount::MilliAmount;
use crate::graph::Level;
use crate::metrics::{
    attr_number_or, attr_str_or, ChildSummary, EstimatorContext, IntegrationEstimator,
    LeafEstimator, MeasureMode, MetricError, MetricSet, Params,
};

/// Discovery pricing by lookup table.
///
/// Reads the node attribute `discovery_technique` (default `registry`) and
/// returns the parameter named after it: `registry` (default 1 PH),
/// `semantic_annotation` (default 4 PH), or `qos_matching` (default 6 PH).
/// Repeat references return the `re_reference_cost` parameter (default 0)
/// regardless of technique.
#[derive(Clone, Copy, Debug, Default)]
pub struct TableDiscovery;

impl LeafEstimator for TableDiscovery {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        if ctx.repeat_encounter {
            return MilliAmount::round_from(params.number_or("re_reference_cost", 0.0)?);
        }
        let technique = attr_str_or(ctx.node, "discovery_technique", "registry")?;
        let hours = match technique {
            "registry" => params.number_or("registry", 1.0)?,
            "semantic_annotation" => params.number_or("semantic_annotation", 4.0)?,
            "qos_matching" => params.number_or("qos_matching", 6.0)?,
            other => {
                return Err(MetricError::UnknownTechnique {
                    value: other.to_owned(),
                })
            }
        };
        MilliAmount::round_from(hours)
    }
}

/// Migration pricing as size × per-point factor.
///
/// Reads the node attributes `size_points` (default 0) and `box_type`
/// (default `grey`); the factor comes from the parameter named after the
/// box type: `black` (default 0.2), `grey` (default 0.5), or `white`
/// (default 0.8) person-hours per size point.
#[derive(Clone, Copy, Debug, Default)]
pub struct FactorMigration;

impl LeafEstimator for FactorMigration {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        let size = attr_number_or(ctx.node, "size_points", 0.0)?;
        if size < 0.0 {
            return Err(MetricError::NegativeSize { value: size });
        }
        let box_type = attr_str_or(ctx.node, "box_type", "grey")?;
        let factor = match box_type {
            "black" => params.number_or("black", 0.2)?,
            "grey" => params.number_or("grey", 0.5)?,
            "white" => params.number_or("white", 0.8)?,
            other => {
                return Err(MetricError::UnknownBoxType {
                    value: other.to_owned(),
                })
            }
        };
        MilliAmount::round_from(size * factor)
    }
}

/// Development pricing as a power law with optional cost-driver
/// multipliers.
///
/// Effort is `a × size_points^b × Π(multipliers)` with parameters `a`
/// (default 1.0) and `b` (default 1.0). Multipliers are every parameter and
/// every node attribute whose name starts with `multiplier_`; absent means
/// a product of 1.0. A size of zero prices to zero regardless of the other
/// parameters.
#[derive(Clone, Copy, Debug, Default)]
pub struct PowerLawDevelopment;

impl PowerLawDevelopment {
    /// Parameter preset with the conventional nominal power-law shape from
    /// the COCOMO II literature: `a` = 2.94, `b` = 1.1. A starting point
    /// for calibration, not a calibrated claim.
    pub fn cocomo_shaped_params() -> Params {
        Params::new().set("a", 2.94).set("b", 1.1)
    }
}

impl LeafEstimator for PowerLawDevelopment {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        let size = attr_number_or(ctx.node, "size_points", 0.0)?;
        if size < 0.0 {
            return Err(MetricError::NegativeSize { value: size });
        }
        if size == 0.0 {
            return Ok(MilliAmount::ZERO);
        }
        let a = params.number_or("a", 1.0)?;
        let b = params.number_or("b", 1.0)?;
        let mut product = 1.0;
        let param_multipliers = params
            .keys()
            .filter(|k| k.starts_with("multiplier_"))
            .map(|k| (k.to_owned(), params.number_or(k, 1.0)));
        let attr_multipliers = ctx
            .node
            .attributes
            .keys()
            .filter(|k| k.starts_with("multiplier_"))
            .map(|k| (k.clone(), attr_number_or(ctx.node, k, 1.0)));
        for (name, value) in param_multipliers.chain(attr_multipliers) {
            let m = value?;
            if m < 0.0 {
                return Err(MetricError::NegativeMultiplier {
                    name: name.trim_start_matches("multiplier_").to_owned(),
                    value: m,
                });
            }
            product *= m;
        }
        MilliAmount::round_from(a * size.powf(b) * product)
    }
}

/// Integration pricing as a level-weighted sum of per-child interface
/// costs.
///
/// Effort is `w(level) × discount × Σ interface_cost` over the direct
/// children. The weight table is the parameters `level_weight_<depth>`
/// with `level_weight_default` (default 1.0) as fallback; `discount` is the
/// `soa_compliance_discount` parameter (default 1.0), meant to be
/// configured below 1.0 when the integrated services follow a common
/// service-oriented contract discipline and interfacing is correspondingly
/// cheaper.
#[derive(Clone, Copy, Debug, Default)]
pub struct LevelWeightedIntegration;

impl IntegrationEstimator for LevelWeightedIntegration {
    fn estimate(
        &self,
        children: &[ChildSummary],
        level: Level,
        params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        if children.is_empty() {
            return Err(MetricError::EmptyChildren);
        }
        let default_weight = params.number_or("level_weight_default", 1.0)?;
        let weight = params.number_or(&format!("level_weight_{}", level.depth()), default_weight)?;
        if weight < 0.0 {
            return Err(MetricError::NegativeInput {
                name: "level weight",
                value: weight,
            });
        }
        let discount = params.number_or("soa_compliance_discount", 1.0)?;
        if discount < 0.0 {
            return Err(MetricError::NegativeInput {
                name: "compliance discount",
                value: discount,
            });
        }
        let mut interfaces = 0.0;
        for child in children {
            if child.interface_cost < 0.0 {
                return Err(MetricError::NegativeInput {
                    name: "interface cost",
                    value: child.interface_cost,
                });
            }
            interfaces += child.interface_cost;
        }
        MilliAmount::round_from(weight * discount * interfaces)
    }
}

/// Size measurement as infrastructure factor × raw size.
///
/// As a leaf estimator it reads the node attributes
/// `infrastructure_factor` (default 1.0) and `size_points` (default 0) and
/// returns their product in milli-points; repeat references measure zero.
/// As an integration estimator it returns zero — combined services add no
/// size of their own.
#[derive(Clone, Copy, Debug, Default)]
pub struct ServicePoints;

impl LeafEstimator for ServicePoints {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        _params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        if ctx.repeat_encounter {
            return Ok(MilliAmount::ZERO);
        }
        let factor = attr_number_or(ctx.node, "infrastructure_factor", 1.0)?;
        let size = attr_number_or(ctx.node, "size_points", 0.0)?;
        crate::metrics::service_points_term(factor, size)
    }
}

impl IntegrationEstimator for ServicePoints {
    fn estimate(
        &self,
        _children: &[ChildSummary],
        _level: Level,
        _params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        Ok(MilliAmount::ZERO)
    }
}

/// Unit pricing for calibration and golden tests: 1 PH per first
/// encounter, 0 per repeat, 1 PH per integrated child.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unit;

impl LeafEstimator for Unit {
    fn estimate(
        &self,
        ctx: &EstimatorContext<'_>,
        _params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        Ok(if ctx.repeat_encounter {
            MilliAmount::ZERO
        } else {
            MilliAmount::from_milli(1_000)
        })
    }
}

impl IntegrationEstimator for Unit {
    fn estimate(
        &self,
        children: &[ChildSummary],
        _level: Level,
        _params: &Params,
    ) -> Result<MilliAmount, MetricError> {
        Ok(MilliAmount::from_milli(1_000 * children.len() as u64))
    }
}

/// The estimator set used by the golden decomposition tests: unit pricing
/// in every slot, effort mode.
pub fn unit_metrics() -> MetricSet {
    MetricSet::with_unit_slots(MeasureMode::Cost)
}

/// One of the four estimator slots, as named in configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlotName {
    E1,
    E2,
    E3,
    E4,
}

impl SlotName {
    pub const ALL: [SlotName; 4] = [SlotName::E1, SlotName::E2, SlotName::E3, SlotName::E4];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotName::E1 => "e1",
            SlotName::E2 => "e2",
            SlotName::E3 => "e3",
            SlotName::E4 => "e4",
        }
    }
}

impl fmt::Display for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Failure to bind a configured estimator id into a slot.
#[derive(Debug, Error, PartialEq)]
pub enum ResolveError {
    #[error("unknown estimator id `{id}`")]
    UnknownBuiltin { id: String },
    #[error("estimator `{id}` cannot fill slot {slot}")]
    SlotMismatch { id: String, slot: SlotName },
    #[error("estimator `{id}` does not support {mode} mode (slot {slot})")]
    ModeMismatch {
        id: String,
        slot: SlotName,
        mode: MeasureMode,
    },
    #[error("estimator `{id}` does not accept parameter `{key}`")]
    UnknownParam { id: String, key: String },
}

struct BuiltinEntry {
    leaf: Option<Arc<dyn LeafEstimator>>,
    integration: Option<Arc<dyn IntegrationEstimator>>,
    slots: &'static [SlotName],
    modes: &'static [MeasureMode],
    exact_keys: &'static [&'static str],
    prefix_keys: &'static [&'static str],
}

impl BuiltinEntry {
    fn check(
        &self,
        id: &str,
        slot: SlotName,
        mode: MeasureMode,
        params: &Params,
    ) -> Result<(), ResolveError> {
        if !self.slots.contains(&slot) {
            return Err(ResolveError::SlotMismatch {
                id: id.to_owned(),
                slot,
            });
        }
        if !self.modes.contains(&mode) {
            return Err(ResolveError::ModeMismatch {
                id: id.to_owned(),
                slot,
                mode,
            });
        }
        for key in params.keys() {
            let known = self.exact_keys.contains(&key)
                || self.prefix_keys.iter().any(|p| key.starts_with(p));
            if !known {
                return Err(ResolveError::UnknownParam {
                    id: id.to_owned(),
                    key: key.to_owned(),
                });
            }
        }
        Ok(())
    }
}

/// Maps estimator ids from configuration to implementations, with slot,
/// mode, and parameter-key validation.
pub struct BuiltinRegistry {
    entries: BTreeMap<&'static str, BuiltinEntry>,
}

/// The registry of shipped estimators: `table-discovery`,
/// `factor-migration`, `power-law`, `level-weighted-integration`,
/// `service-points`, and `unit`.
pub fn builtin_registry() -> BuiltinRegistry {
    let mut entries = BTreeMap::new();
    entries.insert(
        "table-discovery",
        BuiltinEntry {
            leaf: Some(Arc::new(TableDiscovery) as Arc<dyn LeafEstimator>),
            integration: None,
            slots: &[SlotName::E1],
            modes: &[MeasureMode::Cost],
            exact_keys: &[
                "registry",
                "semantic_annotation",
                "qos_matching",
                "re_reference_cost",
            ],
            prefix_keys: &[],
        },
    );
    entries.insert(
        "factor-migration",
        BuiltinEntry {
            leaf: Some(Arc::new(FactorMigration) as Arc<dyn LeafEstimator>),
            integration: None,
            slots: &[SlotName::E2],
            modes: &[MeasureMode::Cost],
            exact_keys: &["black", "grey", "white"],
            prefix_keys: &[],
        },
    );
    entries.insert(
        "power-law",
        BuiltinEntry {
            leaf: Some(Arc::new(PowerLawDevelopment) as Arc<dyn LeafEstimator>),
            integration: None,
            slots: &[SlotName::E3],
            modes: &[MeasureMode::Cost],
            exact_keys: &["a", "b"],
            prefix_keys: &["multiplier_"],
        },
    );
    entries.insert(
        "level-weighted-integration",
        BuiltinEntry {
            leaf: None,
            integration: Some(Arc::new(LevelWeightedIntegration) as Arc<dyn IntegrationEstimator>),
            slots: &[SlotName::E4],
            modes: &[MeasureMode::Cost],
            exact_keys: &["soa_compliance_discount", "level_weight_default"],
            prefix_keys: &["level_weight_"],
        },
    );
    entries.insert(
        "service-points",
        BuiltinEntry {
            leaf: Some(Arc::new(ServicePoints) as Arc<dyn LeafEstimator>),
            integration: Some(Arc::new(ServicePoints) as Arc<dyn IntegrationEstimator>),
            slots: &SlotName::ALL,
            modes: &[MeasureMode::Size],
            exact_keys: &[],
            prefix_keys: &[],
        },
    );
    entries.insert(
        "unit",
        BuiltinEntry {
            leaf: Some(Arc::new(Unit) as Arc<dyn LeafEstimator>),
            integration: Some(Arc::new(Unit) as Arc<dyn IntegrationEstimator>),
            slots: &SlotName::ALL,
            modes: &[MeasureMode::Cost, MeasureMode::Size],
            exact_keys: &[],
            prefix_keys: &[],
        },
    );
    BuiltinRegistry { entries }
}

impl BuiltinRegistry {
    /// Registered ids, sorted.
    pub fn ids(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    fn entry(&self, id: &str) -> Result<&BuiltinEntry, ResolveError> {
        self.entries
            .get(id)
            .ok_or_else(|| ResolveError::UnknownBuiltin { id: id.to_owned() })
    }

    /// Binds `id` into a leaf slot (e1–e3), validating slot, mode, and
    /// parameter keys.
    pub fn leaf(
        &self,
        slot: SlotName,
        id: &str,
        mode: MeasureMode,
        params: &Params,
    ) -> Result<Arc<dyn LeafEstimator>, ResolveError> {
        let entry = self.entry(id)?;
        entry.check(id, slot, mode, params)?;
        entry.leaf.clone().ok_or(ResolveError::SlotMismatch {
            id: id.to_owned(),
            slot,
        })
    }

    /// Binds `id` into the integration slot (e4), validating mode and
    /// parameter keys.
    pub fn integration(
        &self,
        id: &str,
        mode: MeasureMode,
        params: &Params,
    ) -> Result<Arc<dyn IntegrationEstimator>, ResolveError> {
        let entry = self.entry(id)?;
        entry.check(id, SlotName::E4, mode, params)?;
        entry.integration.clone().ok_or(ResolveError::SlotMismatch {
            id: id.to_owned(),
            slot: SlotName::E4,
        })
    }

    /// Builds a complete set from four `(id, params)` bindings in e1–e4
    /// order.
    pub fn metric_set(
        &self,
        mode: MeasureMode,
        bindings: [(&str, Params); 4],
    ) -> Result<MetricSet, ResolveError> {
        let [(id1, p1), (id2, p2), (id3, p3), (id4, p4)] = bindings;
        let e1 = self.leaf(SlotName::E1, id1, mode, &p1)?;
        let e2 = self.leaf(SlotName::E2, id2, mode, &p2)?;
        let e3 = self.leaf(SlotName::E3, id3, mode, &p3)?;
        let e4 = self.integration(id4, mode, &p4)?;
        Ok(MetricSet::with_unit_slots(mode)
            .with_e1(e1, p1)
            .with_e2(e2, p2)
            .with_e3(e3, p3)
            .with_e4(e4, p4))
    }
}
