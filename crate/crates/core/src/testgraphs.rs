//! Graph builders shared by the unit tests in this crate.

use crate::graph::{ServiceGraph, ServiceId, ServiceKind, ServiceNode};

/// The rail-freight invoice automation case: a two-level decomposition with
/// one migratable legacy wrap and one transformation service shared between
/// both subsystems.
pub fn railco() -> ServiceGraph {
    let ids =
        |names: &[&str]| -> Vec<ServiceId> { names.iter().copied().map(ServiceId::new).collect() };
    ServiceGraph::new(
        ServiceId::new("AutomationSystem"),
        [
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
            ServiceNode::new("MetadataChecking", ServiceKind::Available)
                .with_name("Metadata Checking"),
            ServiceNode::new("LegacySystem", ServiceKind::Migratable).with_name("Legacy System"),
            ServiceNode::new("PollingNotification", ServiceKind::New)
                .with_name("Polling Notification"),
            ServiceNode::new("Transform", ServiceKind::New).with_name("Transform"),
        ],
    )
    .expect("fixture ids are unique")
}
