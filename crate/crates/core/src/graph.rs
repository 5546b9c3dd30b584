//! The service decomposition graph.
//!
//! A project is declared as a set of classified services: basic services
//! (available, migratable, new) and combined services that list the
//! component services they are built from. Child references form a DAG;
//! a service referenced from several parents is shared, and the traversal
//! rules here decide which reference counts as its first encounter.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// A schemaless attribute value attached to a service node.
///
/// Estimators declare which attributes they read and what the defaults are;
/// the graph itself gives attributes no meaning.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Number(f64),
    String(String),
    Bool(bool),
}

impl Scalar {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Scalar::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Human-readable type name for diagnostics.
    pub fn type_name(&self) -> &'static str {
        match self {
            Scalar::Number(_) => "number",
            Scalar::String(_) => "string",
            Scalar::Bool(_) => "boolean",
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::String(v.to_owned())
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

/// Identifier of a service within a graph.
///
/// Valid ids are non-empty, case-sensitive tokens of ASCII letters, digits,
/// `_` and `-`. Construction does not enforce the charset; [`ServiceGraph::validate`]
/// reports violations as `INVALID_ID` diagnostics.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServiceId(String);

impl ServiceId {
    pub fn new(id: impl Into<String>) -> Self {
        ServiceId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the id satisfies the token charset rule.
    pub fn is_valid_token(&self) -> bool {
        !self.0.is_empty()
            && self
                .0
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The development process a service goes through, which decides the metric
/// that prices it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ServiceKind {
    /// Already exists (third party or inherited); priced as discovery work.
    Available,
    /// Wrapped or ported from legacy components; priced as migration work.
    Migratable,
    /// Built from scratch; priced as development work.
    New,
    /// Composed of other services; carries integration work only.
    Combined,
}

impl ServiceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ServiceKind::Available => "available",
            ServiceKind::Migratable => "migratable",
            ServiceKind::New => "new",
            ServiceKind::Combined => "combined",
        }
    }
}

impl fmt::Display for ServiceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Depth of a service beneath the project root along the traversal path.
///
/// The root is level 0 and each decomposition step adds one. A shared
/// service is priced at the depth of its first deterministic-DFS encounter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(pub u32);

impl Level {
    pub const ROOT: Level = Level(0);

    pub fn depth(self) -> u32 {
        self.0
    }

    pub fn child(self) -> Level {
        Level(self.0 + 1)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One declared service.
#[derive(Clone, Debug, PartialEq)]
pub struct ServiceNode {
    pub id: ServiceId,
    pub name: String,
    pub kind: ServiceKind,
    /// Component services, in declaration order. Only meaningful for
    /// [`ServiceKind::Combined`]; declaration order fixes the traversal.
    pub children: Vec<ServiceId>,
    pub attributes: BTreeMap<String, Scalar>,
}

impl ServiceNode {
    pub fn new(id: impl Into<String>, kind: ServiceKind) -> Self {
        let id = ServiceId::new(id);
        ServiceNode {
            name: id.as_str().to_owned(),
            id,
            kind,
            children: Vec::new(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn combined(id: impl Into<String>, children: impl IntoIterator<Item = ServiceId>) -> Self {
        ServiceNode::new(id, ServiceKind::Combined).with_children(children)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_children(mut self, children: impl IntoIterator<Item = ServiceId>) -> Self {
        self.children = children.into_iter().collect();
        self
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<Scalar>) -> Self {
        self.attributes.insert(name.into(), value.into());
        self
    }

    pub fn attr(&self, name: &str) -> Option<&Scalar> {
        self.attributes.get(name)
    }
}

/// The declared service DAG with its designated root (the project itself).
#[derive(Clone, Debug, PartialEq)]
pub struct ServiceGraph {
    nodes: BTreeMap<ServiceId, ServiceNode>,
    root: ServiceId,
}

/// Construction rejects duplicate ids outright; a map cannot hold them, so a
/// report entry would silently drop data instead.
#[derive(Debug, Error)]
#[error("duplicate service id `{id}`")]
pub struct DuplicateIdError {
    pub id: ServiceId,
}

impl ServiceGraph {
    pub fn new(
        root: ServiceId,
        nodes: impl IntoIterator<Item = ServiceNode>,
    ) -> Result<Self, DuplicateIdError> {
        let mut map = BTreeMap::new();
        for node in nodes {
            let id = node.id.clone();
            if map.insert(id.clone(), node).is_some() {
                return Err(DuplicateIdError { id });
            }
        }
        Ok(ServiceGraph { nodes: map, root })
    }

    pub fn root(&self) -> &ServiceId {
        &self.root
    }

    pub fn node(&self, id: &ServiceId) -> Option<&ServiceNode> {
        self.nodes.get(id)
    }

    /// All nodes, keyed and iterated in id order.
    pub fn nodes(&self) -> &BTreeMap<ServiceId, ServiceNode> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Checks every structural invariant and returns the full report.
    ///
    /// Problems are report entries, not failures: errors make the graph
    /// unusable for estimation, warnings do not.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Depth-first preorder from the root, children in declaration order,
    /// listing each reachable service once with the level of its first
    /// encounter.
    pub fn first_encounter_order(&self) -> Result<Vec<(ServiceId, Level)>, InvalidGraphError> {
        first_encounter_order(self)
    }
}

/// Machine-readable diagnostic codes emitted by validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagnosticCode {
    /// The designated root id is not among the declared services.
    MissingRoot,
    /// A child reference does not resolve to a declared service.
    DanglingChild,
    /// The child relation contains a cycle.
    Cycle,
    /// A service id violates the token charset rule.
    InvalidId,
    /// A basic (non-combined) service declares children.
    BasicWithChildren,
    /// A combined service declares no children.
    CombinedNoChildren,
    /// A combined service declares exactly one child (legal, but often a
    /// sign the wrap is unintended).
    SingleChildCombined,
    /// A declared service is not reachable from the root.
    UnreachableNode,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::MissingRoot => "MISSING_ROOT",
            DiagnosticCode::DanglingChild => "DANGLING_CHILD",
            DiagnosticCode::Cycle => "CYCLE",
            DiagnosticCode::InvalidId => "INVALID_ID",
            DiagnosticCode::BasicWithChildren => "BASIC_WITH_CHILDREN",
            DiagnosticCode::CombinedNoChildren => "COMBINED_NO_CHILDREN",
            DiagnosticCode::SingleChildCombined => "SINGLE_CHILD_COMBINED",
            DiagnosticCode::UnreachableNode => "UNREACHABLE_NODE",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One validation finding: a code, the node it concerns (when one exists),
/// and a message.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub node: Option<ServiceId>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(id) => write!(f, "{} [{}]: {}", self.code, id, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

/// Outcome of [`ServiceGraph::validate`]: empty of errors exactly when every
/// graph invariant holds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: DiagnosticCode, node: Option<&ServiceId>, message: String) {
        self.errors.push(Diagnostic {
            code,
            node: node.cloned(),
            message,
        });
    }

    fn warn(&mut self, code: DiagnosticCode, node: Option<&ServiceId>, message: String) {
        self.warnings.push(Diagnostic {
            code,
            node: node.cloned(),
            message,
        });
    }
}

/// Returned by operations that require a graph free of validation errors.
#[derive(Debug, Error)]
#[error("graph has {} validation error(s); first: {}", report.errors.len(),
        report.errors.first().map(|d| d.to_string()).unwrap_or_default())]
pub struct InvalidGraphError {
    pub report: ValidationReport,
}

fn validate(graph: &ServiceGraph) -> ValidationReport {
    let mut report = ValidationReport::default();

    for (id, node) in &graph.nodes {
        if !id.is_valid_token() {
            report.error(
                DiagnosticCode::InvalidId,
                Some(id),
                format!(
                    "id `{id}` is not a valid token (letters, digits, `_`, `-`; non-empty)"
                ),
            );
        }
        match node.kind {
            ServiceKind::Combined => match node.children.len() {
                0 => report.error(
                    DiagnosticCode::CombinedNoChildren,
                    Some(id),
                    "combined service declares no component services".to_owned(),
                ),
                1 => report.warn(
                    DiagnosticCode::SingleChildCombined,
                    Some(id),
                    "combined service wraps a single component".to_owned(),
                ),
                _ => {}
            },
            _ => {
                if !node.children.is_empty() {
                    report.error(
                        DiagnosticCode::BasicWithChildren,
                        Some(id),
                        format!("{} service declares children", node.kind),
                    );
                }
            }
        }
        for child in &node.children {
            if !graph.nodes.contains_key(child) {
                report.error(
                    DiagnosticCode::DanglingChild,
                    Some(id),
                    format!("child `{child}` is not declared"),
                );
            }
        }
    }

    let root_exists = graph.nodes.contains_key(&graph.root);
    if !root_exists {
        report.error(
            DiagnosticCode::MissingRoot,
            None,
            format!("root `{}` is not declared", graph.root),
        );
    }

    // Cycle check over the resolvable part of the child relation. Dangling
    // references were reported above and are simply skipped here.
    if let Some(cycle) = find_cycle(graph) {
        let path = cycle
            .iter()
            .map(ServiceId::as_str)
            .collect::<Vec<_>>()
            .join(" -> ");
        report.error(
            DiagnosticCode::Cycle,
            cycle.first(),
            format!("child relation contains a cycle: {path}"),
        );
    } else if root_exists {
        // Reachability is only meaningful on an acyclic graph with a root.
        let reachable = reachable_from_root(graph);
        for id in graph.nodes.keys() {
            if !reachable.contains(id) {
                report.warn(
                    DiagnosticCode::UnreachableNode,
                    Some(id),
                    "service is not reachable from the root".to_owned(),
                );
            }
        }
    }

    report
}

/// DFS with an explicit recursion stack; returns the first cycle found as a
/// closed path (`a -> b -> a`).
fn find_cycle(graph: &ServiceGraph) -> Option<Vec<ServiceId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        InProgress,
        Done,
    }

    let mut marks: HashMap<&ServiceId, Mark> = HashMap::new();
    let mut path: Vec<&ServiceId> = Vec::new();

    fn visit<'g>(
        graph: &'g ServiceGraph,
        id: &'g ServiceId,
        marks: &mut HashMap<&'g ServiceId, Mark>,
        path: &mut Vec<&'g ServiceId>,
    ) -> Option<Vec<ServiceId>> {
        match marks.get(id) {
            Some(Mark::Done) => return None,
            Some(Mark::InProgress) => {
                let start = path.iter().position(|p| *p == id).unwrap_or(0);
                let mut cycle: Vec<ServiceId> =
                    path[start..].iter().map(|p| (*p).clone()).collect();
                cycle.push(id.clone());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(id, Mark::InProgress);
        path.push(id);
        if let Some(node) = graph.nodes.get(id) {
            for child in &node.children {
                if !graph.nodes.contains_key(child) {
                    continue;
                }
                if let Some(cycle) = visit(graph, child, marks, path) {
                    return Some(cycle);
                }
            }
        }
        path.pop();
        marks.insert(id, Mark::Done);
        None
    }

    for id in graph.nodes.keys() {
        if !marks.contains_key(id) {
            if let Some(cycle) = visit(graph, id, &mut marks, &mut path) {
                return Some(cycle);
            }
        }
    }
    None
}

fn reachable_from_root(graph: &ServiceGraph) -> HashSet<&ServiceId> {
    let mut seen = HashSet::new();
    let mut stack = vec![&graph.root];
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        if let Some(node) = graph.nodes.get(id) {
            for child in &node.children {
                if graph.nodes.contains_key(child) {
                    stack.push(child);
                }
            }
        }
    }
    seen
}

fn first_encounter_order(
    graph: &ServiceGraph,
) -> Result<Vec<(ServiceId, Level)>, InvalidGraphError> {
    let report = graph.validate();
    if !report.is_ok() {
        return Err(InvalidGraphError { report });
    }

    // Iterative DFS. The stack holds pending references; children are pushed
    // in reverse so they pop in declaration order.
    let mut order = Vec::new();
    let mut seen: HashSet<&ServiceId> = HashSet::new();
    let mut stack: Vec<(&ServiceId, Level)> = vec![(&graph.root, Level::ROOT)];
    while let Some((id, level)) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        order.push((id.clone(), level));
        let node = &graph.nodes[id];
        for child in node.children.iter().rev() {
            stack.push((child, level.child()));
        }
    }
    Ok(order)
}
