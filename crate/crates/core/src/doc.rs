//! Reading and writing the two on-disk document kinds: service graphs and
//! estimator configurations.
//!
//! Both are JSON. Parsing is strict by default — an unrecognized key is an
//! error, because in an estimation input a misspelled key silently changes
//! money — and lenient mode downgrades exactly those unknown-key errors to
//! warnings. Serialization is canonical (sorted keys, compact, trailing
//! newline) so a parse → serialize → parse round trip is lossless.
//!
//! Failures split into two families that commands map to different exit
//! codes: unreadable input (missing file, broken JSON syntax) and schema
//! violations in well-formed JSON.

use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{Scalar, ServiceGraph, ServiceId, ServiceKind, ServiceNode};
use crate::metrics::{BuiltinRegistry, MeasureMode, MetricSet, Params, ResolveError, SlotName};

/// Why a document could not be loaded.
#[derive(Debug, Error)]
pub enum DocError {
    /// The file could not be read at all.
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// The text is not well-formed JSON.
    #[error("not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// Well-formed JSON that violates the document schema.
    #[error("{message}")]
    Schema { message: String },
}

impl DocError {
    fn schema(message: impl Into<String>) -> Self {
        DocError::Schema {
            message: message.into(),
        }
    }

    /// True for failures of reading or JSON syntax — the input could not
    /// be interpreted at all, as opposed to a schema violation in
    /// well-formed JSON.
    pub fn is_input_unreadable(&self) -> bool {
        matches!(self, DocError::Io { .. } | DocError::Json(_))
    }
}

/// Parsing behavior switches.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept unknown keys (collecting a warning each) instead of
    /// rejecting them.
    pub lenient: bool,
}

/// A parsed value plus the warnings lenient mode collected.
#[derive(Clone, Debug)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// One slot binding from a configuration document.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotConfig {
    pub builtin: String,
    pub params: Params,
}

/// A parsed estimator configuration: the measure mode and the four slot
/// bindings, not yet resolved against the registry.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsConfig {
    pub mode: MeasureMode,
    pub e1: SlotConfig,
    pub e2: SlotConfig,
    pub e3: SlotConfig,
    pub e4: SlotConfig,
}

impl MetricsConfig {
    /// Binds the configured ids and parameters into an executable set.
    pub fn resolve(&self, registry: &BuiltinRegistry) -> Result<MetricSet, ResolveError> {
        registry.metric_set(
            self.mode,
            [
                (self.e1.builtin.as_str(), self.e1.params.clone()),
                (self.e2.builtin.as_str(), self.e2.params.clone()),
                (self.e3.builtin.as_str(), self.e3.params.clone()),
                (self.e4.builtin.as_str(), self.e4.params.clone()),
            ],
        )
    }
}

struct KeyChecker<'a> {
    options: ParseOptions,
    warnings: &'a mut Vec<String>,
}

impl KeyChecker<'_> {
    /// Enforces the allowed key set of one object, per the strictness
    /// options.
    fn check(
        &mut self,
        object: &Map<String, Value>,
        allowed: &[&str],
        what: &str,
    ) -> Result<(), DocError> {
        for key in object.keys() {
            if !allowed.contains(&key.as_str()) {
                let message = format!("{what} has unrecognized key `{key}`");
                if self.options.lenient {
                    self.warnings.push(message);
                } else {
                    return Err(DocError::schema(message));
                }
            }
        }
        Ok(())
    }
}

fn as_object<'v>(value: &'v Value, what: &str) -> Result<&'v Map<String, Value>, DocError> {
    value
        .as_object()
        .ok_or_else(|| DocError::schema(format!("{what} must be an object")))
}

fn as_string(value: &Value, what: &str) -> Result<String, DocError> {
    value
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| DocError::schema(format!("{what} must be a string")))
}

fn required<'v>(
    object: &'v Map<String, Value>,
    key: &str,
    what: &str,
) -> Result<&'v Value, DocError> {
    object
        .get(key)
        .ok_or_else(|| DocError::schema(format!("{what} is missing required key `{key}`")))
}

fn scalar_of(value: &Value, what: &str) -> Result<Scalar, DocError> {
    match value {
        Value::Number(n) => n
            .as_f64()
            .map(Scalar::Number)
            .ok_or_else(|| DocError::schema(format!("{what} is not a representable number"))),
        Value::String(s) => Ok(Scalar::String(s.clone())),
        Value::Bool(b) => Ok(Scalar::Bool(*b)),
        _ => Err(DocError::schema(format!(
            "{what} must be a number, string, or boolean"
        ))),
    }
}

fn scalar_to_value(scalar: &Scalar) -> Value {
    match scalar {
        Scalar::Number(n) => json!(n),
        Scalar::String(s) => json!(s),
        Scalar::Bool(b) => json!(b),
    }
}

/// Parses a service graph document.
pub fn parse_graph(text: &str, options: ParseOptions) -> Result<Parsed<ServiceGraph>, DocError> {
    let value: Value = serde_json::from_str(text)?;
    let mut warnings = Vec::new();
    let mut checker = KeyChecker {
        options,
        warnings: &mut warnings,
    };

    let top = as_object(&value, "the document")?;
    checker.check(top, &["root", "services"], "the document")?;
    let root = as_string(required(top, "root", "the document")?, "`root`")?;
    let services = required(top, "services", "the document")?
        .as_array()
        .ok_or_else(|| DocError::schema("`services` must be an array"))?;

    let mut nodes = Vec::with_capacity(services.len());
    for (index, entry) in services.iter().enumerate() {
        let what = format!("service #{index}");
        let object = as_object(entry, &what)?;
        checker.check(
            object,
            &["id", "name", "kind", "children", "attributes"],
            &what,
        )?;
        let id = as_string(required(object, "id", &what)?, "`id`")?;
        let what = format!("service `{id}`");
        let kind = match as_string(required(object, "kind", &what)?, "`kind`")?.as_str() {
            "available" => ServiceKind::Available,
            "migratable" => ServiceKind::Migratable,
            "new" => ServiceKind::New,
            "combined" => ServiceKind::Combined,
            other => {
                return Err(DocError::schema(format!(
                    "{what} has unknown kind `{other}` \
                     (expected available, migratable, new, or combined)"
                )))
            }
        };
        let mut node = ServiceNode::new(id, kind);
        if let Some(name) = object.get("name") {
            node = node.with_name(as_string(name, "`name`")?);
        }
        if let Some(children) = object.get("children") {
            let children = children
                .as_array()
                .ok_or_else(|| DocError::schema(format!("{what}: `children` must be an array")))?;
            let mut ids = Vec::with_capacity(children.len());
            for child in children {
                ids.push(ServiceId::new(as_string(child, "child reference")?));
            }
            node = node.with_children(ids);
        }
        if let Some(attributes) = object.get("attributes") {
            let attributes = as_object(attributes, &format!("{what}: `attributes`"))?;
            for (name, raw) in attributes {
                let scalar = scalar_of(raw, &format!("{what}: attribute `{name}`"))?;
                node.attributes.insert(name.clone(), scalar);
            }
        }
        nodes.push(node);
    }

    let graph = ServiceGraph::new(ServiceId::new(root), nodes)
        .map_err(|e| DocError::schema(e.to_string()))?;
    Ok(Parsed {
        value: graph,
        warnings,
    })
}

/// Reads and parses a graph document from a file.
pub fn read_graph_file(
    path: impl AsRef<Path>,
    options: ParseOptions,
) -> Result<Parsed<ServiceGraph>, DocError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DocError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_graph(&text, options)
}

/// Serializes a graph canonically: services in id order, keys sorted,
/// compact, newline-terminated.
pub fn serialize_graph(graph: &ServiceGraph) -> String {
    let services: Vec<Value> = graph
        .nodes()
        .values()
        .map(|node| {
            let mut object = Map::new();
            object.insert("id".to_owned(), json!(node.id.as_str()));
            object.insert("name".to_owned(), json!(node.name));
            object.insert("kind".to_owned(), json!(node.kind.as_str()));
            if !node.children.is_empty() {
                let children: Vec<Value> =
                    node.children.iter().map(|c| json!(c.as_str())).collect();
                object.insert("children".to_owned(), Value::Array(children));
            }
            if !node.attributes.is_empty() {
                let mut attributes = Map::new();
                for (name, scalar) in &node.attributes {
                    attributes.insert(name.clone(), scalar_to_value(scalar));
                }
                object.insert("attributes".to_owned(), Value::Object(attributes));
            }
            Value::Object(object)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("root".to_owned(), json!(graph.root().as_str()));
    doc.insert("services".to_owned(), Value::Array(services));
    let mut text = serde_json::to_string(&Value::Object(doc)).expect("graph documents serialize");
    text.push('\n');
    text
}

/// Parses an estimator configuration document.
pub fn parse_metrics(text: &str, options: ParseOptions) -> Result<Parsed<MetricsConfig>, DocError> {
    let value: Value = serde_json::from_str(text)?;
    let mut warnings = Vec::new();
    let mut checker = KeyChecker {
        options,
        warnings: &mut warnings,
    };

    let top = as_object(&value, "the document")?;
    checker.check(top, &["mode", "e1", "e2", "e3", "e4"], "the document")?;
    let mode = match as_string(required(top, "mode", "the document")?, "`mode`")?.as_str() {
        "cost" => MeasureMode::Cost,
        "size" => MeasureMode::Size,
        other => {
            return Err(DocError::schema(format!(
                "unknown mode `{other}` (expected cost or size)"
            )))
        }
    };

    let mut slot = |name: SlotName| -> Result<SlotConfig, DocError> {
        let what = format!("slot `{name}`");
        let object = as_object(required(top, name.as_str(), "the document")?, &what)?;
        checker.check(object, &["builtin", "params"], &what)?;
        let builtin = as_string(required(object, "builtin", &what)?, "`builtin`")?;
        let mut params = Params::new();
        if let Some(raw) = object.get("params") {
            let raw = as_object(raw, &format!("{what}: `params`"))?;
            for (key, value) in raw {
                let scalar = scalar_of(value, &format!("{what}: parameter `{key}`"))?;
                params = params.set(key.clone(), scalar);
            }
        }
        Ok(SlotConfig { builtin, params })
    };

    let config = MetricsConfig {
        mode,
        e1: slot(SlotName::E1)?,
        e2: slot(SlotName::E2)?,
        e3: slot(SlotName::E3)?,
        e4: slot(SlotName::E4)?,
    };
    Ok(Parsed {
        value: config,
        warnings,
    })
}

/// Reads and parses a configuration document from a file.
pub fn read_metrics_file(
    path: impl AsRef<Path>,
    options: ParseOptions,
) -> Result<Parsed<MetricsConfig>, DocError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DocError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_metrics(&text, options)
}
