//! Command surface and process-level behavior.
//!
//! Five commands: `validate` checks a graph document, `estimate` prices
//! one, `size` does the same but insists on a size-mode configuration,
//! `explain` narrates the evaluation step by step, and `diff` compares two
//! graphs under one configuration.
//!
//! Contract for scripting: machine output goes to standard output only,
//! diagnostics to standard error only; exit 0 on success, 1 on domain
//! errors (validation, schema, configuration, estimation), 2 when an input
//! file cannot be read or is not valid JSON.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::doc::{self, DocError, ParseOptions, Parsed};
use crate::engine::{self, EngineError};
use crate::graph::ServiceGraph;
use crate::metrics::{builtin_registry, MeasureMode, MetricSet};
use crate::report;

/// Exit status for domain errors: invalid graphs, schema violations,
/// unresolvable configurations, estimator failures.
pub const EXIT_DOMAIN_ERROR: u8 = 1;
/// Exit status for unreadable input: missing files, broken JSON.
pub const EXIT_UNREADABLE: u8 = 2;

/// Cost and size estimation for service decompositions.
#[derive(Debug, Parser)]
#[command(name = "soacost", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a graph document and report every problem found.
    Validate {
        /// Graph document to check.
        graph: PathBuf,
        /// Accept unknown document keys with a warning.
        #[arg(long)]
        lenient: bool,
    },
    /// Estimate a graph and print the itemized breakdown.
    Estimate {
        /// Graph document to price.
        graph: PathBuf,
        /// Estimator configuration document.
        #[arg(long)]
        metrics: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        /// Currency per person-hour; adds a monetary column to the table.
        #[arg(long)]
        rate: Option<f64>,
        /// Accept unknown document keys with a warning.
        #[arg(long)]
        lenient: bool,
    },
    /// Estimate with a size-mode configuration (refuses cost mode).
    Size {
        /// Graph document to measure.
        graph: PathBuf,
        /// Estimator configuration document; must declare size mode.
        #[arg(long)]
        metrics: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        /// Accept unknown document keys with a warning.
        #[arg(long)]
        lenient: bool,
    },
    /// Print the numbered evaluation narrative for a graph.
    Explain {
        /// Graph document to narrate.
        graph: PathBuf,
        /// Estimator configuration document.
        #[arg(long)]
        metrics: PathBuf,
        /// Accept unknown document keys with a warning.
        #[arg(long)]
        lenient: bool,
    },
    /// Estimate two graphs under one configuration and print what changed.
    Diff {
        /// Baseline graph document.
        base: PathBuf,
        /// Alternative graph document.
        variant: PathBuf,
        /// Estimator configuration document applied to both.
        #[arg(long)]
        metrics: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        /// Accept unknown document keys with a warning.
        #[arg(long)]
        lenient: bool,
    },
}

/// Parses arguments and runs one command, returning the process exit code.
pub fn run<I, A>(args: I) -> u8
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; usage mistakes are
            // argument-level errors, distinct from file problems.
            let code = if err.use_stderr() { EXIT_UNREADABLE } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match cli.command {
        Command::Validate { graph, lenient } => cmd_validate(&graph, lenient),
        Command::Estimate {
            graph,
            metrics,
            format,
            rate,
            lenient,
        } => cmd_estimate(&graph, &metrics, format, rate, lenient, None),
        Command::Size {
            graph,
            metrics,
            format,
            lenient,
        } => cmd_estimate(&graph, &metrics, format, None, lenient, Some(MeasureMode::Size)),
        Command::Explain {
            graph,
            metrics,
            lenient,
        } => cmd_explain(&graph, &metrics, lenient),
        Command::Diff {
            base,
            variant,
            metrics,
            format,
            lenient,
        } => cmd_diff(&base, &variant, &metrics, format, lenient),
    }
}

fn options(lenient: bool) -> ParseOptions {
    ParseOptions { lenient }
}

fn doc_exit(err: &DocError) -> u8 {
    if err.is_input_unreadable() {
        EXIT_UNREADABLE
    } else {
        EXIT_DOMAIN_ERROR
    }
}

fn emit_warnings(warnings: &[String]) {
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
}

/// Loads a graph document, printing warnings and errors as it goes.
fn load_graph(path: &PathBuf, lenient: bool) -> Result<ServiceGraph, u8> {
    match doc::read_graph_file(path, options(lenient)) {
        Ok(Parsed { value, warnings }) => {
            emit_warnings(&warnings);
            Ok(value)
        }
        Err(err) => {
            eprintln!("error: {err}");
            Err(doc_exit(&err))
        }
    }
}

/// Loads and resolves an estimator configuration.
fn load_metrics(path: &PathBuf, lenient: bool) -> Result<MetricSet, u8> {
    let config = match doc::read_metrics_file(path, options(lenient)) {
        Ok(Parsed { value, warnings }) => {
            emit_warnings(&warnings);
            value
        }
        Err(err) => {
            eprintln!("error: {err}");
            return Err(doc_exit(&err));
        }
    };
    config.resolve(&builtin_registry()).map_err(|err| {
        eprintln!("error: {err}");
        EXIT_DOMAIN_ERROR
    })
}

/// Validates a graph, printing diagnostics; errors fail the run.
fn check_graph(graph: &ServiceGraph) -> Result<(), u8> {
    let report = graph.validate();
    for diagnostic in &report.warnings {
        eprintln!("warning: {diagnostic}");
    }
    for diagnostic in &report.errors {
        eprintln!("error: {diagnostic}");
    }
    if report.is_ok() {
        Ok(())
    } else {
        Err(EXIT_DOMAIN_ERROR)
    }
}

fn engine_failure(err: &EngineError) -> u8 {
    eprintln!("error: {err}");
    EXIT_DOMAIN_ERROR
}

fn cmd_validate(path: &PathBuf, lenient: bool) -> u8 {
    let graph = match load_graph(path, lenient) {
        Ok(graph) => graph,
        Err(code) => return code,
    };
    match check_graph(&graph) {
        Ok(()) => 0,
        Err(code) => code,
    }
}

fn cmd_estimate(
    graph_path: &PathBuf,
    metrics_path: &PathBuf,
    format: OutputFormat,
    rate: Option<f64>,
    lenient: bool,
    required_mode: Option<MeasureMode>,
) -> u8 {
    let (graph, metrics) = match load_inputs(graph_path, metrics_path, lenient) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    if let Some(required) = required_mode {
        if metrics.mode() != required {
            eprintln!(
                "error: this command requires a {required}-mode configuration, \
                 but `{}` declares {} mode",
                metrics_path.display(),
                metrics.mode()
            );
            return EXIT_DOMAIN_ERROR;
        }
    }
    let breakdown = match engine::estimate(&graph, &metrics) {
        Ok(breakdown) => breakdown,
        Err(err) => return engine_failure(&err),
    };
    match format {
        OutputFormat::Table => print!("{}", report::render_table(&breakdown, rate)),
        OutputFormat::Json => print!("{}", report::render_breakdown_json(&breakdown)),
    }
    0
}

fn cmd_explain(graph_path: &PathBuf, metrics_path: &PathBuf, lenient: bool) -> u8 {
    let (graph, metrics) = match load_inputs(graph_path, metrics_path, lenient) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    let steps = match engine::trace(&graph, &metrics) {
        Ok(steps) => steps,
        Err(err) => return engine_failure(&err),
    };
    print!("{}", report::render_trace_text(&steps, metrics.mode()));
    0
}

fn cmd_diff(
    base_path: &PathBuf,
    variant_path: &PathBuf,
    metrics_path: &PathBuf,
    format: OutputFormat,
    lenient: bool,
) -> u8 {
    let (base_graph, metrics) = match load_inputs(base_path, metrics_path, lenient) {
        Ok(loaded) => loaded,
        Err(code) => return code,
    };
    let variant_graph = match load_graph(variant_path, lenient) {
        Ok(graph) => graph,
        Err(code) => return code,
    };
    if let Err(code) = check_graph(&variant_graph) {
        return code;
    }
    let base = match engine::estimate(&base_graph, &metrics) {
        Ok(breakdown) => breakdown,
        Err(err) => return engine_failure(&err),
    };
    let variant = match engine::estimate(&variant_graph, &metrics) {
        Ok(breakdown) => breakdown,
        Err(err) => return engine_failure(&err),
    };
    let diff = report::diff(&base, &variant)
        .expect("both runs share one configuration, so modes agree");
    match format {
        OutputFormat::Table => print!("{}", report::render_diff_text(&diff)),
        OutputFormat::Json => print!("{}", report::render_diff_json(&diff)),
    }
    0
}

/// Loads and validates the graph and configuration most commands start
/// with.
fn load_inputs(
    graph_path: &PathBuf,
    metrics_path: &PathBuf,
    lenient: bool,
) -> Result<(ServiceGraph, MetricSet), u8> {
    let graph = load_graph(graph_path, lenient)?;
    check_graph(&graph)?;
    let metrics = load_metrics(metrics_path, lenient)?;
    Ok((graph, metrics))
}
