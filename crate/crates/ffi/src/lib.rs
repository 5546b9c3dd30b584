//! C ABI for the estimation library.
//!
//! The surface is deliberately narrow: callers hand in JSON documents,
//! receive JSON documents back, and manage three resource kinds — graph
//! handles, metric-set handles, and returned strings — each with its own
//! free function.  Every entry point returns a [`SoacostStatus`]; on any
//! failure the thread-local message from [`soacost_last_error_message`]
//! explains what went wrong.
//!
//! Rules for callers:
//! * Strings passed in must be NUL-terminated UTF-8.
//! * Strings returned through out-pointers are owned by the caller and
//!   must be released with [`soacost_string_free`].
//! * Handles must be released with their matching free function, exactly
//!   once.
//! * The error message pointer is only valid until the next failing call
//!   on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use soa_cost::doc::{self, DocError, ParseOptions};
use soa_cost::{builtin_registry, estimate_with_workers, report, trace};
use soa_cost::{MetricSet, ServiceGraph};

/// Result of every call in this interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoacostStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An input document could not be read as JSON.
    ParseError = 3,
    /// The documents were readable but wrong: schema violations, unknown
    /// builtins, invalid graphs, or estimation failures.
    DomainError = 4,
    /// An unexpected internal failure; please report it.
    InternalError = 5,
}

/// An owned, parsed service graph.
pub struct SoacostGraph {
    inner: ServiceGraph,
}

/// An owned, resolved set of the four estimator slots.
pub struct SoacostMetrics {
    inner: MetricSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn remember_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn doc_status(err: &DocError) -> SoacostStatus {
    if err.is_input_unreadable() {
        SoacostStatus::ParseError
    } else {
        SoacostStatus::DomainError
    }
}

fn fail(status: SoacostStatus, message: &str) -> SoacostStatus {
    remember_error(message);
    status
}

/// Runs a body, converting panics into [`SoacostStatus::InternalError`].
fn guarded(body: impl FnOnce() -> SoacostStatus) -> SoacostStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(SoacostStatus::InternalError, "internal panic"),
    }
}

/// Reads a required C string argument.
///
/// # Safety
/// `text` must be NULL or a valid NUL-terminated string.
unsafe fn read_str<'a>(text: *const c_char, what: &str) -> Result<&'a str, SoacostStatus> {
    if text.is_null() {
        return Err(fail(
            SoacostStatus::NullArgument,
            &format!("{what} must not be NULL"),
        ));
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        fail(
            SoacostStatus::InvalidUtf8,
            &format!("{what} must be valid UTF-8"),
        )
    })
}

fn write_string(out: *mut *mut c_char, text: String) -> SoacostStatus {
    let owned = match CString::new(text) {
        Ok(owned) => owned,
        Err(_) => return fail(SoacostStatus::InternalError, "rendered output contained NUL"),
    };
    // Safety relies on the caller's contract: `out` was checked non-NULL.
    unsafe { *out = owned.into_raw() };
    SoacostStatus::Ok
}

macro_rules! require_non_null {
    ($ptr:ident) => {
        if $ptr.is_null() {
            return fail(
                SoacostStatus::NullArgument,
                concat!(stringify!($ptr), " must not be NULL"),
            );
        }
    };
}

/// Returns the library version as a static string; never fails.
#[no_mangle]
pub extern "C" fn soacost_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Returns the message of the most recent failure on this thread, or an
/// empty string.  The pointer is valid until the next failing call on the
/// same thread.
#[no_mangle]
pub extern "C" fn soacost_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a graph document into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must point at writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn soacost_graph_parse(
    json: *const c_char,
    lenient: bool,
    out: *mut *mut SoacostGraph,
) -> SoacostStatus {
    guarded(|| {
        require_non_null!(out);
        let text = match read_str(json, "graph JSON") {
            Ok(text) => text,
            Err(status) => return status,
        };
        match doc::parse_graph(text, ParseOptions { lenient }) {
            Ok(parsed) => {
                let handle = Box::new(SoacostGraph {
                    inner: parsed.value,
                });
                *out = Box::into_raw(handle);
                SoacostStatus::Ok
            }
            Err(err) => fail(doc_status(&err), &err.to_string()),
        }
    })
}

/// Releases a graph handle.  NULL is ignored.
///
/// # Safety
/// `graph` must be a pointer returned by [`soacost_graph_parse`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn soacost_graph_free(graph: *mut SoacostGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Writes the validation report for a graph as a JSON document.  The call
/// succeeds even when the graph has problems; the report's `ok` field and
/// `errors` array carry the findings.
///
/// # Safety
/// `graph` must be a live handle; `out` must point at writable storage for
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn soacost_graph_validate_json(
    graph: *const SoacostGraph,
    out: *mut *mut c_char,
) -> SoacostStatus {
    guarded(|| {
        require_non_null!(graph);
        require_non_null!(out);
        let report = (*graph).inner.validate();
        write_string(out, report::render_validation_json(&report))
    })
}

/// Parses and resolves a metric configuration document into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must point at writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn soacost_metrics_parse(
    json: *const c_char,
    lenient: bool,
    out: *mut *mut SoacostMetrics,
) -> SoacostStatus {
    guarded(|| {
        require_non_null!(out);
        let text = match read_str(json, "metrics JSON") {
            Ok(text) => text,
            Err(status) => return status,
        };
        let config = match doc::parse_metrics(text, ParseOptions { lenient }) {
            Ok(parsed) => parsed.value,
            Err(err) => return fail(doc_status(&err), &err.to_string()),
        };
        match config.resolve(&builtin_registry()) {
            Ok(set) => {
                let handle = Box::new(SoacostMetrics { inner: set });
                *out = Box::into_raw(handle);
                SoacostStatus::Ok
            }
            Err(err) => fail(SoacostStatus::DomainError, &err.to_string()),
        }
    })
}

/// Releases a metrics handle.  NULL is ignored.
///
/// # Safety
/// `metrics` must be a pointer returned by [`soacost_metrics_parse`] that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn soacost_metrics_free(metrics: *mut SoacostMetrics) {
    if !metrics.is_null() {
        drop(Box::from_raw(metrics));
    }
}

/// Estimates a graph and writes the itemized breakdown as a JSON document.
/// `workers` of 0 or 1 runs sequentially; larger counts price independent
/// subtrees concurrently with identical output.
///
/// # Safety
/// `graph` and `metrics` must be live handles; `out` must point at
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn soacost_estimate_json(
    graph: *const SoacostGraph,
    metrics: *const SoacostMetrics,
    workers: u32,
    out: *mut *mut c_char,
) -> SoacostStatus {
    guarded(|| {
        require_non_null!(graph);
        require_non_null!(metrics);
        require_non_null!(out);
        let workers = (workers.max(1)) as usize;
        match estimate_with_workers(&(*graph).inner, &(*metrics).inner, workers) {
            Ok(breakdown) => write_string(out, report::render_breakdown_json(&breakdown)),
            Err(err) => fail(SoacostStatus::DomainError, &err.to_string()),
        }
    })
}

/// Writes the step-by-step evaluation narrative as a JSON document.
///
/// # Safety
/// `graph` and `metrics` must be live handles; `out` must point at
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn soacost_trace_json(
    graph: *const SoacostGraph,
    metrics: *const SoacostMetrics,
    out: *mut *mut c_char,
) -> SoacostStatus {
    guarded(|| {
        require_non_null!(graph);
        require_non_null!(metrics);
        require_non_null!(out);
        match trace(&(*graph).inner, &(*metrics).inner) {
            Ok(steps) => write_string(
                out,
                report::render_trace_json(&steps, (*metrics).inner.mode()),
            ),
            Err(err) => fail(SoacostStatus::DomainError, &err.to_string()),
        }
    })
}

/// Estimates two graphs under one configuration and writes the comparison
/// as a JSON document.
///
/// # Safety
/// `base`, `variant`, and `metrics` must be live handles; `out` must point
/// at writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn soacost_diff_json(
    base: *const SoacostGraph,
    variant: *const SoacostGraph,
    metrics: *const SoacostMetrics,
    out: *mut *mut c_char,
) -> SoacostStatus {
    guarded(|| {
        require_non_null!(base);
        require_non_null!(variant);
        require_non_null!(metrics);
        require_non_null!(out);
        let set = &(*metrics).inner;
        let base_run = match estimate_with_workers(&(*base).inner, set, 1) {
            Ok(breakdown) => breakdown,
            Err(err) => return fail(SoacostStatus::DomainError, &err.to_string()),
        };
        let variant_run = match estimate_with_workers(&(*variant).inner, set, 1) {
            Ok(breakdown) => breakdown,
            Err(err) => return fail(SoacostStatus::DomainError, &err.to_string()),
        };
        let comparison = soa_cost::diff(&base_run, &variant_run)
            .expect("both runs used one configuration, so modes agree");
        write_string(out, report::render_diff_json(&comparison))
    })
}

/// Releases a string returned through any out-pointer.  NULL is ignored.
///
/// # Safety
/// `text` must be a pointer this library returned that has not been freed
/// yet.
#[no_mangle]
pub unsafe extern "C" fn soacost_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    const RAILCO: &str = include_str!("../../../fixtures/railco.json");
    const UNIT_METRICS: &str = include_str!("../../../fixtures/metrics-unit.json");

    fn c(text: &str) -> CString {
        CString::new(text).expect("test inputs hold no NUL")
    }

    fn parse_graph(text: &str) -> *mut SoacostGraph {
        let json = c(text);
        let mut handle = ptr::null_mut();
        let status = unsafe { soacost_graph_parse(json.as_ptr(), false, &mut handle) };
        assert_eq!(status, SoacostStatus::Ok, "{}", last_error());
        assert!(!handle.is_null());
        handle
    }

    fn parse_metrics(text: &str) -> *mut SoacostMetrics {
        let json = c(text);
        let mut handle = ptr::null_mut();
        let status = unsafe { soacost_metrics_parse(json.as_ptr(), false, &mut handle) };
        assert_eq!(status, SoacostStatus::Ok, "{}", last_error());
        handle
    }

    fn take_string(text: *mut c_char) -> String {
        assert!(!text.is_null());
        let owned = unsafe { CStr::from_ptr(text) }.to_str().expect("UTF-8").to_owned();
        unsafe { soacost_string_free(text) };
        owned
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(soacost_last_error_message()) }
            .to_str()
            .expect("UTF-8")
            .to_owned()
    }

    #[test]
    fn version_is_a_static_string() {
        let version = unsafe { CStr::from_ptr(soacost_version()) };
        assert_eq!(version.to_str().expect("UTF-8"), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn estimates_the_case_fixture() {
        let graph = parse_graph(RAILCO);
        let metrics = parse_metrics(UNIT_METRICS);
        let mut rendered = ptr::null_mut();
        let status = unsafe { soacost_estimate_json(graph, metrics, 1, &mut rendered) };
        assert_eq!(status, SoacostStatus::Ok, "{}", last_error());
        let json = take_string(rendered);
        assert!(json.contains("\"total_milli\":12000"), "got: {json}");

        let mut parallel = ptr::null_mut();
        let status = unsafe { soacost_estimate_json(graph, metrics, 4, &mut parallel) };
        assert_eq!(status, SoacostStatus::Ok);
        assert_eq!(take_string(parallel), json, "worker count must not change output");

        unsafe {
            soacost_metrics_free(metrics);
            soacost_graph_free(graph);
        }
    }

    #[test]
    fn traces_the_case_fixture() {
        let graph = parse_graph(RAILCO);
        let metrics = parse_metrics(UNIT_METRICS);
        let mut rendered = ptr::null_mut();
        let status = unsafe { soacost_trace_json(graph, metrics, &mut rendered) };
        assert_eq!(status, SoacostStatus::Ok, "{}", last_error());
        let json = take_string(rendered);
        assert_eq!(json.matches("\"ordinal\"").count(), 13, "got: {json}");
        unsafe {
            soacost_metrics_free(metrics);
            soacost_graph_free(graph);
        }
    }

    #[test]
    fn validation_report_carries_findings() {
        let clean = parse_graph(RAILCO);
        let mut rendered = ptr::null_mut();
        assert_eq!(
            unsafe { soacost_graph_validate_json(clean, &mut rendered) },
            SoacostStatus::Ok
        );
        assert!(take_string(rendered).contains("\"ok\":true"));
        unsafe { soacost_graph_free(clean) };

        let cyclic = parse_graph(
            r#"{"root": "a", "services": [
                {"id": "a", "kind": "combined", "children": ["b"]},
                {"id": "b", "kind": "combined", "children": ["a"]}]}"#,
        );
        let mut rendered = ptr::null_mut();
        assert_eq!(
            unsafe { soacost_graph_validate_json(cyclic, &mut rendered) },
            SoacostStatus::Ok
        );
        let report = take_string(rendered);
        assert!(report.contains("\"ok\":false"), "got: {report}");
        assert!(report.contains("CYCLE"), "got: {report}");

        // Estimation refuses what validation flagged.
        let metrics = parse_metrics(UNIT_METRICS);
        let mut out = ptr::null_mut();
        assert_eq!(
            unsafe { soacost_estimate_json(cyclic, metrics, 1, &mut out) },
            SoacostStatus::DomainError
        );
        assert!(last_error().contains("CYCLE"), "got: {}", last_error());
        unsafe {
            soacost_metrics_free(metrics);
            soacost_graph_free(cyclic);
        }
    }

    #[test]
    fn diff_of_identical_graphs_is_quiet() {
        let base = parse_graph(RAILCO);
        let variant = parse_graph(RAILCO);
        let metrics = parse_metrics(UNIT_METRICS);
        let mut rendered = ptr::null_mut();
        let status = unsafe { soacost_diff_json(base, variant, metrics, &mut rendered) };
        assert_eq!(status, SoacostStatus::Ok, "{}", last_error());
        let json = take_string(rendered);
        assert!(json.contains("\"delta_milli\":0"), "got: {json}");
        unsafe {
            soacost_metrics_free(metrics);
            soacost_graph_free(variant);
            soacost_graph_free(base);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        let mut out = ptr::null_mut();
        assert_eq!(
            unsafe { soacost_graph_parse(ptr::null(), false, &mut out) },
            SoacostStatus::NullArgument
        );
        assert!(last_error().contains("NULL"));
        let json = c(RAILCO);
        assert_eq!(
            unsafe { soacost_graph_parse(json.as_ptr(), false, ptr::null_mut()) },
            SoacostStatus::NullArgument
        );
    }

    #[test]
    fn bad_inputs_map_to_distinct_statuses() {
        let mut out = ptr::null_mut();

        let invalid_utf8 = CString::new(vec![0xFFu8, 0xFE]).expect("no NUL bytes");
        assert_eq!(
            unsafe { soacost_graph_parse(invalid_utf8.as_ptr(), false, &mut out) },
            SoacostStatus::InvalidUtf8
        );

        let truncated = c("{\"root\": \"a\"");
        assert_eq!(
            unsafe { soacost_graph_parse(truncated.as_ptr(), false, &mut out) },
            SoacostStatus::ParseError
        );

        let wrong_schema = c(r#"{"services": []}"#);
        assert_eq!(
            unsafe { soacost_graph_parse(wrong_schema.as_ptr(), false, &mut out) },
            SoacostStatus::DomainError
        );
        assert!(last_error().contains("root"), "got: {}", last_error());

        let unknown_builtin = c(
            r#"{"mode": "cost", "e1": {"builtin": "crystal-ball"},
                "e2": {"builtin": "unit"}, "e3": {"builtin": "unit"},
                "e4": {"builtin": "unit"}}"#,
        );
        let mut metrics_out = ptr::null_mut();
        assert_eq!(
            unsafe { soacost_metrics_parse(unknown_builtin.as_ptr(), false, &mut metrics_out) },
            SoacostStatus::DomainError
        );
        assert!(last_error().contains("crystal-ball"), "got: {}", last_error());
    }

    #[test]
    fn freeing_null_is_a_no_op() {
        unsafe {
            soacost_graph_free(ptr::null_mut());
            soacost_metrics_free(ptr::null_mut());
            soacost_string_free(ptr::null_mut());
        }
    }
}
