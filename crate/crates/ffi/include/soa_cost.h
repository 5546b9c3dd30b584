/* C interface for the soa-cost estimation library. */

#ifndef SOA_COST_H
#define SOA_COST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call in this interface.
typedef enum SoacostStatus {
  // The call succeeded.
  SOACOST_STATUS_OK = 0,
  // A required pointer argument was NULL.
  SOACOST_STATUS_NULL_ARGUMENT = 1,
  // An input string was not valid UTF-8.
  SOACOST_STATUS_INVALID_UTF8 = 2,
  // An input document could not be read as JSON.
  SOACOST_STATUS_PARSE_ERROR = 3,
  // The documents were readable but wrong: schema violations, unknown
  // builtins, invalid graphs, or estimation failures.
  SOACOST_STATUS_DOMAIN_ERROR = 4,
  // An unexpected internal failure; please report it.
  SOACOST_STATUS_INTERNAL_ERROR = 5,
} SoacostStatus;

// An owned, parsed service graph.
typedef struct SoacostGraph SoacostGraph;

// An owned, resolved set of the four estimator slots.
typedef struct SoacostMetrics SoacostMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the library version as a static string; never fails.
const char *soacost_version(void);

// Returns the message of the most recent failure on this thread, or an
// empty string.  The pointer is valid until the next failing call on the
// same thread.
const char *soacost_last_error_message(void);

// Parses a graph document into a new handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must point at writable
// storage for one pointer.
enum SoacostStatus soacost_graph_parse(const char *json, bool lenient, struct SoacostGraph **out);

// Releases a graph handle.  NULL is ignored.
//
// # Safety
// `graph` must be a pointer returned by [`soacost_graph_parse`] that has
// not been freed yet.
void soacost_graph_free(struct SoacostGraph *graph);

// Writes the validation report for a graph as a JSON document.  The call
// succeeds even when the graph has problems; the report's `ok` field and
// `errors` array carry the findings.
//
// # Safety
// `graph` must be a live handle; `out` must point at writable storage for
// one pointer.
enum SoacostStatus soacost_graph_validate_json(const struct SoacostGraph *graph, char **out);

// Parses and resolves a metric configuration document into a new handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must point at writable
// storage for one pointer.
enum SoacostStatus soacost_metrics_parse(const char *json,
                                         bool lenient,
                                         struct SoacostMetrics **out);

// Releases a metrics handle.  NULL is ignored.
//
// # Safety
// `metrics` must be a pointer returned by [`soacost_metrics_parse`] that
// has not been freed yet.
void soacost_metrics_free(struct SoacostMetrics *metrics);

// Estimates a graph and writes the itemized breakdown as a JSON document.
// `workers` of 0 or 1 runs sequentially; larger counts price independent
// subtrees concurrently with identical output.
//
// # Safety
// `graph` and `metrics` must be live handles; `out` must point at
// writable storage for one pointer.
enum SoacostStatus soacost_estimate_json(const struct SoacostGraph *graph,
                                         const struct SoacostMetrics *metrics,
                                         uint32_t workers,
                                         char **out);

// Writes the step-by-step evaluation narrative as a JSON document.
//
// # Safety
// `graph` and `metrics` must be live handles; `out` must point at
// writable storage for one pointer.
enum SoacostStatus soacost_trace_json(const struct SoacostGraph *graph,
                                      const struct SoacostMetrics *metrics,
                                      char **out);

// Estimates two graphs under one configuration and writes the comparison
// as a JSON document.
//
// # Safety
// `base`, `variant`, and `metrics` must be live handles; `out` must point
// at writable storage for one pointer.
enum SoacostStatus soacost_diff_json(const struct SoacostGraph *base,
                                     const struct SoacostGraph *variant,
                                     const struct SoacostMetrics *metrics,
                                     char **out);

// Releases a string returned through any out-pointer.  NULL is ignored.
//
// # Safety
// `text` must be a pointer this library returned that has not been freed
// yet.
void soacost_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOA_COST_H */
