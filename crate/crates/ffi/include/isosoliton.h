#ifndef ISOSOLITON_H
#define ISOSOLITON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * How one side of a trace ended.
 */
typedef enum IsoEventKind {
  ISO_EVENT_KIND_REGULAR_ENDPOINT = 0,
  ISO_EVENT_KIND_BLOW_UP_PLUS = 1,
  ISO_EVENT_KIND_BLOW_UP_MINUS = 2,
  ISO_EVENT_KIND_BUDGET_EXHAUSTED = 3,
} IsoEventKind;

/**
 * Result codes.
 */
typedef enum IsoStatus {
  ISO_STATUS_OK = 0,
  ISO_STATUS_NULL_POINTER = 1,
  ISO_STATUS_INVALID_PARAMS = 2,
  ISO_STATUS_DOMAIN = 3,
  ISO_STATUS_SINGULAR = 4,
  ISO_STATUS_PRECONDITION = 5,
  ISO_STATUS_NO_SIGN_CHANGE = 6,
  ISO_STATUS_INCOMPLETE_TRACE = 7,
  ISO_STATUS_UNSUPPORTED_K = 8,
  ISO_STATUS_IO = 9,
  ISO_STATUS_BUFFER_TOO_SMALL = 10,
  ISO_STATUS_PANIC = 11,
} IsoStatus;

/**
 * Opaque parameter handle.
 */
typedef struct IsoParams IsoParams;

/**
 * Opaque trace handle.
 */
typedef struct IsoTrace IsoTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *iso_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t iso_last_error_message(char *buf, size_t len);

/**
 * Creates a parameter handle for `(k, n, m1, m2)`.
 *
 * # Safety
 * `out_params` must be a valid pointer.
 */
enum IsoStatus iso_params_new(uint32_t k,
                              uint32_t n,
                              uint32_t m1,
                              uint32_t m2,
                              struct IsoParams **out_params);

/**
 * # Safety
 * `params` must be null or come from [`iso_params_new`] and not be freed twice.
 */
void iso_params_free(struct IsoParams *params);

/**
 * The constant `R` of a parameter set.
 *
 * # Safety
 * `params` and `out_r` must be valid pointers.
 */
enum IsoStatus iso_params_r(const struct IsoParams *params, double *out_r);

/**
 * `ψ'(r)` of the phase equation.
 *
 * # Safety
 * `params` and `out_value` must be valid pointers.
 */
enum IsoStatus iso_psi_rhs(const struct IsoParams *params, double r, double psi, double *out_value);

/**
 * Sign of `ψ'` from the region test: `1`, `0` or `-1`.
 *
 * # Safety
 * `params` and `out_sign` must be valid pointers.
 */
enum IsoStatus iso_sign_region(const struct IsoParams *params, double r, double psi, int *out_sign);

/**
 * Closed form `V'(-1)` (`side = -1`) or `V'(1)` (`side = 1`).
 *
 * # Safety
 * `params` and `out_value` must be valid pointers.
 */
enum IsoStatus iso_endpoint_vprime(const struct IsoParams *params, int which, double *out_value);

/**
 * Integrates the maximal solution through `(r0, psi0)`. `tol = 0` selects
 * the default tolerance.
 *
 * # Safety
 * `params` and `out_trace` must be valid pointers.
 */
enum IsoStatus iso_trace_new(const struct IsoParams *params,
                             double r0,
                             double psi0,
                             double tol,
                             struct IsoTrace **out_trace);

/**
 * Integrates the solution leaving the regular endpoint `side` (`-1` or `1`).
 * `tol = 0` selects the default tolerance.
 *
 * # Safety
 * `params` and `out_trace` must be valid pointers.
 */
enum IsoStatus iso_trace_from_endpoint(const struct IsoParams *params,
                                       int which,
                                       double tol,
                                       struct IsoTrace **out_trace);

/**
 * # Safety
 * `trace` must be null or come from an `iso_trace_*` constructor and not be
 * freed twice.
 */
void iso_trace_free(struct IsoTrace *trace);

/**
 * Number of stored samples, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a valid handle.
 */
size_t iso_trace_len(const struct IsoTrace *trace);

/**
 * Copies samples into caller arrays of length `cap`. Any of the four output
 * arrays may be null. Fails with `BufferTooSmall` if `cap` is below
 * [`iso_trace_len`].
 *
 * # Safety
 * Non-null arrays must have room for `cap` doubles.
 */
enum IsoStatus iso_trace_samples(const struct IsoTrace *trace,
                                 double *r,
                                 double *psi,
                                 double *vprime,
                                 double *v,
                                 size_t cap);

/**
 * Termination on `side` (`-1` left, `1` right): event kind and location.
 *
 * # Safety
 * `trace`, `out_kind` and `out_location` must be valid pointers.
 */
enum IsoStatus iso_trace_event(const struct IsoTrace *trace,
                               int which,
                               enum IsoEventKind *out_kind,
                               double *out_location);

/**
 * `ψ` at `r` by dense interpolation inside the trace span.
 *
 * # Safety
 * `trace` and `out_psi` must be valid pointers.
 */
enum IsoStatus iso_trace_psi_at(const struct IsoTrace *trace, double r, double *out_psi);

/**
 * Shape type of a complete trace: `1..=7` for types I to VII, `0` for an
 * unlisted shape. `crossing_tol <= 0` selects the default.
 *
 * # Safety
 * `trace` and `out_type` must be valid pointers.
 */
enum IsoStatus iso_trace_classify(const struct IsoTrace *trace, double crossing_tol, int *out_type);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOSOLITON_H */
