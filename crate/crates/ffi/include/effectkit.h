#ifndef EFFECTKIT_H
#define EFFECTKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every entry point.
 */
typedef enum EkStatus {
  EK_STATUS_OK = 0,
  EK_STATUS_NULL_POINTER = 1,
  EK_STATUS_INVALID_ARGUMENT = 2,
  EK_STATUS_DIMENSION_MISMATCH = 3,
  EK_STATUS_NOT_HERMITIAN = 4,
  EK_STATUS_NOT_PSD = 5,
  EK_STATUS_SINGULAR = 6,
  EK_STATUS_NUMERICAL_BREAKDOWN = 7,
  EK_STATUS_JSON = 8,
  EK_STATUS_INTERNAL = 9,
} EkStatus;

/**
 * Effect map handle.
 */
typedef struct EkMap EkMap;

/**
 * Dense complex matrix handle.
 */
typedef struct EkMatrix EkMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *ek_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be null.
 */
void ek_string_free(char *s);

/**
 * Builds a `rows × cols` matrix from `2·rows·cols` doubles laid out
 * row-major as real, imaginary pairs.
 *
 * # Safety
 * `data` must point to `2·rows·cols` readable doubles; `out` must be writable.
 */
enum EkStatus ek_matrix_new(uintptr_t rows,
                            uintptr_t cols,
                            const double *data,
                            struct EkMatrix **out);

/**
 * # Safety
 * `m` must be a handle from this library or null.
 */
void ek_matrix_free(struct EkMatrix *m);

/**
 * Number of rows; 0 for a null handle.
 *
 * # Safety
 * `m` must be a live handle or null.
 */
uintptr_t ek_matrix_rows(const struct EkMatrix *m);

/**
 * Number of columns; 0 for a null handle.
 *
 * # Safety
 * `m` must be a live handle or null.
 */
uintptr_t ek_matrix_cols(const struct EkMatrix *m);

/**
 * # Safety
 * `m` must be a live handle; `re` and `im` must be writable.
 */
enum EkStatus ek_matrix_get(const struct EkMatrix *m,
                            uintptr_t i,
                            uintptr_t j,
                            double *re,
                            double *im);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EkStatus ek_matrix_from_json(const char *json, struct EkMatrix **out);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum EkStatus ek_matrix_to_json(const struct EkMatrix *m, char **out);

/**
 * Random object as JSON. `kind` is one of `unitary`, `antiunitary`,
 * `effect`, `state`, `projection`, `ray`, `semilinear`, `mk`; projections
 * have rank `rank` (0 means 1).
 *
 * # Safety
 * `kind` must be a NUL-terminated string; `out` must be writable.
 */
enum EkStatus ek_generate(const char *kind,
                          uintptr_t dim,
                          uintptr_t rank,
                          uint64_t seed,
                          char **out);

/**
 * Whether `a ≤ b` in the Löwner order up to `tol`.
 *
 * # Safety
 * `a`, `b` must be live handles; `out` must be writable.
 */
enum EkStatus ek_loewner_leq(const struct EkMatrix *a,
                             const struct EkMatrix *b,
                             double tol,
                             bool *out);

/**
 * Strength of an effect along the ray spanned by a column vector
 * (normalized here).
 *
 * # Safety
 * `effect`, `ray` must be live handles; `out` must be writable.
 */
enum EkStatus ek_strength(const struct EkMatrix *effect, const struct EkMatrix *ray, double *out);

/**
 * `tr(E D)`.
 *
 * # Safety
 * `effect`, `state` must be live handles; `out` must be writable.
 */
enum EkStatus ek_trace_pair(const struct EkMatrix *effect,
                            const struct EkMatrix *state,
                            double *out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EkStatus ek_map_from_json(const char *json, struct EkMap **out);

/**
 * # Safety
 * `m` must be a handle from this library or null.
 */
void ek_map_free(struct EkMap *m);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum EkStatus ek_map_dim(const struct EkMap *m, uintptr_t *out);

/**
 * Image of an effect under the map.
 *
 * # Safety
 * `map`, `effect` must be live handles; `out` must be writable.
 */
enum EkStatus ek_map_apply(const struct EkMap *map,
                           const struct EkMatrix *effect,
                           struct EkMatrix **out);

/**
 * Staged classification; writes the JSON report. `trials` 0 means 100.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum EkStatus ek_classify_theorem1(const struct EkMap *map,
                                   const struct EkMatrix *d,
                                   const struct EkMatrix *d_prime,
                                   uint64_t seed,
                                   uintptr_t trials,
                                   char **out);

/**
 * Harness for the subspace map induced by a semilinear operator given as
 * JSON `{"matrix": …, "conjugating": bool}`. `trials` 0 means 100.
 *
 * # Safety
 * `operator_json` must be a NUL-terminated string; handles must be live;
 * `out` must be writable.
 */
enum EkStatus ek_theorem2(const char *operator_json,
                          const struct EkMatrix *d,
                          const struct EkMatrix *d_prime,
                          uint64_t seed,
                          uintptr_t trials,
                          char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EFFECTKIT_H */
