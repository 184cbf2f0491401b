#ifndef HERMITE_VARIATIONS_H
#define HERMITE_VARIATIONS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HvStatus {
  Ok = 0,
  NullPointer = 1,
  ParamDomain = 2,
  Regime = 3,
  Range = 4,
  Numerical = 5,
  Degenerate = 6,
  Resource = 7,
  Internal = 8,
} HvStatus;

/**
 * Opaque simulated-path handle.
 */
typedef struct HvPath HvPath;

/**
 * Statistics of one path, mirroring the native variation report.
 * `normalized_v_n` and `normalized_error` are NaN outside the
 * Rosenblatt regime.
 */
typedef struct HvVariationReport {
  uint64_t n;
  double v_n;
  double s_n;
  double h_hat;
  double normalized_v_n;
  double normalized_error;
} HvVariationReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Simulate a Hermite path of `n` observations with oversampling `m`.
 * On success writes a handle to `out` and returns `Ok`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HvStatus hv_path_simulate(double h,
                               uint32_t q,
                               uintptr_t n,
                               uintptr_t m,
                               uint64_t seed,
                               uint64_t stream_index,
                               struct HvPath **out);

/**
 * Number of observations in the path.
 *
 * # Safety
 * `path` must come from `hv_path_simulate` and not be freed.
 */
uintptr_t hv_path_len(const struct HvPath *path);

/**
 * Copy the path values into `buf` (capacity `len`); returns the number
 * of values written.
 *
 * # Safety
 * `buf` must point to at least `len` doubles.
 */
uintptr_t hv_path_values(const struct HvPath *path, double *buf, uintptr_t len);

/**
 * Variation statistics of the path. Pass the true `h` used at
 * simulation time to get normalized statistics, or NaN to skip them.
 *
 * # Safety
 * `path` and `out` must be valid pointers.
 */
enum HvStatus hv_path_report(const struct HvPath *path,
                             double true_h,
                             struct HvVariationReport *out);

/**
 * Release a path handle. A null pointer is a no-op.
 *
 * # Safety
 * `path` must come from `hv_path_simulate` and not be freed twice.
 */
void hv_path_free(struct HvPath *path);

/**
 * Derived parameters: writes h' and the dominant-term variance constant
 * (NaN when 4h' - 3 <= 0) to the output pointers.
 *
 * # Safety
 * Non-null output pointers must be valid; nulls are skipped.
 */
enum HvStatus hv_constants(double h, uint32_t q, double *h_prime, double *d, double *c1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HERMITE_VARIATIONS_H */
