#ifndef IAS_H
#define IAS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IasStatus {
  IAS_STATUS_OK = 0,
  IAS_STATUS_NULL_POINTER = 1,
  IAS_STATUS_INVALID_ARGUMENT = 2,
  IAS_STATUS_CONFIG = 3,
  IAS_STATUS_PRECONDITION = 4,
  IAS_STATUS_UNDER_DETERMINED = 5,
  IAS_STATUS_FIT_NOT_CONVERGED = 6,
  IAS_STATUS_NO_PEAK = 7,
  IAS_STATUS_PARSE = 8,
  IAS_STATUS_IO = 9,
  IAS_STATUS_SIMULATION = 10,
  IAS_STATUS_PANIC = 11,
} IasStatus;

/**
 * Records of one adaptive run; on failure, the iterations completed before it.
 */
typedef struct IasRunResult IasRunResult;

/**
 * Parsed and validated scenario.
 */
typedef struct IasScenario IasScenario;

/**
 * Avoided-crossing spectroscopy points.
 */
typedef struct IasSpectroscopy IasSpectroscopy;

/**
 * Geometry and sensitivity for the charge conversions.
 */
typedef struct IasChargeModel {
  /**
   * Splitting shift per charge density, Hz per C/m³.
   */
  double slope;
  double length;
  double width;
  double thickness;
  double elementary_charge;
  double baseline_splitting_hz;
} IasChargeModel;

typedef struct IasFitSummary {
  double splitting_hz;
  double splitting_sigma_hz;
  double crossing_voltage;
  double rms_residual_hz;
  uintptr_t points_used;
  bool converged;
} IasFitSummary;

/**
 * One iteration of an adaptive run.
 */
typedef struct IasEstimate {
  uintptr_t iteration;
  double prior_hz;
  double estimate_hz;
  double uncertainty_hz;
  /**
   * NaN when the unwindowed spectrum had no peak.
   */
  double unprocessed_hz;
  uintptr_t fringes;
  bool processed;
  bool converged;
  double padded_bin_hz;
} IasEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *ias_version(void);

/**
 * Copy of the last error message on this thread, or null if the last call
 * succeeded. Release with [`ias_string_free`].
 */
char *ias_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library that has not
 * been freed yet.
 */
void ias_string_free(char *s);

/**
 * Normal-mode angular frequencies (ω₊, ω₋) of two coupled oscillators with
 * bare frequencies `omega1`, `omega2` and coupling `omega_kappa`, all rad/s.
 *
 * # Safety
 * `plus` and `minus` must be valid for writes.
 */
enum IasStatus ias_normal_mode_frequencies(double omega1,
                                           double omega2,
                                           double omega_kappa,
                                           double *plus,
                                           double *minus);

struct IasChargeModel ias_charge_model_default(void);

/**
 * Charge density (C/m³) and electron count equivalent to a splitting shift.
 *
 * # Safety
 * `model` must be readable; `density` and `electrons` writable.
 */
enum IasStatus ias_shift_to_charge(const struct IasChargeModel *model,
                                   double shift_hz,
                                   double *density,
                                   double *electrons);

/**
 * Single-tone frequency estimate in Hz of `len` samples spaced `dt` seconds
 * and spanning `fringes` periods. With `windowed` false no window is applied.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out_hz` be writable.
 */
enum IasStatus ias_estimate_frequency(const double *values,
                                      uintptr_t len,
                                      double dt,
                                      uintptr_t fringes,
                                      bool windowed,
                                      uintptr_t pad_factor,
                                      double *out_hz);

struct IasSpectroscopy *ias_spectroscopy_new(void);

/**
 * Loads points from a CSV file with columns voltage_V,frequency_Hz[,branch].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum IasStatus ias_spectroscopy_from_csv(const char *path, struct IasSpectroscopy **out);

/**
 * Appends a point. `branch` is 1 for the upper branch, -1 for the lower one
 * and 0 when unassigned.
 *
 * # Safety
 * `handle` must come from this library and not be freed.
 */
enum IasStatus ias_spectroscopy_push(struct IasSpectroscopy *handle,
                                     double voltage,
                                     double frequency_hz,
                                     int32_t branch);

/**
 * Number of points; 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live handle from this library.
 */
uintptr_t ias_spectroscopy_len(const struct IasSpectroscopy *handle);

/**
 * # Safety
 * `handle` must be null or a live handle from this library.
 */
void ias_spectroscopy_free(struct IasSpectroscopy *handle);

/**
 * Fits the avoided-crossing model starting from the reference tuning.
 * When the fit does not converge the best point found is still written to
 * `out` and [`IasStatus::FitNotConverged`] is returned.
 *
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum IasStatus ias_fit_avoided_crossing(const struct IasSpectroscopy *handle,
                                        struct IasFitSummary *out);

/**
 * Parses a TOML scenario document.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` writable.
 */
enum IasStatus ias_scenario_from_str(const char *toml, struct IasScenario **out);

/**
 * Reads a TOML scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum IasStatus ias_scenario_from_file(const char *path, struct IasScenario **out);

/**
 * # Safety
 * `handle` must be a live scenario handle.
 */
enum IasStatus ias_scenario_set_seed(struct IasScenario *handle, uint64_t seed);

/**
 * # Safety
 * `handle` must be a live scenario handle.
 */
enum IasStatus ias_scenario_set_repeats(struct IasScenario *handle, uintptr_t repeats);

/**
 * # Safety
 * `handle` must be a live scenario handle.
 */
enum IasStatus ias_scenario_set_max_iter(struct IasScenario *handle, uintptr_t max_iter);

/**
 * # Safety
 * `handle` must be null or a live handle from this library.
 */
void ias_scenario_free(struct IasScenario *handle);

/**
 * Runs the adaptive loop of a scenario. `out` receives a result handle even
 * when a later iteration fails, holding the completed iterations.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum IasStatus ias_run_ias(const struct IasScenario *scenario, struct IasRunResult **out);

/**
 * Number of iterations; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uintptr_t ias_run_result_len(const struct IasRunResult *result);

/**
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
enum IasStatus ias_run_result_get(const struct IasRunResult *result,
                                  uintptr_t index,
                                  struct IasEstimate *out);

/**
 * Full records as JSON, or null on failure. Release with [`ias_string_free`].
 *
 * # Safety
 * `result` must be a live handle.
 */
char *ias_run_result_to_json(const struct IasRunResult *result);

/**
 * # Safety
 * `result` must be null or a live handle from this library.
 */
void ias_run_result_free(struct IasRunResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IAS_H */
