#ifndef GDARB_H
#define GDARB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GdarbStatus {
  GDARB_STATUS_OK = 0,
  GDARB_STATUS_NULL_ARGUMENT = 1,
  GDARB_STATUS_INVALID_ARGUMENT = 2,
  GDARB_STATUS_PARSE_ERROR = 3,
  GDARB_STATUS_MODEL_ERROR = 4,
  GDARB_STATUS_UNSUPPORTED = 5,
  GDARB_STATUS_NUMERIC_ERROR = 6,
  GDARB_STATUS_SIMULATION_ERROR = 7,
  GDARB_STATUS_IO_ERROR = 8,
  GDARB_STATUS_PANIC = 9,
} GdarbStatus;

typedef enum GdarbStrategy {
  GDARB_STRATEGY_THETA = 0,
  GDARB_STRATEGY_THETA_BAR = 1,
  GDARB_STRATEGY_NEG_THETA = 2,
  GDARB_STRATEGY_HOLD = 3,
} GdarbStrategy;

typedef enum GdarbVerdict {
  GDARB_VERDICT_INCREASING_PROFIT = 0,
  GDARB_VERDICT_NOT = 1,
  GDARB_VERDICT_INCONCLUSIVE = 2,
} GdarbVerdict;

/**
 * A validated model together with its ν.
 */
typedef struct GdarbModel GdarbModel;

typedef struct GdarbVerdicts {
  bool nip;
  bool qvip_exists;
  bool rp_holds;
  double nu_total_variation;
  double nu_ac_total_variation;
  double lambda_zero_set;
  double lambda_zero_set_with_density;
  /**
   * The density part of ν was cut to the simulation window.
   */
  bool truncated;
} GdarbVerdicts;

typedef struct GdarbMcConfig {
  size_t n_paths;
  double h;
  double horizon;
  uint64_t seed;
  double tol_route;
} GdarbMcConfig;

typedef struct GdarbIpReport {
  enum GdarbVerdict verdict;
  bool condition_i;
  bool condition_ii;
  bool identically_zero;
  size_t n_paths;
  double monotone_fraction;
  double p_positive;
  double se_positive;
  double p_negative;
  double se_negative;
  /**
   * Mean relative discrepancy of the two value routes; NaN when only the
   * integral route applies.
   */
  double route_error;
  double mean_value;
  double dominated_fraction;
  double window_fraction;
} GdarbIpReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a catalog example. `keys` and `values` hold `n_params` parameter
 * overrides; both may be null when `n_params` is 0.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; strings nul-terminated.
 */
enum GdarbStatus gdarb_model_from_catalog(const char *name,
                                          const char *const *keys,
                                          const double *values,
                                          size_t n_params,
                                          struct GdarbModel **out);

/**
 * Parses a model file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` writable.
 */
enum GdarbStatus gdarb_model_from_file(const char *path, struct GdarbModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void gdarb_model_free(struct GdarbModel *model);

/**
 * Name of the model (catalog name or file path). Free with `gdarb_string_free`.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
char *gdarb_model_label(const struct GdarbModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum GdarbStatus gdarb_model_verdicts(const struct GdarbModel *model, struct GdarbVerdicts *out);

/**
 * Copies up to `capacity` atoms of ν (natural-scale location, mass) and
 * stores the total number in `count`. Pass `capacity = 0` to query the count.
 *
 * # Safety
 * `locations` and `masses` must hold `capacity` doubles; `count` writable.
 */
enum GdarbStatus gdarb_model_nu_atoms(const struct GdarbModel *model,
                                      double *locations,
                                      double *masses,
                                      size_t capacity,
                                      size_t *count);

/**
 * The defaults used by the command line.
 */
struct GdarbMcConfig gdarb_mc_config_default(void);

/**
 * Backtests one of the built-in strategies (a `GdarbStrategy` value) and
 * classifies it.
 *
 * # Safety
 * `model` must be a live handle; `config` readable or null for defaults;
 * `out` writable.
 */
enum GdarbStatus gdarb_model_backtest(const struct GdarbModel *model,
                                      int32_t strategy,
                                      const struct GdarbMcConfig *config,
                                      struct GdarbIpReport *out);

/**
 * Copy of the calling thread's last error message, or null if there was
 * none. Free with `gdarb_string_free`.
 */
char *gdarb_last_error(void);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void gdarb_string_free(char *s);

/**
 * Static description of a status code.
 */
const char *gdarb_status_name(enum GdarbStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GDARB_H */
