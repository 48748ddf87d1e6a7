#ifndef SU11_H
#define SU11_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Su11Status {
  SU11_STATUS_OK = 0,
  SU11_STATUS_NULL_POINTER = 1,
  SU11_STATUS_OUT_OF_RANGE = 2,
  SU11_STATUS_OUT_OF_REGIME = 3,
  SU11_STATUS_UNSUPPORTED = 4,
  SU11_STATUS_NUMERICAL = 5,
  SU11_STATUS_INVALID_ARGUMENT = 6,
  SU11_STATUS_PANIC = 7,
} Su11Status;

typedef enum Su11Observable {
  SU11_OBSERVABLE_SINGLES_A = 0,
  SU11_OBSERVABLE_SINGLES_B = 1,
  SU11_OBSERVABLE_COINCIDENCES = 2,
} Su11Observable;

typedef enum Su11AdvantageKind {
  SU11_ADVANTAGE_KIND_CONDITIONAL = 0,
  SU11_ADVANTAGE_KIND_UNCONDITIONAL = 1,
} Su11AdvantageKind;

typedef enum Su11Region {
  SU11_REGION_BETA_ONLY = 0,
  SU11_REGION_ALPHA_OR_BETA = 1,
  SU11_REGION_ALWAYS = 2,
  SU11_REGION_NEVER = 3,
} Su11Region;

/**
 * Opaque validated interferometer configuration.
 */
typedef struct Su11Config Su11Config;

typedef struct Su11ClickProbabilities {
  double p_a;
  double p_b;
  double p_cc;
} Su11ClickProbabilities;

typedef struct Su11Visibilities {
  double v_a;
  double v_b;
  double v_cc;
  bool defined_a;
  bool defined_b;
  bool defined_cc;
} Su11Visibilities;

typedef struct Su11FisherReport {
  double fi_at_phi;
  double fi_max;
  double phi_star;
  bool defined;
} Su11FisherReport;

typedef struct Su11Moments {
  double n_a;
  double n_b;
  double n_ab;
} Su11Moments;

typedef struct Su11Advantage {
  bool holds;
  /**
   * False when the validity condition fails; `threshold_gain_ratio` is then NaN.
   */
  bool has_threshold;
  double threshold_gain_ratio;
  double condition_value;
  double condition_bound;
} Su11Advantage;

typedef struct Su11RegionVerdict {
  enum Su11Region region;
  /**
   * NaN when the region has no such boundary.
   */
  double alpha;
  double beta;
  /**
   * True when the other mode's efficiency is 1 and only the limiting
   * region is reported.
   */
  bool limit_only;
} Su11RegionVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Validate a configuration and return a new handle through `out`.
 *
 * # Safety
 * `out` must be valid for writes of a pointer.
 */
enum Su11Status su11_config_new(double g1,
                                double g2,
                                double t_a,
                                double t_b,
                                double eta_a,
                                double eta_b,
                                double phi,
                                double theta,
                                struct Su11Config **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `config` must be null or a handle from [`su11_config_new`] not yet freed.
 */
void su11_config_free(struct Su11Config *config);

/**
 * Replace the second-stage gain.
 *
 * # Safety
 * `config` must be null or a live handle.
 */
enum Su11Status su11_config_set_g2(struct Su11Config *config, double g2);

/**
 * Closed-form low-gain click probabilities.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_analytic_click_probabilities(const struct Su11Config *config,
                                                  struct Su11ClickProbabilities *out);

/**
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_analytic_visibilities(const struct Su11Config *config,
                                           struct Su11Visibilities *out);

/**
 * Closed-form Fisher information at the configured phase and its maximum.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_analytic_fisher(const struct Su11Config *config,
                                     enum Su11Observable observable,
                                     struct Su11FisherReport *out);

/**
 * Exact `⟨n_a⟩`, `⟨n_b⟩`, `⟨n_a n_b⟩` at any gain.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_bogoliubov_moments(const struct Su11Config *config, struct Su11Moments *out);

/**
 * `‖T Σ T† − Σ‖` of the composed transfer matrix.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_bogoliubov_pseudo_unitarity_defect(const struct Su11Config *config,
                                                        double *out);

/**
 * Click probabilities simulated at Fock cutoff `cutoff`. The truncation
 * leakage estimate goes to `leakage` when it is not null.
 *
 * # Safety
 * `config` must be a live handle, `out` valid for writes and `leakage` null
 * or valid for writes.
 */
enum Su11Status su11_fock_click_probabilities(const struct Su11Config *config,
                                              size_t cutoff,
                                              struct Su11ClickProbabilities *out,
                                              double *leakage);

/**
 * Numeric Fisher information from the Fock simulation, with central
 * differences of step `phi_step`.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_fock_fisher(const struct Su11Config *config,
                                 size_t cutoff,
                                 enum Su11Observable observable,
                                 double phi_step,
                                 struct Su11FisherReport *out);

/**
 * Advantage over the SU(2) reference whose detector efficiency is
 * `su2_eta_max`.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_advantage(const struct Su11Config *config,
                               double su2_eta_max,
                               enum Su11Observable observable,
                               enum Su11AdvantageKind kind,
                               struct Su11Advantage *out);

/**
 * Region of `g2²/g1²` where singles of `observable` beat coincidences.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum Su11Status su11_singles_region(const struct Su11Config *config,
                                    enum Su11Observable observable,
                                    struct Su11RegionVerdict *out);

/**
 * Message of the last failed call on this thread, or null. The string
 * stays valid until the next failing call on the same thread.
 */
const char *su11_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SU11_H */
