/* C interface to the riscap ergodic-capacity library. */

#ifndef RISCAP_H
#define RISCAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call. `Ok` is zero; anything nonzero leaves the
// out-parameters untouched and stores a detail string readable through
// `riscap_last_error_message`.
typedef enum RiscapStatus {
  RISCAP_STATUS_OK = 0,
  // A required pointer argument was null.
  RISCAP_STATUS_NULL_ARGUMENT = 1,
  // A value failed validation (dimension, domain, or configuration).
  RISCAP_STATUS_INVALID_ARGUMENT = 2,
  // A numeric routine failed (non-finite intermediate, failed factorization).
  RISCAP_STATUS_NUMERIC_FAILURE = 3,
  // Serialization or I/O failed.
  RISCAP_STATUS_IO_FAILURE = 4,
  // A panic was caught at the boundary; state is still consistent.
  RISCAP_STATUS_INTERNAL = 5,
} RiscapStatus;

// Reference-point capacity quantities evaluated by `riscap_ergodic_capacity`.
typedef enum RiscapQuantity {
  RISCAP_QUANTITY_EXACT_MC = 0,
  RISCAP_QUANTITY_APP_MC = 1,
  RISCAP_QUANTITY_APP_QUADRATURE = 2,
  RISCAP_QUANTITY_JEN1 = 3,
  RISCAP_QUANTITY_JEN2 = 4,
  RISCAP_QUANTITY_HIGH_SNR_UPPER = 5,
} RiscapQuantity;

// Output encodings for `riscap_run_json`.
typedef enum RiscapFormat {
  RISCAP_FORMAT_CSV = 0,
  RISCAP_FORMAT_JSON = 1,
} RiscapFormat;

// Opaque system configuration handle.
typedef struct RiscapConfig RiscapConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Detail message of the most recent failure on the calling thread, empty
// when the last call succeeded. The pointer stays valid until the next
// failing riscap call on the same thread.
const char *riscap_last_error_message(void);

// Static description of a status code; never null.
const char *riscap_status_message(enum RiscapStatus status);

// Creates a configuration with the reference defaults
// (16 BS antennas, 8x8 RIS, 16 user antennas, P = 6, L = 8, unit budget and
// noise). Returns through `out`; free with `riscap_config_free`.
enum RiscapStatus riscap_config_new_default(struct RiscapConfig **out);

// Creates a validated configuration. The RIS panel is `n_r_y` x `n_r_z`
// elements. Returns through `out`; free with `riscap_config_free`.
enum RiscapStatus riscap_config_new(uint32_t n_b,
                                    uint32_t n_r_y,
                                    uint32_t n_r_z,
                                    uint32_t n_u,
                                    uint32_t p_paths,
                                    uint32_t l_paths,
                                    double power_budget,
                                    double noise_var,
                                    struct RiscapConfig **out);

// Rescales the power budget so that `P_T / sigma^2` equals the given SNR.
enum RiscapStatus riscap_config_set_snr_db(struct RiscapConfig *cfg, double snr_db);

// Releases a configuration handle; a null pointer is a no-op.
void riscap_config_free(struct RiscapConfig *cfg);

// Ergodic-capacity estimate at the reference point (equal-power covariance,
// fresh random phases per realization), averaged over `trials` angle
// realizations drawn from `master_seed`. Writes the mean and its standard
// error. The high-SNR upper bound can be `-inf` (rank-deficient draws), in
// which case the standard error is NaN.
enum RiscapStatus riscap_ergodic_capacity(const struct RiscapConfig *cfg,
                                          enum RiscapQuantity quantity,
                                          uint64_t trials,
                                          uint64_t master_seed,
                                          double *out_value,
                                          double *out_std_err);

// Joint covariance/phase optimization over `trials` angle realizations.
// Writes the mean surrogate objective before and after optimization and the
// mean exact capacity of the optimized pair (over `gain_draws` fresh gain
// draws per realization).
enum RiscapStatus riscap_optimize(const struct RiscapConfig *cfg,
                                  uint64_t trials,
                                  uint64_t master_seed,
                                  uint64_t gain_draws,
                                  double *out_jen2_initial,
                                  double *out_jen2_final,
                                  double *out_exact);

// Runs a full experiment described by a JSON spec (same schema as the CLI
// `--config` file) and returns the result table as a newly allocated
// NUL-terminated string in the requested format. Free it with
// `riscap_string_free`.
enum RiscapStatus riscap_run_json(const char *spec_json, enum RiscapFormat format, char **out);

// Releases a string returned by `riscap_run_json`; a null pointer is a no-op.
void riscap_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISCAP_H */
