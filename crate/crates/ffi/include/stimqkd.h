#ifndef STIMQKD_H
#define STIMQKD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes returned by every fallible entry point.
typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  SQ_STATUS_INVALID_DIMENSION = 3,
  SQ_STATUS_GRID = 4,
  SQ_STATUS_NUMERICAL = 5,
  SQ_STATUS_CONFIG = 6,
  SQ_STATUS_IO = 7,
  SQ_STATUS_OUT_OF_RANGE = 8,
  SQ_STATUS_PANIC = 9,
} SqStatus;

// Built-in configuration presets.
typedef enum SqPreset {
  SQ_PRESET_DESK = 0,
  SQ_PRESET_FULL = 1,
} SqPreset;

// Scheme selector for sweep rows.
typedef enum SqScheme {
  SQ_SCHEME_PREPARE_MEASURE = 0,
  SQ_SCHEME_STIMULATED = 1,
} SqScheme;

// Opaque scenario configuration.
typedef struct SqConfig SqConfig;

// Opaque pair of mutually unbiased coefficient bases.
typedef struct SqMub SqMub;

// Opaque sweep result.
typedef struct SqSweep SqSweep;

// One aggregated point of a sweep.
typedef struct SqRow {
  uint32_t scheme;
  uint32_t dimension;
  double d_over_r0;
  double qer;
  double qer_se;
  double key_rate;
  double key_rate_se;
  double fidelity_loss;
  double fidelity_loss_se;
  double q_max;
  uint32_t realizations;
} SqRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or null.
//
// The pointer stays valid until the next call into this library from the same thread.
const char *sq_last_error(void);

// Library version as a static NUL-terminated string.
const char *sq_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and must not be freed twice.
void sq_string_free(char *s);

// Largest error rate with a positive key rate in dimension `d`.
//
// # Safety
// `out` must be valid for a write.
enum SqStatus sq_q_max(uint32_t d, double *out);

// Secure key rate in bits per sifted photon.
//
// # Safety
// `out` must be valid for a write.
enum SqStatus sq_secure_key_rate(uint32_t d, double qer, double *out);

// Plane-wave Rytov variance.
//
// # Safety
// `out` must be valid for a write.
enum SqStatus sq_rytov_variance(double cn2, double wavelength, double path_length, double *out);

// Fried parameter in metres.
//
// # Safety
// `out` must be valid for a write.
enum SqStatus sq_fried_parameter(double cn2, double wavelength, double path_length, double *out);

// Probe waist that matches idler and probe diameters at the receiver.
//
// # Safety
// `out` must be valid for a write.
enum SqStatus sq_optimize_probe_waist(double path_length,
                                      double gamma,
                                      double wavelength,
                                      uint32_t l_max,
                                      double *out);

// Builds the certified pair of unbiased bases for dimension `d`.
//
// # Safety
// `out` must be valid for a write.
enum SqStatus sq_mub_new(uint32_t d, struct SqMub **out);

// Dimension of the bases, or 0 for a null handle.
//
// # Safety
// `mub` must be null or a live handle.
uint32_t sq_mub_dimension(const struct SqMub *mub);

// Copies the OAM charges indexing the coefficients into `out[0..d]`.
//
// # Safety
// `mub` must be a live handle and `out` valid for `len` writes.
enum SqStatus sq_mub_oam_range(const struct SqMub *mub, int32_t *out, size_t len);

// Copies vector `index` of basis `basis` into split real and imaginary buffers.
//
// # Safety
// `mub` must be a live handle; `re` and `im` must be valid for `len` writes.
enum SqStatus sq_mub_vector(const struct SqMub *mub,
                            uint32_t basis,
                            uint32_t index,
                            double *re,
                            double *im,
                            size_t len);

// Checks orthonormality and unbiasedness to `tol`; writes 1 on success, 0 otherwise.
//
// # Safety
// `mub` must be a live handle and `passed` valid for a write.
enum SqStatus sq_mub_verify(const struct SqMub *mub, double tol, int32_t *passed);

// Releases a basis handle. Null is ignored.
//
// # Safety
// `mub` must come from [`sq_mub_new`] and must not be freed twice.
void sq_mub_free(struct SqMub *mub);

// Creates a configuration from a preset.
//
// # Safety
// `out` must be valid for a write.
enum SqStatus sq_config_preset(enum SqPreset preset, struct SqConfig **out);

// Parses and validates a TOML configuration.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` valid for a write.
enum SqStatus sq_config_from_toml(const char *toml, struct SqConfig **out);

// Serializes a configuration to TOML. Free the result with [`sq_string_free`].
//
// # Safety
// `config` must be a live handle and `out` valid for a write.
enum SqStatus sq_config_to_toml(const struct SqConfig *config, char **out);

// Overrides the number of channel realizations per point.
//
// # Safety
// `config` must be a live handle.
enum SqStatus sq_config_set_realizations(struct SqConfig *config, uint32_t realizations);

// Overrides the master seed.
//
// # Safety
// `config` must be a live handle.
enum SqStatus sq_config_set_seed(struct SqConfig *config, uint64_t seed);

// Releases a configuration handle. Null is ignored.
//
// # Safety
// `config` must come from this library and must not be freed twice.
void sq_config_free(struct SqConfig *config);

// Runs every point of the configured sweep.
//
// # Safety
// `config` must be a live handle and `out` valid for a write.
enum SqStatus sq_sweep_run(const struct SqConfig *config, struct SqSweep **out);

// Number of successful points, or 0 for a null handle.
//
// # Safety
// `sweep` must be null or a live handle.
size_t sq_sweep_row_count(const struct SqSweep *sweep);

// Number of points that failed, or 0 for a null handle.
//
// # Safety
// `sweep` must be null or a live handle.
size_t sq_sweep_failure_count(const struct SqSweep *sweep);

// Copies point `index` into `out`.
//
// # Safety
// `sweep` must be a live handle and `out` valid for a write.
enum SqStatus sq_sweep_row(const struct SqSweep *sweep, size_t index, struct SqRow *out);

// Renders the sweep as CSV. Free the result with [`sq_string_free`].
//
// # Safety
// `sweep` must be a live handle and `out` valid for a write.
enum SqStatus sq_sweep_csv(const struct SqSweep *sweep, char **out);

// Releases a sweep handle. Null is ignored.
//
// # Safety
// `sweep` must come from [`sq_sweep_run`] and must not be freed twice.
void sq_sweep_free(struct SqSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STIMQKD_H */
