#ifndef RFWATER_H
#define RFWATER_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RfwStatus {
  RFW_STATUS_OK = 0,
  RFW_STATUS_NULL_POINTER = 1,
  RFW_STATUS_INVALID_ARGUMENT = 2,
  RFW_STATUS_OUT_OF_RANGE = 3,
  RFW_STATUS_VALIDITY = 4,
  RFW_STATUS_SYNTHESIS = 5,
  RFW_STATUS_FIT = 6,
  RFW_STATUS_NO_EVENT = 7,
  RFW_STATUS_EDGE_MINIMUM = 8,
  RFW_STATUS_INGEST = 9,
  RFW_STATUS_IO = 10,
  RFW_STATUS_PARSE = 11,
  RFW_STATUS_PANIC = 12,
} RfwStatus;

typedef enum RfwEventClass {
  RFW_EVENT_CLASS_SOLID = 0,
  RFW_EVENT_CLASS_LIQUID = 1,
  RFW_EVENT_CLASS_NONE = 2,
} RfwEventClass;

typedef enum RfwAction {
  RFW_ACTION_FLUSH = 0,
  RFW_ACTION_ANALYZE = 1,
  RFW_ACTION_IDLE = 2,
} RfwAction;

/**
 * Concentration ↔ shift calibration curve.
 */
typedef struct RfwCalibration RfwCalibration;

/**
 * Streaming detector. Feed samples from one thread at a time.
 */
typedef struct RfwPipeline RfwPipeline;

/**
 * Uniformly sampled resonance trace.
 */
typedef struct RfwTrace RfwTrace;

typedef struct RfwLine {
  double eps_eff;
  double z0_ohm;
  double beta_rad_per_m;
  double guided_wavelength_m;
} RfwLine;

typedef struct RfwExpFit {
  double a;
  double b;
  double residual_rms;
  bool rate_identifiable;
} RfwExpFit;

typedef struct RfwReport {
  double time_s;
  enum RfwEventClass event_class;
  double band_peak_hz_per_s;
  /**
   * NaN unless `has_concentration`.
   */
  double concentration_mol_per_l;
  bool has_concentration;
  /**
   * Meaningful only when `has_fit`.
   */
  struct RfwExpFit fit;
  bool has_fit;
  enum RfwAction action;
} RfwReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rfw_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *rfw_last_error_message(void);

/**
 * Complex permittivity of NaCl solution (`eps = real - j loss`).
 *
 * # Safety
 * `real` and `loss` must be valid for writes.
 */
enum RfwStatus rfw_saline_permittivity(double frequency_hz,
                                       double concentration_mol_per_l,
                                       double temperature_c,
                                       double *real,
                                       double *loss);

/**
 * Microstrip parameters at `frequency_hz`. Lengths in metres.
 *
 * # Safety
 * `line` must be valid for writes.
 */
enum RfwStatus rfw_microstrip_line(double width_m,
                                   double height_m,
                                   double eps_r,
                                   double frequency_hz,
                                   struct RfwLine *line);

/**
 * Open-stub length presenting `capacitance_f` at `frequency_hz`.
 *
 * # Safety
 * `length_m` must be valid for writes.
 */
enum RfwStatus rfw_synthesize_stub_length(double capacitance_f,
                                          double frequency_hz,
                                          double width_m,
                                          double height_m,
                                          double eps_r,
                                          double *length_m);

/**
 * Fits `y = a (1 - exp(-b v))` to `n` samples.
 *
 * # Safety
 * `volume` and `shift` must point to `n` readable doubles; `fit` must be
 * valid for writes.
 */
enum RfwStatus rfw_fit_exponential(const double *volume,
                                   const double *shift,
                                   size_t n,
                                   struct RfwExpFit *fit);

/**
 * Built-in model-derived curve.
 *
 * # Safety
 * `cal` must be valid for writes.
 */
enum RfwStatus rfw_calibration_default(struct RfwCalibration **cal);

/**
 * Reads a `concentration_mol_per_l,shift_hz` CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `cal` must be valid for writes.
 */
enum RfwStatus rfw_calibration_read_csv(const char *path, struct RfwCalibration **cal);

/**
 * # Safety
 * `cal` must be NULL or a handle from this library not yet freed.
 */
void rfw_calibration_free(struct RfwCalibration *cal);

/**
 * # Safety
 * `cal` must be a live handle; `shift_hz` must be valid for writes.
 */
enum RfwStatus rfw_steady_shift(const struct RfwCalibration *cal,
                                double concentration_mol_per_l,
                                double *shift_hz);

/**
 * # Safety
 * `cal` must be a live handle; `concentration_mol_per_l` must be valid for
 * writes.
 */
enum RfwStatus rfw_invert_concentration(const struct RfwCalibration *cal,
                                        double shift_hz,
                                        double *concentration_mol_per_l);

/**
 * Detector with default settings for the given sample period. `cal` may be
 * NULL for the built-in calibration; it is copied, not retained.
 *
 * # Safety
 * `cal` must be NULL or a live handle; `pipeline` must be valid for writes.
 */
enum RfwStatus rfw_pipeline_new(const struct RfwCalibration *cal,
                                double sample_period_s,
                                struct RfwPipeline **pipeline);

/**
 * Feeds one sample. `*has_report` tells whether `*report` was filled.
 *
 * # Safety
 * `pipeline` must be a live handle; `report` and `has_report` must be valid
 * for writes.
 */
enum RfwStatus rfw_pipeline_push(struct RfwPipeline *pipeline,
                                 double time_s,
                                 double frequency_hz,
                                 struct RfwReport *report,
                                 bool *has_report);

/**
 * Ends the stream; may yield a final report.
 *
 * # Safety
 * As for [`rfw_pipeline_push`].
 */
enum RfwStatus rfw_pipeline_finish(struct RfwPipeline *pipeline,
                                   struct RfwReport *report,
                                   bool *has_report);

/**
 * # Safety
 * `pipeline` must be NULL or a handle from this library not yet freed.
 */
void rfw_pipeline_free(struct RfwPipeline *pipeline);

/**
 * Simulates a TOML scenario file. When `override_seed` is true, `seed`
 * replaces the file's seed.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `trace` must be valid for writes.
 */
enum RfwStatus rfw_simulate_file(const char *path,
                                 uint64_t seed,
                                 bool override_seed,
                                 struct RfwTrace **trace);

/**
 * Number of samples; 0 for NULL.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
size_t rfw_trace_len(const struct RfwTrace *trace);

/**
 * # Safety
 * `trace` must be NULL or a live handle.
 */
double rfw_trace_sample_period(const struct RfwTrace *trace);

/**
 * # Safety
 * `trace` must be NULL or a live handle.
 */
double rfw_trace_start_time(const struct RfwTrace *trace);

/**
 * Borrowed pointer to `rfw_trace_len` samples in Hz, valid until the trace
 * is freed.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
const double *rfw_trace_data(const struct RfwTrace *trace);

/**
 * # Safety
 * `trace` must be NULL or a handle from this library not yet freed.
 */
void rfw_trace_free(struct RfwTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RFWATER_H */
