#ifndef EVCHARGE_H
#define EVCHARGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EvcMode {
  EVC_MODE_CONSTANT_CURRENT = 0,
  EVC_MODE_CONSTANT_VOLTAGE = 1,
  EVC_MODE_REST = 2,
  EVC_MODE_DISCHARGE_PULSE = 3,
} EvcMode;

typedef enum EvcStatus {
  EVC_STATUS_OK = 0,
  EVC_STATUS_NULL_POINTER = 1,
  EVC_STATUS_INVALID_ARGUMENT = 2,
  EVC_STATUS_CONFIG = 3,
  EVC_STATUS_SIMULATION = 4,
  EVC_STATUS_IO = 5,
  EVC_STATUS_PANIC = 6,
} EvcStatus;

typedef enum EvcTermination {
  EVC_TERMINATION_STRATEGY_DONE = 0,
  EVC_TERMINATION_SOC_TARGET = 1,
  EVC_TERMINATION_T_MAX = 2,
  EVC_TERMINATION_FAULT = 3,
} EvcTermination;

// The output of one simulation.
typedef struct EvcRun EvcRun;

// A validated scenario.
typedef struct EvcScenario EvcScenario;

typedef struct EvcMetrics {
  double charge_time_h;
  double e_batt_loss_kwh;
  double e_conv_loss_kwh;
  double e_total_loss_kwh;
  double e_delivered_kwh;
  double final_soc;
  enum EvcTermination terminated_by;
  // Simulated time of the fault, or -1 when the run did not fault.
  double fault_time_s;
} EvcMetrics;

typedef struct EvcTelemetryRow {
  double t;
  double i_batt;
  double v_term;
  double soc;
  double phi;
  double p_batt_loss;
  double p_conv_loss;
  enum EvcMode mode;
} EvcTelemetryRow;

// Converter parameters by value. Times in seconds, inductance in henries.
typedef struct EvcDabParams {
  double v_in;
  double n;
  double leakage_l;
  double f_s;
  double dead_time;
  double phi_limit;
} EvcDabParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the calling thread's last error message into `buf` as a
// NUL-terminated string, truncating to `len` bytes. Returns the buffer size
// needed for the whole message including the terminator; 1 when there is
// no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t evc_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *evc_version(void);

// Build the built-in reference scenario.
//
// # Safety
// `out` must be null or valid for writes.
enum EvcStatus evc_scenario_default(struct EvcScenario **out);

// Load and validate a TOML scenario file.
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` must be null or
// valid for writes.
enum EvcStatus evc_scenario_load(const char *path, struct EvcScenario **out);

// # Safety
// `s` must be null or a handle from this library that was not yet freed.
void evc_scenario_free(struct EvcScenario *s);

// Simulate a named strategy (`cccv`, `mscc` or `mscc-reflex`). A run that
// ends in a fault still succeeds; inspect its metrics.
//
// # Safety
// `s` must be a live scenario handle, `strategy` a NUL-terminated string and
// `out` valid for writes; any of them may be null, which is reported.
enum EvcStatus evc_run(const struct EvcScenario *s, const char *strategy, struct EvcRun **out);

// # Safety
// `r` must be null or a handle from [`evc_run`] that was not yet freed.
void evc_run_free(struct EvcRun *r);

// # Safety
// `r` must be a live run handle and `out` valid for writes, or null.
enum EvcStatus evc_run_metrics(const struct EvcRun *r, struct EvcMetrics *out);

// Number of telemetry rows, 0 for a null handle.
//
// # Safety
// `r` must be null or a live run handle.
size_t evc_run_telemetry_len(const struct EvcRun *r);

// # Safety
// `r` must be a live run handle and `out` valid for writes, or null.
enum EvcStatus evc_run_telemetry_get(const struct EvcRun *r,
                                     size_t index,
                                     struct EvcTelemetryRow *out);

// Fill `out` with the reference converter parameters.
//
// # Safety
// `out` must be null or valid for writes.
enum EvcStatus evc_dab_reference(struct EvcDabParams *out);

// Averaged output current at phase shift `phi` (fraction of a period).
//
// # Safety
// `p` must be readable and `out` writable, or null.
enum EvcStatus evc_dab_output_current(const struct EvcDabParams *p,
                                      double v_out,
                                      double phi,
                                      double *out);

// Largest averaged output current the converter can deliver.
//
// # Safety
// `p` must be readable and `out` writable, or null.
enum EvcStatus evc_dab_max_current(const struct EvcDabParams *p, double v_out, double *out);

// Phase shift that produces `current`.
//
// # Safety
// `p` must be readable and `out` writable, or null.
enum EvcStatus evc_dab_phase_for_current(const struct EvcDabParams *p,
                                         double v_out,
                                         double current,
                                         double *out);

// Write the `n_stages` geometric stage currents into `out`.
//
// # Safety
// `out` must be null or point to `n_stages` writable doubles.
enum EvcStatus evc_stage_currents(double i_first, double i_last, size_t n_stages, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVCHARGE_H */
