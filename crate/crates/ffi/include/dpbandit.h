#ifndef DPBANDIT_H
#define DPBANDIT_H

/* This file is generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum DpbStatus {
  DPB_OK = 0,
  DPB_NULL_POINTER = 1,
  DPB_INVALID_ARGUMENT = 2,
  DPB_INVALID_UTF8 = 3,
  DPB_CONFIG_ERROR = 4,
  DPB_RUNTIME_ERROR = 5,
  DPB_IO_ERROR = 6,
} DpbStatus;

// Opaque experiment configuration handle.
typedef struct DpbConfig DpbConfig;

// Opaque handle to a finished experiment.
typedef struct DpbResult DpbResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent error on this thread. The pointer
// stays valid until the next failing call on the same thread.
const char *dpb_last_error_message(void);

// Library version as a static null-terminated string.
const char *dpb_version(void);

// Fresh configuration with the desk-scale defaults.
struct DpbConfig *dpb_config_new(void);

// Loads a flat key-value configuration file.
struct DpbConfig *dpb_config_from_file(const char *path);

// Number of cells in a named preset, or -1 if the preset is unknown.
int dpb_preset_len(const char *name);

// The `index`-th cell of a named preset.
struct DpbConfig *dpb_config_preset(const char *name, int index);

// Sets one configuration key from its textual value, using the same keys
// as the configuration file (e.g. `T`, `epsilon`, `model`, `seeds`).
enum DpbStatus dpb_config_set(struct DpbConfig *cfg, const char *key, const char *value);

void dpb_config_free(struct DpbConfig *cfg);

// Runs every seed of the configuration over `workers` threads
// (0 selects machine parallelism). Returns null on failure.
struct DpbResult *dpb_run(const struct DpbConfig *cfg, int workers);

void dpb_result_free(struct DpbResult *res);

// Number of replicate runs held by the result.
int dpb_result_num_runs(const struct DpbResult *res);

// Final cumulative regret of one replicate.
enum DpbStatus dpb_result_final_regret(const struct DpbResult *res, int run_index, double *out);

// Total communication cost of one replicate, in the model's unit.
enum DpbStatus dpb_result_comm_cost(const struct DpbResult *res, int run_index, double *out);

// Clip rate of one replicate.
enum DpbStatus dpb_result_clip_rate(const struct DpbResult *res, int run_index, double *out);

// Mean and sample standard deviation of the final regret across runs.
enum DpbStatus dpb_result_regret_stats(const struct DpbResult *res,
                                       double *mean_out,
                                       double *std_out);

// Writes the per-run CSV (schema: run_id, seed, model, epsilon, delta,
// alpha, d, k, T, phase, round, cum_regret, comm_cost, comm_unit,
// clip_rate) to `path`.
enum DpbStatus dpb_result_write_csv(const struct DpbResult *res, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPBANDIT_H */
