#ifndef GENCAL_H
#define GENCAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdint.h>
#include <stddef.h>

#define GENCAL_OK 0

// A required pointer was null or a string was not valid UTF-8.
#define GENCAL_ERR_ARGUMENT 1

// Invalid configuration, parameters, schema or I/O.
#define GENCAL_ERR_CONFIG 2

// Model initialization or integration failed.
#define GENCAL_ERR_SIMULATION 3

// Internal numerical failure.
#define GENCAL_ERR_NUMERICAL 4

// A Rust panic was caught at the boundary.
#define GENCAL_ERR_PANIC 5

typedef struct GencalCalibration GencalCalibration;

typedef struct GencalEvent GencalEvent;

typedef struct GencalParams GencalParams;

// Learning and reward settings for [`gencal_calibrate`].
typedef struct GencalHyperparams {
  double gamma;
  double lambda;
  double epsilon;
  uint64_t n_episodes;
  uint64_t max_steps_per_episode;
  uint64_t seed;
  double eps_low;
  double eps_high;
} GencalHyperparams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *gencal_last_error(void);

// Reference model parameters.
struct GencalParams *gencal_params_new(void);

// # Safety
// `params` must come from [`gencal_params_new`] and not be freed yet, or be null.
void gencal_params_free(struct GencalParams *params);

// # Safety
// `params` must be a live handle; `name` a nul-terminated string.
int32_t gencal_params_set(struct GencalParams *params, const char *name, double value);

// # Safety
// `params` must be a live handle; `name` a nul-terminated string; `out` writable.
int32_t gencal_params_get(const struct GencalParams *params, const char *name, double *out);

// Synthesizes a noiseless event. `kind` is `voltage-dip`, `angle-step` or
// `frequency-ramp`; `length` is in seconds and `rate` in samples per second.
//
// # Safety
// `params` must be a live handle, `kind` a nul-terminated string and `out`
// writable. On success `*out` owns a new event.
int32_t gencal_event_synth(const struct GencalParams *params,
                           const char *kind,
                           double magnitude,
                           double start,
                           double duration,
                           double length,
                           double rate,
                           double p0,
                           double q0,
                           struct GencalEvent **out);

// # Safety
// `path` must be a nul-terminated string and `out` writable.
int32_t gencal_event_load(const char *path, struct GencalEvent **out);

// # Safety
// `event` must be a live handle and `path` a nul-terminated string.
int32_t gencal_event_save(const struct GencalEvent *event, const char *path);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `event` must be a live handle or null.
uintptr_t gencal_event_len(const struct GencalEvent *event);

// # Safety
// `event` must come from this library and not be freed yet, or be null.
void gencal_event_free(struct GencalEvent *event);

// Replays `event` under `params`, writing `len` P and Q samples.
// `len` must equal [`gencal_event_len`].
//
// # Safety
// Handles must be live; `p_out` and `q_out` must each hold `len` doubles.
int32_t gencal_playback(const struct GencalParams *params,
                        const struct GencalEvent *event,
                        double *p_out,
                        double *q_out,
                        uintptr_t len);

// Trajectory sensitivity of the P/Q outputs to one parameter.
//
// # Safety
// Handles must be live, `name` nul-terminated and `out` writable.
int32_t gencal_sensitivity(const struct GencalParams *params,
                           const struct GencalEvent *event,
                           const char *name,
                           double delta_frac,
                           double *out);

// Library defaults for the learning and reward settings.
struct GencalHyperparams gencal_hyperparams_default(void);

// Calibrates `n_dims` parameters against `event`. The remaining parameters
// are taken from `params`. `warm` may be null, or a previous calibration
// over the same grid whose Q-table seeds this run.
//
// # Safety
// Handles must be live or (for `warm`) null; `names`, `lower` and `upper`
// must each hold `n_dims` entries; `out` must be writable.
int32_t gencal_calibrate(const struct GencalParams *params,
                         const struct GencalEvent *event,
                         const char *const *names,
                         const double *lower,
                         const double *upper,
                         uintptr_t n_dims,
                         double tau,
                         const struct GencalHyperparams *hyper,
                         const struct GencalCalibration *warm,
                         struct GencalCalibration **out);

// # Safety
// `cal` must be a live handle or null.
uintptr_t gencal_calibration_dims(const struct GencalCalibration *cal);

// Copies the best estimate (one value per calibrated parameter).
//
// # Safety
// `cal` must be a live handle and `out` must hold `len` doubles.
int32_t gencal_calibration_estimate(const struct GencalCalibration *cal,
                                    double *out,
                                    uintptr_t len);

// Discrepancy of the best estimate, or NaN for a null handle.
//
// # Safety
// `cal` must be a live handle or null.
double gencal_calibration_best_eps(const struct GencalCalibration *cal);

// One-based episode that first reached a terminal state, or -1.
//
// # Safety
// `cal` must be a live handle or null.
int64_t gencal_calibration_episodes_to_terminal(const struct GencalCalibration *cal);

// # Safety
// `cal` must be a live handle or null.
uint64_t gencal_calibration_model_evaluations(const struct GencalCalibration *cal);

// Writes the learned Q-table in the CLI's dump format.
//
// # Safety
// `cal` must be a live handle and `path` nul-terminated.
int32_t gencal_calibration_save_qtable(const struct GencalCalibration *cal, const char *path);

// # Safety
// `cal` must come from [`gencal_calibrate`] and not be freed yet, or be null.
void gencal_calibration_free(struct GencalCalibration *cal);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENCAL_H */
