#ifndef LVAD_FFI_H
#define LVAD_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LvadStatus {
  LVAD_STATUS_OK = 0,
  LVAD_STATUS_NULL_POINTER = 1,
  LVAD_STATUS_INVALID_ARGUMENT = 2,
  LVAD_STATUS_NO_BEAT = 3,
  LVAD_STATUS_NON_FINITE = 4,
  LVAD_STATUS_BUFFER_TOO_SMALL = 5,
  LVAD_STATUS_INTERNAL = 6,
  LVAD_STATUS_PANIC = 7,
} LvadStatus;

/**
 * Causal LVEDP detector over a 200 Hz LV pressure stream.
 */
typedef struct LvadDetector LvadDetector;

/**
 * Compact-form dynamic-linearisation MFAC.
 */
typedef struct LvadMfac LvadMfac;

/**
 * Discrete PID with clamped output.
 */
typedef struct LvadPid LvadPid;

/**
 * Circulation + pump model.
 */
typedef struct LvadSimulator LvadSimulator;

/**
 * One observation, pressures mmHg, flows mL/s, volumes mL.
 */
typedef struct LvadSample {
  double t;
  double p_lv;
  double p_la;
  double p_ao;
  double p_pa;
  double v_lv;
  double q_pump;
  /**
   * Ventricular activation in [0, 1].
   */
  double activation;
} LvadSample;

typedef struct LvadEvent {
  size_t cycle_index;
  /**
   * When the detector fired, s.
   */
  double detection_time;
  /**
   * Estimated time of end-diastole, s.
   */
  double actual_time;
  /**
   * Estimated LVEDP, mmHg.
   */
  double value;
} LvadEvent;

typedef struct LvadMfacConfig {
  double rho;
  double lambda;
  double eta;
  double mu;
  /**
   * Initial and reset value of the pseudo-partial derivative.
   */
  double phi1;
  double epsilon;
  double u_min;
  double u_max;
} LvadMfacConfig;

typedef struct LvadPidConfig {
  double kp;
  double ki;
  double kd;
  /**
   * Output for a zero error history, rpm.
   */
  double bias;
  double u_min;
  double u_max;
} LvadPidConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *lvad_status_str(enum LvadStatus status);

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf`. `needed` (optional) receives the size including the NUL. Returns
 * `BufferTooSmall` if `cap` is short; `buf` may be NULL when `cap` is 0.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes; `needed` NULL or writable.
 */
enum LvadStatus lvad_last_error_message(char *buf, size_t cap, size_t *needed);

/**
 * Nominal patient with the default pump, at rest at t = 0.
 *
 * # Safety
 * `out` must be writable.
 */
enum LvadStatus lvad_simulator_new(struct LvadSimulator **out);

/**
 * # Safety
 * `sim` must come from `lvad_simulator_new` and not be used afterwards.
 */
void lvad_simulator_free(struct LvadSimulator *sim);

/**
 * Sets a circulation or pump parameter by name and restarts the simulation
 * from t = 0. On an unknown name or a value that fails validation the
 * simulator is left untouched.
 *
 * # Safety
 * `sim` a live handle; `name` a NUL-terminated string.
 */
enum LvadStatus lvad_simulator_set_param(struct LvadSimulator *sim, const char *name, double value);

/**
 * Reads a circulation or pump parameter by name.
 *
 * # Safety
 * `sim` a live handle; `name` NUL-terminated; `out` writable.
 */
enum LvadStatus lvad_simulator_get_param(const struct LvadSimulator *sim,
                                         const char *name,
                                         double *out);

/**
 * Advances one 5 ms sample with pump speed (rpm) and external volume
 * transfer (mL/s) held, then writes the new observation to `out` (optional).
 *
 * # Safety
 * `sim` a live handle; `out` NULL or writable.
 */
enum LvadStatus lvad_simulator_advance(struct LvadSimulator *sim,
                                       double speed_rpm,
                                       double transfer_ml_s,
                                       struct LvadSample *out);

/**
 * Current observation without advancing.
 *
 * # Safety
 * `sim` a live handle; `out` writable.
 */
enum LvadStatus lvad_simulator_sample(const struct LvadSimulator *sim, struct LvadSample *out);

/**
 * Total volume minus its initial value and net transfers, mL.
 *
 * # Safety
 * `sim` a live handle; `out` writable.
 */
enum LvadStatus lvad_simulator_conservation_error(const struct LvadSimulator *sim, double *out);

/**
 * Default detector with the given step-5 scale and threshold scale. Pass
 * NaN for either to keep its default.
 *
 * # Safety
 * `out` must be writable.
 */
enum LvadStatus lvad_detector_new(double alpha, double beta, struct LvadDetector **out);

/**
 * # Safety
 * `det` must come from `lvad_detector_new` and not be used afterwards.
 */
void lvad_detector_free(struct LvadDetector *det);

/**
 * Feeds one LVP sample (mmHg). `found` receives whether a detection fired;
 * if so `event` is filled.
 *
 * # Safety
 * `det` a live handle; `event` and `found` writable.
 */
enum LvadStatus lvad_detector_push(struct LvadDetector *det,
                                   double lvp,
                                   struct LvadEvent *event,
                                   bool *found);

/**
 * Latest beat period estimate, s; `NoBeat` before two peaks were seen.
 *
 * # Safety
 * `det` a live handle; `out` writable.
 */
enum LvadStatus lvad_detector_beat_period(const struct LvadDetector *det, double *out);

struct LvadMfacConfig lvad_mfac_default_config(void);

struct LvadPidConfig lvad_pid_default_config(void);

/**
 * # Safety
 * `cfg` readable; `out` writable.
 */
enum LvadStatus lvad_mfac_new(const struct LvadMfacConfig *cfg, double u0, struct LvadMfac **out);

/**
 * # Safety
 * `c` must come from `lvad_mfac_new` and not be used afterwards.
 */
void lvad_mfac_free(struct LvadMfac *c);

/**
 * One update from the measured output `y` toward `y_star`; writes the new
 * command to `u`.
 *
 * # Safety
 * `c` a live handle; `u` writable.
 */
enum LvadStatus lvad_mfac_tick(struct LvadMfac *c, double y, double y_star, double *u);

/**
 * Current pseudo-partial-derivative estimate.
 *
 * # Safety
 * `c` a live handle; `out` writable.
 */
enum LvadStatus lvad_mfac_phi(const struct LvadMfac *c, double *out);

/**
 * # Safety
 * `cfg` readable; `out` writable.
 */
enum LvadStatus lvad_pid_new(const struct LvadPidConfig *cfg, struct LvadPid **out);

/**
 * # Safety
 * `c` must come from `lvad_pid_new` and not be used afterwards.
 */
void lvad_pid_free(struct LvadPid *c);

/**
 * One update with tracking error `error` over `dt` seconds; writes the
 * clamped command to `u`.
 *
 * # Safety
 * `c` a live handle; `u` writable.
 */
enum LvadStatus lvad_pid_tick(struct LvadPid *c, double error, double dt, double *u);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LVAD_FFI_H */
