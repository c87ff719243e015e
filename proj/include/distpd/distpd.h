/* distpd: distributed PD control under asymmetric servo latencies.
 *
 * Every function returns a distpd_status. On failure the thread-local
 * message from distpd_last_error() describes the problem; outputs are left
 * untouched. Handles are opaque and released with the matching *_free. */
#ifndef DISTPD_DISTPD_H_
#define DISTPD_DISTPD_H_

#include <stddef.h>

#if defined(_WIN32)
#define DISTPD_API __declspec(dllexport)
#elif defined(__GNUC__)
#define DISTPD_API __attribute__((visibility("default")))
#else
#define DISTPD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum distpd_status {
  DISTPD_OK = 0,
  DISTPD_INVALID_ARGUMENT = 1,
  DISTPD_DEGENERATE_GAINS = 2,
  DISTPD_NO_CROSSOVER = 3,
  DISTPD_CONDITION_UNDEFINED = 4,
  DISTPD_NO_ROOT = 5,
  DISTPD_NOT_REAL = 6,
  DISTPD_DT_TOO_COARSE = 7,
  DISTPD_DIVERGED = 8,
  DISTPD_SINGULAR = 9,
  DISTPD_INCONCLUSIVE = 10,
  DISTPD_IO = 11,
  DISTPD_CONFIG = 12,
  DISTPD_INTERNAL = 99
} distpd_status;

DISTPD_API const char* distpd_version(void);
DISTPD_API const char* distpd_status_string(distpd_status status);
DISTPD_API const char* distpd_last_error(void);

/* ---- core ------------------------------------------------------------ */

typedef struct distpd_actuator {
  double m;   /* mass or inertia */
  double b;   /* viscous damping */
  double nu;  /* current-to-force constant */
} distpd_actuator;

typedef struct distpd_controller {
  double K, B;  /* stiffness and damping gains */
  double Ts;    /* stiffness feedback delay, s */
  double Td;    /* damping feedback delay, s */
  double tau_v; /* velocity filter time constant, s (0 = unfiltered) */
} distpd_controller;

typedef struct distpd_loop {
  distpd_actuator actuator;
  distpd_controller controller;
} distpd_loop;

DISTPD_API distpd_status distpd_critical_gains(double m, double b, double f_n,
                                               double* K, double* B);
DISTPD_API distpd_status distpd_natural_frequency(double K, double m,
                                                  double* f_n);
/* has_gamma is 0 when b == 0 (rule trivially satisfied). */
DISTPD_API distpd_status distpd_gamma_ratio(double B, double b, double* gamma,
                                            int* has_gamma, int* rule_holds);
DISTPD_API distpd_status distpd_filter_time_constant(double cutoff_hz,
                                                     double* tau_v);
DISTPD_API distpd_status distpd_filter_cutoff(double tau_v, double* cutoff_hz);
DISTPD_API distpd_status distpd_critically_damped(const distpd_actuator* act,
                                                  double f_n, double Ts,
                                                  double Td, double tau_v,
                                                  distpd_loop* out);

/* ---- freq ------------------------------------------------------------ */

typedef struct distpd_margin {
  double omega_g; /* rad/s */
  double pm_deg;
  int crossings;
  int stable_hint;
} distpd_margin;

DISTPD_API distpd_status distpd_open_loop(const distpd_loop* loop, double omega,
                                          double* re, double* im, double* a1,
                                          double* a2);
DISTPD_API distpd_status distpd_closed_loop(const distpd_loop* loop,
                                            double omega, double* re,
                                            double* im);
DISTPD_API distpd_status distpd_closed_loop_via_open_loop(
    const distpd_loop* loop, double omega, double* re, double* im);
DISTPD_API distpd_status distpd_phase_margin(const distpd_loop* loop,
                                             distpd_margin* out);
/* Phase margin (rad) the loop would have if omega were the crossover. */
DISTPD_API distpd_status distpd_phase_at(const distpd_loop* loop, double omega,
                                         double* pm_rad);

typedef struct distpd_pm_table distpd_pm_table;

typedef struct distpd_pm_row {
  double f_n_hz, Ts, Td, K, B, omega_g, pm_deg;
  int crossings;
  const char* status; /* "ok", "no_crossover", "degenerate_gains", "invalid" */
} distpd_pm_row;

/* Rows ordered Ts-major, then Td, then f_n. threads == 0 uses all cores. */
DISTPD_API distpd_status distpd_pm_sweep(const distpd_actuator* act,
                                         double tau_v, const double* f_n,
                                         size_t n_f_n, const double* ts,
                                         size_t n_ts, const double* td,
                                         size_t n_td, unsigned threads,
                                         distpd_pm_table** out);
DISTPD_API size_t distpd_pm_table_size(const distpd_pm_table* table);
DISTPD_API distpd_status distpd_pm_table_row(const distpd_pm_table* table,
                                             size_t i, distpd_pm_row* out);
DISTPD_API distpd_status distpd_pm_table_write_csv(const distpd_pm_table* table,
                                                   const char* path);
DISTPD_API void distpd_pm_table_free(distpd_pm_table* table);

/* ---- sens ------------------------------------------------------------ */

typedef struct distpd_sensitivity {
  double dpm_dts, dpm_dtd; /* rad per s of delay, omega_g held fixed */
  double modulation, phi, omega_g, a1g, a2g;
} distpd_sensitivity;

typedef enum distpd_fd_mode {
  DISTPD_FD_FROZEN_CROSSOVER = 0,
  DISTPD_FD_TOTAL = 1
} distpd_fd_mode;

typedef struct distpd_crossover_condition {
  int holds;
  double margin;    /* omega_g / threshold - 1 */
  double threshold; /* K / sqrt(B^2 - K^2 tau_v^2) */
  double omega_g;
} distpd_crossover_condition;

typedef struct distpd_breakdown_point {
  double alpha, beta, gamma, tau_v, delta, u, v, residual;
} distpd_breakdown_point;

DISTPD_API distpd_status distpd_pm_sensitivity(const distpd_loop* loop,
                                               distpd_sensitivity* out);
DISTPD_API distpd_status distpd_fd_sensitivity(const distpd_loop* loop,
                                               double step,
                                               distpd_fd_mode mode,
                                               double* dpm_dts,
                                               double* dpm_dtd);
DISTPD_API distpd_status distpd_crossover_condition_check(
    const distpd_loop* loop, distpd_crossover_condition* out);
/* scale may be NULL. */
DISTPD_API distpd_status distpd_crossover_residual(const distpd_loop* loop,
                                                   double omega,
                                                   double* residual,
                                                   double* scale);
DISTPD_API distpd_status distpd_breakdown_residual(double alpha, double beta,
                                                   double gamma, double tau_v,
                                                   double delta, double* out);
DISTPD_API distpd_status distpd_delta_solve(double alpha, double beta,
                                            double gamma, double tau_v,
                                            distpd_breakdown_point* out);

typedef struct distpd_surface distpd_surface;

/* Cells ordered beta-major, then gamma. Failed cells carry a status other
 * than "ok" and NaN numbers. */
DISTPD_API distpd_status distpd_delta_surface(const double* beta,
                                              size_t n_beta,
                                              const double* gamma,
                                              size_t n_gamma, double alpha,
                                              double tau_v, unsigned threads,
                                              distpd_surface** out);
DISTPD_API size_t distpd_surface_size(const distpd_surface* s);
DISTPD_API distpd_status distpd_surface_cell(const distpd_surface* s, size_t i,
                                             distpd_breakdown_point* point,
                                             const char** status);
DISTPD_API distpd_status distpd_surface_write_csv(const distpd_surface* s,
                                                  const char* path);
DISTPD_API void distpd_surface_free(distpd_surface* s);

/* ---- sim ------------------------------------------------------------- */

typedef struct distpd_scenario distpd_scenario;
typedef struct distpd_trace distpd_trace;

/* Flat "key = value" text, see README for the keys. */
DISTPD_API distpd_status distpd_scenario_parse(const char* text,
                                               distpd_scenario** out);
DISTPD_API distpd_status distpd_scenario_step(const distpd_loop* loop,
                                              double amplitude,
                                              double duration,
                                              distpd_scenario** out);
DISTPD_API distpd_status distpd_scenario_knee(const distpd_loop* loop,
                                              double load_mass,
                                              double duration,
                                              distpd_scenario** out);
DISTPD_API distpd_status distpd_scenario_set_timing(distpd_scenario* s,
                                                    double dt_base,
                                                    double rate_s,
                                                    double rate_d);
DISTPD_API distpd_status distpd_scenario_loop(const distpd_scenario* s,
                                              distpd_loop* out);
DISTPD_API void distpd_scenario_free(distpd_scenario* s);

typedef struct distpd_sample {
  double t, x, xdot, x_d, xdot_d, f_cmd, i_m, f_dist;
} distpd_sample;

typedef enum distpd_stability_kind {
  DISTPD_STABLE = 0,
  DISTPD_MARGINAL = 1,
  DISTPD_DIVERGENT = 2
} distpd_stability_kind;

typedef struct distpd_stability {
  distpd_stability_kind kind;
  int has_overshoot;
  double overshoot;
  int has_settling_time;
  double settling_time;
} distpd_stability;

/* Delays and periods after snapping to the base step. */
typedef struct distpd_rounding {
  double Ts, Td, rate_s, rate_d, duration;
} distpd_rounding;

DISTPD_API distpd_status distpd_simulate(const distpd_scenario* s,
                                         distpd_trace** out);
DISTPD_API size_t distpd_trace_size(const distpd_trace* tr);
DISTPD_API distpd_status distpd_trace_sample(const distpd_trace* tr, size_t i,
                                             distpd_sample* out);
DISTPD_API distpd_status distpd_trace_diverged(const distpd_trace* tr,
                                               int* diverged,
                                               double* diverged_at);
DISTPD_API distpd_status distpd_trace_rounding(const distpd_trace* tr,
                                               distpd_rounding* out);
DISTPD_API distpd_status distpd_trace_classify(const distpd_trace* tr,
                                               const distpd_scenario* s,
                                               distpd_stability* out);
DISTPD_API distpd_status distpd_trace_rms(const distpd_trace* tr,
                                          double* position, double* velocity);
DISTPD_API distpd_status distpd_trace_write_csv(const distpd_trace* tr,
                                                const char* path,
                                                size_t stride);
DISTPD_API void distpd_trace_free(distpd_trace* tr);
DISTPD_API const char* distpd_stability_string(distpd_stability_kind kind);

/* ---- base ------------------------------------------------------------ */

typedef struct distpd_base_geometry {
  double mount_radius, wheel_radius;
  double wheel_angles[3]; /* rad */
  double mass, yaw_inertia, wheel_damping;
} distpd_base_geometry;

typedef enum distpd_architecture {
  DISTPD_COSC = 0, /* centralized PD in Cartesian space */
  DISTPD_DOSC = 1  /* Cartesian stiffness + embedded joint damping */
} distpd_architecture;

typedef struct distpd_arch_config {
  distpd_architecture kind;
  double stiffness[3]; /* x, y, yaw */
  double damping[3];   /* COSC only */
  double joint_damping; /* DOSC only */
  double highlevel_delay, highlevel_period, embedded_period;
  double velocity_filter_tau;
} distpd_arch_config;

typedef struct distpd_circle {
  double radius, period;
} distpd_circle;

typedef struct distpd_stiffness_search {
  double duration;
  double perturbation[3];
  double relative_tolerance;
  double initial_damping, initial_stiffness;
  int max_doublings;
  double window_fraction, decay_ratio;
  int min_zero_crossings;
  double floor;
  double dt;
} distpd_stiffness_search;

typedef struct distpd_stiffness_result {
  double stiffness, stiffness_hi; /* N/(m kg) */
  double damping, damping_hi;
  int inconclusive;
  int simulations;
} distpd_stiffness_result;

typedef struct distpd_base_sample {
  double t;
  double pose[3], pose_ref[3];
  double velocity[3], velocity_ref[3];
  double wheel_speed[3], wheel_torque[3];
  double odometry[3];
} distpd_base_sample;

typedef struct distpd_base_trace distpd_base_trace;

DISTPD_API void distpd_base_geometry_default(distpd_base_geometry* out);
DISTPD_API void distpd_arch_config_default(distpd_architecture kind,
                                           distpd_arch_config* out);
DISTPD_API void distpd_stiffness_search_default(distpd_stiffness_search* out);
/* Row-major 3x3, body twist (vx, vy, wz) -> wheel speeds. */
DISTPD_API distpd_status distpd_wheel_jacobian(const distpd_base_geometry* g,
                                               double out[9]);
/* Sets gains from a mass-normalized stiffness and damping; timing fields of
 * *out are preserved. */
DISTPD_API distpd_status distpd_arch_config_normalize(
    const distpd_base_geometry* g, double stiffness_per_mass, double damping,
    distpd_arch_config* out);
DISTPD_API distpd_status distpd_simulate_base(const distpd_base_geometry* g,
                                              const distpd_arch_config* arch,
                                              const distpd_circle* circle,
                                              double duration, double dt,
                                              distpd_base_trace** out);
DISTPD_API size_t distpd_base_trace_size(const distpd_base_trace* tr);
DISTPD_API distpd_status distpd_base_trace_sample(const distpd_base_trace* tr,
                                                  size_t i,
                                                  distpd_base_sample* out);
DISTPD_API distpd_status distpd_base_trace_diverged(
    const distpd_base_trace* tr, int* diverged, double* diverged_at);
DISTPD_API distpd_status distpd_base_tracking_error(
    const distpd_base_trace* tr, double discard, double* position,
    double* velocity);
DISTPD_API distpd_status distpd_base_trace_write_csv(
    const distpd_base_trace* tr, const char* path, size_t stride);
DISTPD_API void distpd_base_trace_free(distpd_base_trace* tr);
/* search may be NULL for defaults. */
DISTPD_API distpd_status distpd_base_vibrates(
    const distpd_base_geometry* g, const distpd_arch_config* arch,
    const distpd_circle* circle, const distpd_stiffness_search* search,
    int* out);
/* timing (delays, periods, filter) and search may be NULL for defaults.
 * Returns DISTPD_INCONCLUSIVE with *out filled (both bracket ends) when the
 * vibration search could not bracket a limit. */
DISTPD_API distpd_status distpd_max_stable_stiffness(
    const distpd_base_geometry* g, distpd_architecture kind,
    const distpd_circle* circle, const distpd_arch_config* timing,
    const distpd_stiffness_search* search, distpd_stiffness_result* out);

#ifdef __cplusplus
}
#endif

#endif /* DISTPD_DISTPD_H_ */
