#include "distpd/distpd.h"

#include <cmath>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "base.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "freq.hpp"
#include "sens.hpp"
#include "sim.hpp"

struct distpd_pm_table {
  std::vector<distpd::PmRow> rows;
};
struct distpd_surface {
  std::vector<distpd::SurfaceCell> cells;
};
struct distpd_scenario {
  distpd::SimScenario s;
};
struct distpd_trace {
  distpd::SimTrace tr;
};
struct distpd_base_trace {
  distpd::BaseTrace tr;
};

namespace {

using namespace distpd;

thread_local std::string g_last_error;

template <class F>
distpd_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return DISTPD_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<distpd_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return DISTPD_INTERNAL;
}

template <class T>
const T& deref(const T* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
  return *p;
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

LoopSystem to_cpp(const distpd_loop& l) {
  LoopSystem s;
  s.actuator = {l.actuator.m, l.actuator.b, l.actuator.nu};
  s.controller = {l.controller.K, l.controller.B, l.controller.Ts,
                  l.controller.Td, l.controller.tau_v};
  return s;
}

distpd_loop to_c(const LoopSystem& s) {
  distpd_loop l;
  l.actuator = {s.actuator.m, s.actuator.b, s.actuator.nu};
  l.controller = {s.controller.K, s.controller.B, s.controller.Ts,
                  s.controller.Td, s.controller.tau_v};
  return l;
}

std::vector<double> to_vec(const double* p, std::size_t n, const char* what) {
  if (n > 0) need(p, what);
  return std::vector<double>(p, p + n);
}

void write_file(const char* path, const std::string& text) {
  need(path, "path");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, std::string("cannot open ") + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, std::string("cannot write ") + path);
}

BaseGeometry to_cpp(const distpd_base_geometry& g) {
  BaseGeometry b;
  b.mount_radius = g.mount_radius;
  b.wheel_radius = g.wheel_radius;
  for (int i = 0; i < 3; ++i) b.wheel_angles[i] = g.wheel_angles[i];
  b.mass = g.mass;
  b.yaw_inertia = g.yaw_inertia;
  b.wheel_damping = g.wheel_damping;
  return b;
}

ArchitectureConfig to_cpp(const distpd_arch_config& a) {
  ArchitectureConfig c;
  c.kind = a.kind == DISTPD_DOSC ? Architecture::kDistributed
                                 : Architecture::kCentralized;
  c.cartesian_stiffness = Eigen::Vector3d(a.stiffness);
  c.cartesian_damping = Eigen::Vector3d(a.damping);
  c.joint_damping = a.joint_damping;
  c.highlevel_delay = a.highlevel_delay;
  c.highlevel_period = a.highlevel_period;
  c.embedded_period = a.embedded_period;
  c.velocity_filter_tau = a.velocity_filter_tau;
  return c;
}

void to_c(const ArchitectureConfig& c, distpd_arch_config& a) {
  a.kind = c.kind == Architecture::kDistributed ? DISTPD_DOSC : DISTPD_COSC;
  for (int i = 0; i < 3; ++i) {
    a.stiffness[i] = c.cartesian_stiffness[i];
    a.damping[i] = c.cartesian_damping[i];
  }
  a.joint_damping = c.joint_damping;
  a.highlevel_delay = c.highlevel_delay;
  a.highlevel_period = c.highlevel_period;
  a.embedded_period = c.embedded_period;
  a.velocity_filter_tau = c.velocity_filter_tau;
}

CircleTrajectory to_cpp(const distpd_circle& c) {
  return circle_trajectory(c.radius, c.period);
}

StiffnessSearch to_cpp(const distpd_stiffness_search& s) {
  StiffnessSearch r;
  r.duration = s.duration;
  r.perturbation = Eigen::Vector3d(s.perturbation);
  r.relative_tolerance = s.relative_tolerance;
  r.initial_damping = s.initial_damping;
  r.initial_stiffness = s.initial_stiffness;
  r.max_doublings = s.max_doublings;
  r.detector.window_fraction = s.window_fraction;
  r.detector.decay_ratio = s.decay_ratio;
  r.detector.min_zero_crossings = s.min_zero_crossings;
  r.detector.floor = s.floor;
  r.sim.dt = s.dt;
  require(s.window_fraction > 0.0 && s.window_fraction <= 1.0,
          "stiffness search: window fraction must lie in (0, 1]");
  return r;
}

void copy3(const Eigen::Vector3d& v, double* out) {
  for (int i = 0; i < 3; ++i) out[i] = v[i];
}

}  // namespace

extern "C" {

const char* distpd_version(void) { return "1.0.0"; }

const char* distpd_status_string(distpd_status status) {
  switch (status) {
    case DISTPD_OK: return "ok";
    case DISTPD_INVALID_ARGUMENT: return "invalid argument";
    case DISTPD_DEGENERATE_GAINS: return "degenerate gains";
    case DISTPD_NO_CROSSOVER: return "no gain crossover";
    case DISTPD_CONDITION_UNDEFINED: return "condition undefined";
    case DISTPD_NO_ROOT: return "no root";
    case DISTPD_NOT_REAL: return "not real";
    case DISTPD_DT_TOO_COARSE: return "dt too coarse";
    case DISTPD_DIVERGED: return "diverged";
    case DISTPD_SINGULAR: return "singular";
    case DISTPD_INCONCLUSIVE: return "inconclusive";
    case DISTPD_IO: return "i/o error";
    case DISTPD_CONFIG: return "config error";
    case DISTPD_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* distpd_last_error(void) { return g_last_error.c_str(); }

// ---- core

distpd_status distpd_critical_gains(double m, double b, double f_n, double* K,
                                    double* B) {
  return guard([&] {
    need(K, "K");
    need(B, "B");
    const Gains g = critical_gains(m, b, f_n);
    *K = g.K;
    *B = g.B;
  });
}

distpd_status distpd_natural_frequency(double K, double m, double* f_n) {
  return guard([&] {
    need(f_n, "f_n");
    *f_n = natural_frequency(K, m);
  });
}

distpd_status distpd_gamma_ratio(double B, double b, double* gamma,
                                 int* has_gamma, int* rule_holds) {
  return guard([&] {
    const GammaRatio g = gamma_ratio(B, b);
    if (gamma) *gamma = g.gamma.value_or(std::nan(""));
    if (has_gamma) *has_gamma = g.gamma.has_value();
    if (rule_holds) *rule_holds = g.rule_holds;
  });
}

distpd_status distpd_filter_time_constant(double cutoff_hz, double* tau_v) {
  return guard([&] {
    need(tau_v, "tau_v");
    *tau_v = filter_time_constant(cutoff_hz);
  });
}

distpd_status distpd_filter_cutoff(double tau_v, double* cutoff_hz) {
  return guard([&] {
    need(cutoff_hz, "cutoff_hz");
    *cutoff_hz = filter_cutoff(tau_v);
  });
}

distpd_status distpd_critically_damped(const distpd_actuator* act, double f_n,
                                       double Ts, double Td, double tau_v,
                                       distpd_loop* out) {
  return guard([&] {
    const auto& a = deref(act, "actuator");
    need(out, "out");
    *out = to_c(critically_damped_system({a.m, a.b, a.nu}, f_n, Ts, Td, tau_v));
  });
}

// ---- freq

distpd_status distpd_open_loop(const distpd_loop* loop, double omega,
                               double* re, double* im, double* a1,
                               double* a2) {
  return guard([&] {
    const FreqPoint p = open_loop_response(to_cpp(deref(loop, "loop")), omega);
    if (re) *re = p.value.real();
    if (im) *im = p.value.imag();
    if (a1) *a1 = p.a1;
    if (a2) *a2 = p.a2;
  });
}

distpd_status distpd_closed_loop(const distpd_loop* loop, double omega,
                                 double* re, double* im) {
  return guard([&] {
    const Complex c = closed_loop_response(to_cpp(deref(loop, "loop")), omega);
    if (re) *re = c.real();
    if (im) *im = c.imag();
  });
}

distpd_status distpd_closed_loop_via_open_loop(const distpd_loop* loop,
                                               double omega, double* re,
                                               double* im) {
  return guard([&] {
    const Complex c =
        closed_loop_response_via_open_loop(to_cpp(deref(loop, "loop")), omega);
    if (re) *re = c.real();
    if (im) *im = c.imag();
  });
}

distpd_status distpd_phase_margin(const distpd_loop* loop, distpd_margin* out) {
  return guard([&] {
    need(out, "out");
    const MarginReport m = phase_margin(to_cpp(deref(loop, "loop")));
    *out = {m.omega_g, m.pm_deg, m.crossings, m.stable_hint};
  });
}

distpd_status distpd_phase_at(const distpd_loop* loop, double omega,
                              double* pm_rad) {
  return guard([&] {
    need(pm_rad, "pm_rad");
    require(std::isfinite(omega) && omega > 0.0, "omega must be > 0");
    *pm_rad = phase_at(to_cpp(deref(loop, "loop")), omega);
  });
}

distpd_status distpd_pm_sweep(const distpd_actuator* act, double tau_v,
                              const double* f_n, size_t n_f_n, const double* ts,
                              size_t n_ts, const double* td, size_t n_td,
                              unsigned threads, distpd_pm_table** out) {
  return guard([&] {
    const auto& a = deref(act, "actuator");
    need(out, "out");
    auto t = std::make_unique<distpd_pm_table>();
    t->rows = pm_sweep({a.m, a.b, a.nu}, tau_v, to_vec(f_n, n_f_n, "f_n"),
                       to_vec(ts, n_ts, "ts"), to_vec(td, n_td, "td"), threads);
    *out = t.release();
  });
}

size_t distpd_pm_table_size(const distpd_pm_table* table) {
  return table ? table->rows.size() : 0;
}

distpd_status distpd_pm_table_row(const distpd_pm_table* table, size_t i,
                                  distpd_pm_row* out) {
  return guard([&] {
    const auto& t = deref(table, "table");
    need(out, "out");
    require(i < t.rows.size(), "row index out of range");
    const PmRow& r = t.rows[i];
    *out = {r.f_n_hz, r.Ts,     r.Td,        r.K,           r.B,
            r.omega_g, r.pm_deg, r.crossings, r.status.c_str()};
  });
}

distpd_status distpd_pm_table_write_csv(const distpd_pm_table* table,
                                        const char* path) {
  return guard([&] { write_file(path, pm_table_csv(deref(table, "table").rows)); });
}

void distpd_pm_table_free(distpd_pm_table* table) { delete table; }

// ---- sens

distpd_status distpd_pm_sensitivity(const distpd_loop* loop,
                                    distpd_sensitivity* out) {
  return guard([&] {
    need(out, "out");
    const SensitivityReport r = pm_sensitivity(to_cpp(deref(loop, "loop")));
    *out = {r.dpm_dts, r.dpm_dtd, r.modulation, r.phi, r.omega_g, r.a1g, r.a2g};
  });
}

distpd_status distpd_fd_sensitivity(const distpd_loop* loop, double step,
                                    distpd_fd_mode mode, double* dpm_dts,
                                    double* dpm_dtd) {
  return guard([&] {
    const FdSensitivity r = fd_sensitivity(
        to_cpp(deref(loop, "loop")), step,
        mode == DISTPD_FD_TOTAL ? FdMode::kTotal : FdMode::kFrozenCrossover);
    if (dpm_dts) *dpm_dts = r.dpm_dts;
    if (dpm_dtd) *dpm_dtd = r.dpm_dtd;
  });
}

distpd_status distpd_crossover_condition_check(const distpd_loop* loop,
                                               distpd_crossover_condition* out) {
  return guard([&] {
    need(out, "out");
    const CrossoverCondition c = crossover_condition(to_cpp(deref(loop, "loop")));
    *out = {c.holds, c.margin, c.threshold, c.omega_g};
  });
}

distpd_status distpd_crossover_residual(const distpd_loop* loop, double omega,
                                        double* residual, double* scale) {
  return guard([&] {
    need(residual, "residual");
    const LoopSystem s = to_cpp(deref(loop, "loop"));
    *residual = crossover_residual(s, omega);
    if (scale) *scale = crossover_residual_scale(s, omega);
  });
}

distpd_status distpd_breakdown_residual(double alpha, double beta, double gamma,
                                        double tau_v, double delta,
                                        double* out) {
  return guard([&] {
    need(out, "out");
    *out = breakdown_residual(alpha, beta, gamma, tau_v, delta);
  });
}

distpd_status distpd_delta_solve(double alpha, double beta, double gamma,
                                 double tau_v, distpd_breakdown_point* out) {
  return guard([&] {
    need(out, "out");
    const BreakdownPoint p = delta_solve(alpha, beta, gamma, tau_v);
    *out = {p.alpha, p.beta, p.gamma, p.tau_v, p.delta, p.u, p.v, p.residual};
  });
}

distpd_status distpd_delta_surface(const double* beta, size_t n_beta,
                                   const double* gamma, size_t n_gamma,
                                   double alpha, double tau_v, unsigned threads,
                                   distpd_surface** out) {
  return guard([&] {
    need(out, "out");
    auto s = std::make_unique<distpd_surface>();
    s->cells = delta_surface(to_vec(beta, n_beta, "beta"),
                             to_vec(gamma, n_gamma, "gamma"), alpha, tau_v,
                             threads);
    *out = s.release();
  });
}

size_t distpd_surface_size(const distpd_surface* s) {
  return s ? s->cells.size() : 0;
}

distpd_status distpd_surface_cell(const distpd_surface* s, size_t i,
                                  distpd_breakdown_point* point,
                                  const char** status) {
  return guard([&] {
    const auto& surf = deref(s, "surface");
    require(i < surf.cells.size(), "cell index out of range");
    const SurfaceCell& c = surf.cells[i];
    const BreakdownPoint& p = c.point;
    if (point) *point = {p.alpha, p.beta, p.gamma, p.tau_v, p.delta, p.u, p.v, p.residual};
    if (status) *status = c.status.c_str();
  });
}

distpd_status distpd_surface_write_csv(const distpd_surface* s,
                                       const char* path) {
  return guard([&] { write_file(path, surface_csv(deref(s, "surface").cells)); });
}

void distpd_surface_free(distpd_surface* s) { delete s; }

// ---- sim

distpd_status distpd_scenario_parse(const char* text, distpd_scenario** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    auto s = std::make_unique<distpd_scenario>();
    s->s = parse_scenario(text);
    *out = s.release();
  });
}

distpd_status distpd_scenario_step(const distpd_loop* loop, double amplitude,
                                   double duration, distpd_scenario** out) {
  return guard([&] {
    need(out, "out");
    auto s = std::make_unique<distpd_scenario>();
    s->s = step_scenario(to_cpp(deref(loop, "loop")), amplitude, duration);
    *out = s.release();
  });
}

distpd_status distpd_scenario_knee(const distpd_loop* loop, double load_mass,
                                   double duration, distpd_scenario** out) {
  return guard([&] {
    need(out, "out");
    auto s = std::make_unique<distpd_scenario>();
    s->s = knee_scenario(to_cpp(deref(loop, "loop")), load_mass, duration);
    *out = s.release();
  });
}

distpd_status distpd_scenario_set_timing(distpd_scenario* s, double dt_base,
                                         double rate_s, double rate_d) {
  return guard([&] {
    need(s, "scenario");
    SimScenario next = s->s;
    next.dt_base = dt_base;
    next.rate_s = rate_s;
    next.rate_d = rate_d;
    next.validate();
    s->s = next;
  });
}

distpd_status distpd_scenario_loop(const distpd_scenario* s, distpd_loop* out) {
  return guard([&] {
    need(out, "out");
    *out = to_c(deref(s, "scenario").s.sys);
  });
}

void distpd_scenario_free(distpd_scenario* s) { delete s; }

distpd_status distpd_simulate(const distpd_scenario* s, distpd_trace** out) {
  return guard([&] {
    need(out, "out");
    auto t = std::make_unique<distpd_trace>();
    t->tr = simulate(deref(s, "scenario").s);
    *out = t.release();
  });
}

size_t distpd_trace_size(const distpd_trace* tr) { return tr ? tr->tr.size() : 0; }

distpd_status distpd_trace_sample(const distpd_trace* tr, size_t i,
                                  distpd_sample* out) {
  return guard([&] {
    const SimTrace& t = deref(tr, "trace").tr;
    need(out, "out");
    require(i < t.size(), "sample index out of range");
    *out = {t.t[i], t.x[i], t.xdot[i], t.x_d[i], t.xdot_d[i], t.f_cmd[i],
            t.i_m[i], t.f_dist[i]};
  });
}

distpd_status distpd_trace_diverged(const distpd_trace* tr, int* diverged,
                                    double* diverged_at) {
  return guard([&] {
    const SimTrace& t = deref(tr, "trace").tr;
    if (diverged) *diverged = t.diverged();
    if (diverged_at) *diverged_at = t.diverged() ? t.diverged_at : std::nan("");
  });
}

distpd_status distpd_trace_rounding(const distpd_trace* tr,
                                    distpd_rounding* out) {
  return guard([&] {
    const RoundingReport& r = deref(tr, "trace").tr.rounding;
    need(out, "out");
    *out = {r.ts.applied, r.td.applied, r.rate_s.applied, r.rate_d.applied,
            r.duration.applied};
  });
}

distpd_status distpd_trace_classify(const distpd_trace* tr,
                                    const distpd_scenario* s,
                                    distpd_stability* out) {
  return guard([&] {
    need(out, "out");
    const StabilityClass c = classify_stability(
        deref(tr, "trace").tr, deref(s, "scenario").s.reference);
    out->kind = static_cast<distpd_stability_kind>(static_cast<int>(c.kind));
    out->has_overshoot = c.overshoot.has_value();
    out->overshoot = c.overshoot.value_or(std::nan(""));
    out->has_settling_time = c.settling_time.has_value();
    out->settling_time = c.settling_time.value_or(std::nan(""));
  });
}

distpd_status distpd_trace_rms(const distpd_trace* tr, double* position,
                               double* velocity) {
  return guard([&] {
    const RmsError e = rms_error(deref(tr, "trace").tr);
    if (position) *position = e.position;
    if (velocity) *velocity = e.velocity;
  });
}

distpd_status distpd_trace_write_csv(const distpd_trace* tr, const char* path,
                                     size_t stride) {
  return guard([&] { write_file(path, deref(tr, "trace").tr.csv(stride)); });
}

void distpd_trace_free(distpd_trace* tr) { delete tr; }

const char* distpd_stability_string(distpd_stability_kind kind) {
  switch (kind) {
    case DISTPD_STABLE: return to_string(StabilityKind::kStable);
    case DISTPD_MARGINAL: return to_string(StabilityKind::kMarginal);
    case DISTPD_DIVERGENT: return to_string(StabilityKind::kDivergent);
  }
  return "unknown";
}

// ---- base

void distpd_base_geometry_default(distpd_base_geometry* out) {
  if (!out) return;
  const BaseGeometry g;
  out->mount_radius = g.mount_radius;
  out->wheel_radius = g.wheel_radius;
  for (int i = 0; i < 3; ++i) out->wheel_angles[i] = g.wheel_angles[i];
  out->mass = g.mass;
  out->yaw_inertia = g.yaw_inertia;
  out->wheel_damping = g.wheel_damping;
}

void distpd_arch_config_default(distpd_architecture kind,
                                distpd_arch_config* out) {
  if (!out) return;
  ArchitectureConfig c;
  c.kind = kind == DISTPD_DOSC ? Architecture::kDistributed
                               : Architecture::kCentralized;
  to_c(c, *out);
}

void distpd_stiffness_search_default(distpd_stiffness_search* out) {
  if (!out) return;
  const StiffnessSearch s;
  out->duration = s.duration;
  copy3(s.perturbation, out->perturbation);
  out->relative_tolerance = s.relative_tolerance;
  out->initial_damping = s.initial_damping;
  out->initial_stiffness = s.initial_stiffness;
  out->max_doublings = s.max_doublings;
  out->window_fraction = s.detector.window_fraction;
  out->decay_ratio = s.detector.decay_ratio;
  out->min_zero_crossings = s.detector.min_zero_crossings;
  out->floor = s.detector.floor;
  out->dt = s.sim.dt;
}

distpd_status distpd_wheel_jacobian(const distpd_base_geometry* g,
                                    double out[9]) {
  return guard([&] {
    need(out, "out");
    const Eigen::Matrix3d j = wheel_jacobian(to_cpp(deref(g, "geometry")));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out[3 * r + c] = j(r, c);
  });
}

distpd_status distpd_arch_config_normalize(const distpd_base_geometry* g,
                                           double stiffness_per_mass,
                                           double damping,
                                           distpd_arch_config* out) {
  return guard([&] {
    need(out, "out");
    const BaseGeometry geom = to_cpp(deref(g, "geometry"));
    geom.validate();
    require(std::isfinite(stiffness_per_mass) && stiffness_per_mass >= 0.0 &&
                std::isfinite(damping) && damping >= 0.0,
            "normalized gains must be >= 0");
    const ArchitectureConfig timing = to_cpp(*out);
    ArchitectureConfig c = ArchitectureConfig::normalized(
        timing.kind, geom, stiffness_per_mass, damping, damping);
    c.highlevel_delay = timing.highlevel_delay;
    c.highlevel_period = timing.highlevel_period;
    c.embedded_period = timing.embedded_period;
    c.velocity_filter_tau = timing.velocity_filter_tau;
    to_c(c, *out);
  });
}

distpd_status distpd_simulate_base(const distpd_base_geometry* g,
                                   const distpd_arch_config* arch,
                                   const distpd_circle* circle, double duration,
                                   double dt, distpd_base_trace** out) {
  return guard([&] {
    need(out, "out");
    BaseSimOptions opt;
    opt.dt = dt;
    auto t = std::make_unique<distpd_base_trace>();
    t->tr = simulate_base(to_cpp(deref(g, "geometry")),
                          to_cpp(deref(arch, "architecture")),
                          to_cpp(deref(circle, "circle")), duration, opt);
    *out = t.release();
  });
}

size_t distpd_base_trace_size(const distpd_base_trace* tr) {
  return tr ? tr->tr.size() : 0;
}

distpd_status distpd_base_trace_sample(const distpd_base_trace* tr, size_t i,
                                       distpd_base_sample* out) {
  return guard([&] {
    const BaseTrace& t = deref(tr, "trace").tr;
    need(out, "out");
    require(i < t.size(), "sample index out of range");
    out->t = t.t[i];
    copy3(t.pose[i], out->pose);
    copy3(t.pose_ref[i], out->pose_ref);
    copy3(t.velocity[i], out->velocity);
    copy3(t.velocity_ref[i], out->velocity_ref);
    copy3(t.wheel_speed[i], out->wheel_speed);
    copy3(t.wheel_torque[i], out->wheel_torque);
    copy3(t.odometry[i], out->odometry);
  });
}

distpd_status distpd_base_trace_diverged(const distpd_base_trace* tr,
                                         int* diverged, double* diverged_at) {
  return guard([&] {
    const BaseTrace& t = deref(tr, "trace").tr;
    if (diverged) *diverged = t.diverged;
    if (diverged_at) *diverged_at = t.diverged ? t.diverged_at : std::nan("");
  });
}

distpd_status distpd_base_tracking_error(const distpd_base_trace* tr,
                                         double discard, double* position,
                                         double* velocity) {
  return guard([&] {
    const TrackingError e = tracking_error(deref(tr, "trace").tr, discard);
    if (position) *position = e.position_rms;
    if (velocity) *velocity = e.velocity_rms;
  });
}

distpd_status distpd_base_trace_write_csv(const distpd_base_trace* tr,
                                          const char* path, size_t stride) {
  return guard([&] { write_file(path, deref(tr, "trace").tr.csv(stride)); });
}

void distpd_base_trace_free(distpd_base_trace* tr) { delete tr; }

distpd_status distpd_base_vibrates(const distpd_base_geometry* g,
                                   const distpd_arch_config* arch,
                                   const distpd_circle* circle,
                                   const distpd_stiffness_search* search,
                                   int* out) {
  return guard([&] {
    need(out, "out");
    const StiffnessSearch s = search ? to_cpp(*search) : StiffnessSearch{};
    *out = vibrates(to_cpp(deref(g, "geometry")),
                    to_cpp(deref(arch, "architecture")),
                    to_cpp(deref(circle, "circle")), s);
  });
}

distpd_status distpd_max_stable_stiffness(const distpd_base_geometry* g,
                                          distpd_architecture kind,
                                          const distpd_circle* circle,
                                          const distpd_arch_config* timing,
                                          const distpd_stiffness_search* search,
                                          distpd_stiffness_result* out) {
  return guard([&] {
    need(out, "out");
    const StiffnessSearch s = search ? to_cpp(*search) : StiffnessSearch{};
    const ArchitectureConfig t = timing ? to_cpp(*timing) : ArchitectureConfig{};
    const StiffnessResult r = max_stable_stiffness(
        to_cpp(deref(g, "geometry")),
        kind == DISTPD_DOSC ? Architecture::kDistributed
                            : Architecture::kCentralized,
        to_cpp(deref(circle, "circle")), t, s);
    *out = {r.stiffness, r.stiffness_hi, r.damping, r.damping_hi,
            r.inconclusive, r.simulations};
    if (r.inconclusive) throw Error(ErrorCode::kInconclusive, r.note);
  });
}

}  // extern "C"
