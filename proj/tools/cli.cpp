#include "cli.hpp"

#include <distpd/distpd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "config.hpp"
#include "svg.hpp"

namespace distpd_cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = 3.14159265358979323846;

void check(distpd_status s) {
  if (s == DISTPD_OK) return;
  const std::string msg =
      std::string(distpd_status_string(s)) + ": " + distpd_last_error();
  switch (s) {
    case DISTPD_INVALID_ARGUMENT:
    case DISTPD_CONFIG:
    case DISTPD_DT_TOO_COARSE:
    case DISTPD_SINGULAR:
    case DISTPD_IO:
      throw ConfigError(msg);
    default:
      throw NumericError(msg);
  }
}

std::string status_name(distpd_status s) {
  std::string name = distpd_status_string(s);
  std::replace(name.begin(), name.end(), ' ', '_');
  return name;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string ms_tag(double seconds) { return fmt("%g", seconds * 1e3); }

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct Context {
  std::string subcommand;
  Config cfg;
  fs::path out_dir;
  unsigned threads = 0;
  std::ostream& out;
  std::vector<std::string> outputs;
  nlohmann::json cells = nlohmann::json::array();

  void write(const std::string& name, const std::string& text) {
    const fs::path p = out_dir / name;
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    f << text;
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    outputs.push_back(name);
  }
  void cell(const std::string& id, const std::string& status) {
    cells.push_back({{"id", id}, {"status", status}});
  }
  void manifest() {
    nlohmann::json m;
    m["tool"] = "distpd";
    m["subcommand"] = subcommand;
    m["config_hash"] = "fnv1a64:" + cfg.hash();
    m["config"] = cfg.values();
    nlohmann::json versions;
    for (const char* mod : {"core", "freq", "sens", "sim", "base", "cli"})
      versions[mod] = distpd_version();
    m["versions"] = versions;
    m["cells"] = cells;
    std::vector<std::string> files = outputs;
    m["outputs"] = files;
    write("manifest.json", m.dump(2) + "\n");
  }
};

std::vector<double> grid(const Config& cfg, const std::string& key,
                         double scale = 1.0) {
  std::vector<double> v = cfg.list(key);
  if (v.empty()) throw ConfigError("empty grid: '" + key + "'");
  for (double& x : v) x *= scale;
  return v;
}

distpd_actuator actuator(const Config& cfg) {
  return {cfg.num("plant.m"), cfg.num("plant.b"), cfg.num("plant.nu")};
}

// ---- pm-sweep

int cmd_pm_sweep(Context& ctx) {
  const Config& c = ctx.cfg;
  const distpd_actuator act = actuator(c);
  const auto fn = grid(c, "grid.f_n_hz");
  const auto ts = grid(c, "grid.ts_ms", 1e-3);
  const auto td = grid(c, "grid.td_ms", 1e-3);
  distpd_pm_table* table = nullptr;
  check(distpd_pm_sweep(&act, c.num("controller.tau_v"), fn.data(), fn.size(),
                        ts.data(), ts.size(), td.data(), td.size(),
                        ctx.threads, &table));
  std::unique_ptr<distpd_pm_table, void (*)(distpd_pm_table*)> guard(
      table, distpd_pm_table_free);

  Table t;
  t.columns = {"f_n_hz", "Ts_s", "Td_s", "omega_g", "pm_deg"};
  t.text_column = "status";
  std::size_t ok = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < distpd_pm_table_size(table); ++i) {
    distpd_pm_row r;
    check(distpd_pm_table_row(table, i, &r));
    t.rows.push_back({r.f_n_hz, r.Ts, r.Td, r.omega_g, r.pm_deg});
    t.text.push_back(r.status);
    ctx.cell("f_n=" + fmt("%g", r.f_n_hz) + ",Ts=" + fmt("%g", r.Ts) +
                 ",Td=" + fmt("%g", r.Td),
             r.status);
    if (std::string(r.status) == "ok") {
      ++ok;
      lo = std::min(lo, r.pm_deg);
      hi = std::max(hi, r.pm_deg);
    }
  }
  const std::string name = c.str("output.name");
  const fs::path csv = ctx.out_dir / (name + ".csv");
  check(distpd_pm_table_write_csv(table, csv.string().c_str()));
  ctx.outputs.push_back(name + ".csv");

  PlotSpec p;
  p.x = "f_n_hz";
  p.y = "pm_deg";
  p.group_by = {"Ts_s", "Td_s"};
  p.title = "Phase margin vs natural frequency";
  p.x_label = "natural frequency (Hz)";
  p.y_label = "phase margin (deg)";
  p.threshold = c.num("plot.threshold_deg");
  ctx.write(name + ".svg", emit_svg(t, p));
  ctx.manifest();
  ctx.out << "pm-sweep: " << t.rows.size() << " cells, " << ok << " ok";
  if (ok) ctx.out << ", phase margin " << fmt("%.2f", lo) << " .. " << fmt("%.2f", hi) << " deg";
  ctx.out << "\n";
  return 0;
}

// ---- sens

int cmd_sens(Context& ctx) {
  const Config& c = ctx.cfg;
  const distpd_actuator act = actuator(c);
  const double tau_v = c.num("controller.tau_v");
  const double step = c.num("fd.step");
  const auto fn = grid(c, "grid.f_n_hz");
  const auto ts = grid(c, "grid.ts_ms", 1e-3);
  const auto td = grid(c, "grid.td_ms", 1e-3);

  struct Cell {
    double f_n, ts, td;
    std::vector<double> row;
    std::string status;
  };
  std::vector<Cell> cells;
  for (double a : ts)
    for (double b : td)
      for (double f : fn) cells.push_back({f, a, b, {}, "ok"});

  parallel_for(cells.size(), ctx.threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    std::vector<double> row(14, kNaN);
    row[0] = cell.f_n;
    row[1] = cell.ts;
    row[2] = cell.td;
    cell.row = row;
    distpd_loop loop;
    distpd_status s = distpd_critically_damped(&act, cell.f_n, cell.ts, cell.td, tau_v, &loop);
    distpd_margin m;
    if (s == DISTPD_OK) s = distpd_phase_margin(&loop, &m);
    distpd_sensitivity an;
    if (s == DISTPD_OK) s = distpd_pm_sensitivity(&loop, &an);
    double fd_ts = kNaN, fd_td = kNaN, tot_ts = kNaN, tot_td = kNaN;
    if (s == DISTPD_OK)
      s = distpd_fd_sensitivity(&loop, step, DISTPD_FD_FROZEN_CROSSOVER, &fd_ts, &fd_td);
    if (s == DISTPD_OK)
      s = distpd_fd_sensitivity(&loop, step, DISTPD_FD_TOTAL, &tot_ts, &tot_td);
    if (s != DISTPD_OK) {
      cell.status = status_name(s);
      return;
    }
    row[3] = m.omega_g;
    row[4] = m.pm_deg;
    row[5] = an.dpm_dts;
    row[6] = an.dpm_dtd;
    row[7] = fd_ts;
    row[8] = fd_td;
    row[9] = tot_ts;
    row[10] = tot_td;
    distpd_crossover_condition cc;
    if (distpd_crossover_condition_check(&loop, &cc) == DISTPD_OK) {
      row[11] = cc.holds;
      row[12] = cc.margin;
      if (cc.holds) row[13] = an.dpm_dtd < 0.0 && an.dpm_dtd < an.dpm_dts;
    }
    cell.row = row;
  });

  Table t;
  t.columns = {"f_n_hz", "Ts_s", "Td_s", "omega_g", "pm_deg", "dpm_dts",
               "dpm_dtd", "fd_dpm_dts", "fd_dpm_dtd", "total_dpm_dts",
               "total_dpm_dtd", "condition_holds", "condition_margin",
               "ordering_holds"};
  t.text_column = "status";
  double worst = 0.0;
  int failures = 0, violations = 0;
  for (const Cell& cell : cells) {
    t.rows.push_back(cell.row);
    t.text.push_back(cell.status);
    ctx.cell("f_n=" + fmt("%g", cell.f_n) + ",Ts=" + fmt("%g", cell.ts) +
                 ",Td=" + fmt("%g", cell.td),
             cell.status);
    if (cell.status != "ok") {
      ++failures;
      continue;
    }
    for (int k = 0; k < 2; ++k) {
      const double a = cell.row[5 + k], f = cell.row[7 + k];
      worst = std::max(worst, std::abs(a - f) / std::max(std::abs(f), 1e-8));
    }
    if (cell.row[13] == 0.0) ++violations;
  }
  ctx.write("sens.csv", t.csv());
  ctx.manifest();
  ctx.out << "sens: " << cells.size() << " systems, " << failures
          << " failed, max |analytic - finite difference| / |fd| = "
          << fmt("%.3g", worst) << ", ordering violations under the crossover condition: "
          << violations << "\n";
  ctx.out << "  f_n_hz  Ts_ms  Td_ms   pm_deg   dPM/dTs   dPM/dTd  (rad/s, crossover held)\n";
  for (const Cell& cell : cells) {
    if (cell.status != "ok") {
      ctx.out << "  " << fmt("%6g", cell.f_n) << ' ' << fmt("%6g", cell.ts * 1e3)
              << ' ' << fmt("%6g", cell.td * 1e3) << "  " << cell.status << "\n";
      continue;
    }
    ctx.out << "  " << fmt("%6g", cell.f_n) << ' ' << fmt("%6g", cell.ts * 1e3)
            << ' ' << fmt("%6g", cell.td * 1e3) << ' ' << fmt("%8.2f", cell.row[4])
            << ' ' << fmt("%9.3f", cell.row[5]) << ' ' << fmt("%9.3f", cell.row[6])
            << "\n";
  }
  if (failures) {
    ctx.out << "sens: " << failures << " system(s) had no result\n";
    return 2;
  }
  return 0;
}

// ---- breakdown

int cmd_breakdown(Context& ctx) {
  const Config& c = ctx.cfg;
  const auto beta = grid(c, "grid.beta");
  const auto gamma = grid(c, "grid.gamma");
  const double alpha = c.num("breakdown.alpha");
  const double tau_v = c.num("breakdown.tau_v");
  distpd_surface* surf = nullptr;
  check(distpd_delta_surface(beta.data(), beta.size(), gamma.data(), gamma.size(),
                             alpha, tau_v, ctx.threads, &surf));
  std::unique_ptr<distpd_surface, void (*)(distpd_surface*)> guard(
      surf, distpd_surface_free);
  check(distpd_surface_write_csv(surf, (ctx.out_dir / "breakdown.csv").string().c_str()));
  ctx.outputs.push_back("breakdown.csv");

  Table t;
  t.columns = {"beta", "gamma", "delta"};
  for (std::size_t i = 0; i < distpd_surface_size(surf); ++i) {
    distpd_breakdown_point p;
    const char* status = nullptr;
    check(distpd_surface_cell(surf, i, &p, &status));
    t.rows.push_back({p.beta, p.gamma, p.delta});
    ctx.cell("beta=" + fmt("%g", p.beta) + ",gamma=" + fmt("%g", p.gamma), status);
  }
  PlotSpec p;
  p.x = "gamma";
  p.y = "delta";
  p.group_by = {"beta"};
  p.title = "Crossover excess ratio vs damping ratio";
  p.x_label = "gamma = B / b";
  p.y_label = "delta";
  p.threshold = 0.0;
  ctx.write("breakdown.svg", emit_svg(t, p));
  ctx.manifest();

  ctx.out << "breakdown: alpha=" << fmt("%g", alpha) << " tau_v=" << fmt("%g", tau_v) << "\n";
  for (std::size_t b = 0; b < beta.size(); ++b) {
    std::string crossing = "none";
    double lo = kNaN, hi = kNaN;
    for (std::size_t g = 0; g < gamma.size(); ++g) {
      const double d = t.rows[b * gamma.size() + g][2];
      if (!std::isfinite(d)) continue;
      lo = std::isfinite(lo) ? std::min(lo, d) : d;
      hi = std::isfinite(hi) ? std::max(hi, d) : d;
      if (g > 0 && crossing == "none") {
        const double d0 = t.rows[b * gamma.size() + g - 1][2];
        if (std::isfinite(d0) && (d0 < 0.0) != (d < 0.0)) {
          const double g0 = gamma[g - 1], g1 = gamma[g];
          crossing = fmt("%.4g", g0 - d0 * (g1 - g0) / (d - d0));
        }
      }
    }
    ctx.out << "  beta=" << fmt("%g", beta[b]) << ": delta range ["
            << fmt("%.4g", lo) << ", " << fmt("%.4g", hi)
            << "], sign change at gamma ~ " << crossing << "\n";
  }
  return 0;
}

// ---- step

int cmd_step(Context& ctx) {
  const Config& c = ctx.cfg;
  const distpd_actuator act = actuator(c);
  const double tau_v = c.num("controller.tau_v");
  const auto fn = grid(c, "grid.f_n_hz");
  const auto ts = grid(c, "grid.ts_ms", 1e-3);
  const auto td = grid(c, "grid.td_ms", 1e-3);
  const double dt = c.num("sim.dt");
  const double rate_s = c.num("sim.rate_s_ms") * 1e-3;
  const double rate_d = c.num("sim.rate_d_ms") * 1e-3;
  const double duration = c.num("sim.duration");
  const double amplitude = c.num("sim.amplitude");
  const long stride = c.integer("output.trace_stride");
  const bool traces = c.flag("output.traces");
  if (stride < 1) throw ConfigError("key 'output.trace_stride' must be >= 1");

  struct Cell {
    double f_n, ts, td;
    double pm = kNaN, overshoot = kNaN, settling = kNaN, diverged_at = kNaN;
    std::string pm_status = "ok", stability = "not_run";
    distpd_trace* trace = nullptr;
  };
  std::vector<Cell> cells;
  for (double a : ts)
    for (double b : td)
      for (double f : fn) cells.push_back({f, a, b});

  parallel_for(cells.size(), ctx.threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    distpd_loop loop;
    distpd_status s =
        distpd_critically_damped(&act, cell.f_n, cell.ts, cell.td, tau_v, &loop);
    if (s != DISTPD_OK) {
      cell.pm_status = cell.stability = status_name(s);
      return;
    }
    distpd_margin m;
    s = distpd_phase_margin(&loop, &m);
    if (s == DISTPD_OK) cell.pm = m.pm_deg;
    else cell.pm_status = status_name(s);
    distpd_scenario* scn = nullptr;
    check(distpd_scenario_step(&loop, amplitude, duration, &scn));
    std::unique_ptr<distpd_scenario, void (*)(distpd_scenario*)> g(scn, distpd_scenario_free);
    check(distpd_scenario_set_timing(scn, dt, rate_s, rate_d));
    check(distpd_simulate(scn, &cell.trace));
    distpd_stability st;
    check(distpd_trace_classify(cell.trace, scn, &st));
    cell.stability = distpd_stability_string(st.kind);
    if (st.has_overshoot) cell.overshoot = st.overshoot;
    if (st.has_settling_time) cell.settling = st.settling_time;
    int div = 0;
    check(distpd_trace_diverged(cell.trace, &div, &cell.diverged_at));
  });

  Table t;
  t.columns = {"f_n_hz", "Ts_s", "Td_s", "pm_deg", "overshoot", "settling_time_s",
               "diverged_at_s"};
  t.text_column = "stability";
  std::map<std::string, int> counts;
  for (const Cell& cell : cells) {
    t.rows.push_back({cell.f_n, cell.ts, cell.td, cell.pm, cell.overshoot,
                      cell.settling, cell.diverged_at});
    t.text.push_back(cell.stability);
    ++counts[cell.stability];
    ctx.cell("f_n=" + fmt("%g", cell.f_n) + ",Ts=" + fmt("%g", cell.ts) +
                 ",Td=" + fmt("%g", cell.td),
             cell.stability + (cell.pm_status == "ok" ? "" : ";pm:" + cell.pm_status));
  }
  ctx.write("step.csv", t.csv());

  // One trace plot per damping delay, at the largest stiffness delay.
  const double ts_plot = *std::max_element(ts.begin(), ts.end());
  for (double d : td) {
    Table tr;
    tr.columns = {"t", "f_n_hz", "x"};
    for (const Cell& cell : cells) {
      if (cell.td != d || cell.ts != ts_plot || !cell.trace) continue;
      const std::size_t n = distpd_trace_size(cell.trace);
      for (std::size_t k = 0; k < n; k += static_cast<std::size_t>(stride)) {
        distpd_sample smp;
        check(distpd_trace_sample(cell.trace, k, &smp));
        tr.rows.push_back({smp.t, cell.f_n, smp.x});
      }
    }
    PlotSpec p;
    p.x = "t";
    p.y = "x";
    p.group_by = {"f_n_hz"};
    p.markers = false;
    p.title = "Step response, Ts = " + ms_tag(ts_plot) + " ms, Td = " + ms_tag(d) + " ms";
    p.x_label = "time (s)";
    p.y_label = "position";
    ctx.write("step_td" + ms_tag(d) + "ms.svg", emit_svg(tr, p));
  }
  if (traces) {
    for (const Cell& cell : cells) {
      if (!cell.trace) continue;
      const std::string name = "traces/step_fn" + fmt("%g", cell.f_n) + "_ts" +
                               ms_tag(cell.ts) + "_td" + ms_tag(cell.td) + ".csv";
      fs::create_directories(ctx.out_dir / "traces");
      check(distpd_trace_write_csv(cell.trace, (ctx.out_dir / name).string().c_str(),
                                   static_cast<std::size_t>(stride)));
      ctx.outputs.push_back(name);
    }
  }
  for (Cell& cell : cells) distpd_trace_free(cell.trace);
  ctx.manifest();
  ctx.out << "step: " << cells.size() << " cells";
  for (const auto& [k, v] : counts) ctx.out << ", " << v << " " << k;
  ctx.out << "\n";
  return 0;
}

// ---- track

int cmd_track(Context& ctx) {
  const Config& c = ctx.cfg;
  const distpd_actuator act = actuator(c);
  const auto ts = grid(c, "grid.ts_ms", 1e-3);
  const double f_n = c.num("controller.f_n_hz");
  const double td = c.num("controller.td_ms") * 1e-3;
  const double tau_v = c.num("controller.tau_v");
  const double load = c.num("scenario.load_mass");
  const double duration = c.num("scenario.duration");
  const double dt = c.num("scenario.dt");
  const long stride = c.integer("output.trace_stride");
  if (stride < 1) throw ConfigError("key 'output.trace_stride' must be >= 1");

  struct Cell {
    double ts;
    double pos = kNaN, vel = kNaN, pm = kNaN;
    std::string status = "ok";
    distpd_trace* trace = nullptr;
  };
  std::vector<Cell> cells;
  for (double a : ts) cells.push_back({a});
  parallel_for(cells.size(), ctx.threads, [&](std::size_t i) {
    Cell& cell = cells[i];
    distpd_loop loop;
    check(distpd_critically_damped(&act, f_n, cell.ts, td, tau_v, &loop));
    distpd_margin m;
    if (distpd_phase_margin(&loop, &m) == DISTPD_OK) cell.pm = m.pm_deg;
    distpd_scenario* scn = nullptr;
    check(distpd_scenario_knee(&loop, load, duration, &scn));
    std::unique_ptr<distpd_scenario, void (*)(distpd_scenario*)> g(scn, distpd_scenario_free);
    check(distpd_scenario_set_timing(scn, dt, 0.0, 0.0));
    check(distpd_simulate(scn, &cell.trace));
    const distpd_status s = distpd_trace_rms(cell.trace, &cell.pos, &cell.vel);
    if (s != DISTPD_OK) cell.status = status_name(s);
  });

  Table t;
  t.columns = {"Ts_s", "pm_deg", "rms_position", "rms_velocity",
               "position_ratio", "velocity_ratio"};
  t.text_column = "status";
  Table err;
  err.columns = {"t", "Ts_ms", "error"};
  int failures = 0;
  for (const Cell& cell : cells) {
    t.rows.push_back({cell.ts, cell.pm, cell.pos, cell.vel, cell.pos / cells[0].pos,
                      cell.vel / cells[0].vel});
    t.text.push_back(cell.status);
    ctx.cell("Ts=" + fmt("%g", cell.ts), cell.status);
    if (cell.status != "ok") ++failures;
    const std::size_t n = distpd_trace_size(cell.trace);
    for (std::size_t k = 0; k < n; k += static_cast<std::size_t>(stride)) {
      distpd_sample smp;
      check(distpd_trace_sample(cell.trace, k, &smp));
      err.rows.push_back({smp.t, cell.ts * 1e3, smp.x - smp.x_d});
    }
    const std::string name = "traces/track_ts" + ms_tag(cell.ts) + ".csv";
    fs::create_directories(ctx.out_dir / "traces");
    check(distpd_trace_write_csv(cell.trace, (ctx.out_dir / name).string().c_str(),
                                 static_cast<std::size_t>(stride)));
    ctx.outputs.push_back(name);
  }
  for (Cell& cell : cells) distpd_trace_free(cell.trace);
  ctx.write("track.csv", t.csv());
  PlotSpec p;
  p.x = "t";
  p.y = "error";
  p.group_by = {"Ts_ms"};
  p.markers = false;
  p.title = "Tracking error, knee trajectory";
  p.x_label = "time (s)";
  p.y_label = "x - x_D (rad)";
  ctx.write("track.svg", emit_svg(err, p));
  ctx.manifest();

  ctx.out << "track: Td = " << ms_tag(td) << " ms, f_n = " << fmt("%g", f_n) << " Hz\n";
  ctx.out << "  Ts_ms   pm_deg   rms_pos(rad)  rms_vel(rad/s)\n";
  for (const Cell& cell : cells)
    ctx.out << "  " << fmt("%5g", cell.ts * 1e3) << "  " << fmt("%7.2f", cell.pm)
            << "  " << fmt("%12.5g", cell.pos) << "  " << fmt("%14.5g", cell.vel)
            << (cell.status == "ok" ? "" : "  " + cell.status) << "\n";
  if (failures) {
    ctx.out << "track: " << failures << " run(s) diverged, RMS undefined\n";
    return 2;
  }
  return 0;
}

// ---- base

int cmd_base(Context& ctx) {
  const Config& c = ctx.cfg;
  distpd_base_geometry geom;
  geom.mount_radius = c.num("geometry.mount_radius");
  geom.wheel_radius = c.num("geometry.wheel_radius");
  const auto angles = c.list("geometry.wheel_angles_deg");
  if (angles.size() != 3)
    throw ConfigError("key 'geometry.wheel_angles_deg' needs three angles");
  for (int i = 0; i < 3; ++i) geom.wheel_angles[i] = angles[i] * kPi / 180.0;
  geom.mass = c.num("geometry.mass");
  geom.yaw_inertia = c.num("geometry.yaw_inertia");
  geom.wheel_damping = c.num("geometry.wheel_damping");

  distpd_arch_config timing;
  distpd_arch_config_default(DISTPD_COSC, &timing);
  timing.highlevel_delay = c.num("timing.highlevel_delay_ms") * 1e-3;
  timing.highlevel_period = c.num("timing.highlevel_period_ms") * 1e-3;
  timing.embedded_period = c.num("timing.embedded_period_ms") * 1e-3;
  timing.velocity_filter_tau = c.num("timing.velocity_filter_tau");
  const distpd_circle circle{c.num("trajectory.radius"), c.num("trajectory.period")};
  const double duration = c.num("trajectory.duration");
  const double discard = c.num("trajectory.discard");
  distpd_stiffness_search search;
  distpd_stiffness_search_default(&search);
  search.duration = c.num("search.duration");
  search.relative_tolerance = c.num("search.tolerance");
  search.dt = c.num("sim.dt");
  const long stride = c.integer("output.trace_stride");
  if (stride < 1) throw ConfigError("key 'output.trace_stride' must be >= 1");

  struct Arm {
    distpd_architecture kind;
    distpd_stiffness_result res{};
    distpd_status search_status = DISTPD_OK;
    distpd_base_trace* trace = nullptr;
    double pos = kNaN, vel = kNaN;
    std::string status = "ok";
  };
  std::vector<Arm> arms = {{DISTPD_COSC}, {DISTPD_DOSC}};
  parallel_for(arms.size(), ctx.threads, [&](std::size_t i) {
    Arm& a = arms[i];
    a.search_status = distpd_max_stable_stiffness(&geom, a.kind, &circle, &timing,
                                                  &search, &a.res);
    if (a.search_status != DISTPD_OK && a.search_status != DISTPD_INCONCLUSIVE)
      check(a.search_status);
    if (a.search_status == DISTPD_INCONCLUSIVE) a.status = "inconclusive";
    distpd_arch_config cfg = timing;
    cfg.kind = a.kind;
    check(distpd_arch_config_normalize(&geom, a.res.stiffness, a.res.damping, &cfg));
    check(distpd_simulate_base(&geom, &cfg, &circle, duration, search.dt, &a.trace));
    const distpd_status s = distpd_base_tracking_error(a.trace, discard, &a.pos, &a.vel);
    if (s != DISTPD_OK && a.status == "ok") a.status = status_name(s);
  });

  // DOSC at the COSC stiffness limit.
  distpd_arch_config same = timing;
  same.kind = DISTPD_DOSC;
  check(distpd_arch_config_normalize(&geom, arms[0].res.stiffness, arms[1].res.damping, &same));
  int same_vib = 0;
  check(distpd_base_vibrates(&geom, &same, &circle, &search, &same_vib));

  Table t;
  t.columns = {"architecture", "k_star", "k_vibrating", "damping", "damping_vibrating",
               "rms_position", "rms_velocity"};
  t.text_column = "status";
  Table path;
  path.columns = {"series", "x", "y"};
  Table err;
  err.columns = {"t", "architecture", "position_error"};
  int failures = 0;
  for (const Arm& a : arms) {
    t.rows.push_back({static_cast<double>(a.kind), a.res.stiffness, a.res.stiffness_hi,
                      a.res.damping, a.res.damping_hi, a.pos, a.vel});
    t.text.push_back(a.status);
    ctx.cell(a.kind == DISTPD_COSC ? "COSC" : "DOSC", a.status);
    if (a.status != "ok") ++failures;
    const std::size_t n = distpd_base_trace_size(a.trace);
    for (std::size_t k = 0; k < n; k += static_cast<std::size_t>(stride)) {
      distpd_base_sample smp;
      check(distpd_base_trace_sample(a.trace, k, &smp));
      path.rows.push_back({static_cast<double>(a.kind), smp.pose[0], smp.pose[1]});
      err.rows.push_back({smp.t, static_cast<double>(a.kind),
                          std::hypot(smp.pose[0] - smp.pose_ref[0],
                                     smp.pose[1] - smp.pose_ref[1])});
      if (a.kind == DISTPD_COSC)
        path.rows.push_back({2.0, smp.pose_ref[0], smp.pose_ref[1]});
    }
    const std::string name = std::string("traces/base_") +
                             (a.kind == DISTPD_COSC ? "cosc" : "dosc") + ".csv";
    fs::create_directories(ctx.out_dir / "traces");
    check(distpd_base_trace_write_csv(a.trace, (ctx.out_dir / name).string().c_str(),
                                      static_cast<std::size_t>(stride)));
    ctx.outputs.push_back(name);
  }
  for (Arm& a : arms) distpd_base_trace_free(a.trace);
  ctx.write("base.csv", t.csv());
  PlotSpec p;
  p.x = "x";
  p.y = "y";
  p.group_by = {"series"};
  p.markers = false;
  p.title = "Circle tracking (series 0 = COSC, 1 = DOSC, 2 = reference)";
  p.x_label = "x (m)";
  p.y_label = "y (m)";
  ctx.write("base_path.svg", emit_svg(path, p));
  PlotSpec q;
  q.x = "t";
  q.y = "position_error";
  q.group_by = {"architecture"};
  q.markers = false;
  q.title = "Position error (0 = COSC, 1 = DOSC)";
  q.x_label = "time (s)";
  q.y_label = "|p - p_d| (m)";
  ctx.write("base_error.svg", emit_svg(err, q));
  ctx.cell("DOSC@K*(COSC)", same_vib ? "vibrating" : "stable");
  ctx.manifest();

  const Arm& co = arms[0];
  const Arm& dc = arms[1];
  ctx.out << "base: high-level delay " << ms_tag(timing.highlevel_delay)
          << " ms, embedded period " << ms_tag(timing.embedded_period) << " ms\n";
  for (const Arm& a : arms)
    ctx.out << "  " << (a.kind == DISTPD_COSC ? "COSC" : "DOSC") << "  K* = "
            << fmt("%.4g", a.res.stiffness) << " N/(m kg)  (vibrates at "
            << fmt("%.4g", a.res.stiffness_hi) << "), damping "
            << fmt("%.4g", a.res.damping) << ", rms pos " << fmt("%.4g", a.pos)
            << " m, rms vel " << fmt("%.4g", a.vel) << " m/s  [" << a.status << "]\n";
  ctx.out << "  K*(DOSC)/K*(COSC) = " << fmt("%.3g", dc.res.stiffness / co.res.stiffness)
          << "; DOSC at K*(COSC): " << (same_vib ? "vibrating" : "stable") << "\n";
  return failures ? 2 : 0;
}

using Command = int (*)(Context&);

const std::map<std::string, std::pair<Command, const char*>>& commands() {
  static const std::map<std::string, std::pair<Command, const char*>> m = {
      {"pm-sweep", {cmd_pm_sweep, "phase margin over a (f_n, Ts, Td) grid"}},
      {"sens", {cmd_sens, "analytic delay sensitivities with finite-difference check"}},
      {"breakdown", {cmd_breakdown, "crossover excess ratio surface over (beta, gamma)"}},
      {"step", {cmd_step, "step simulations over a (f_n, Ts, Td) grid"}},
      {"track", {cmd_track, "knee trajectory tracking over stiffness delays"}},
      {"base", {cmd_base, "centralized vs distributed control of an omnidirectional base"}},
  };
  return m;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"pm-sweep", "sens", "breakdown",
                                                 "step", "track", "base"};
  return names;
}

std::map<std::string, std::string> default_config(const std::string& sub) {
  const std::map<std::string, std::string> plant = {
      {"plant.m", "256"}, {"plant.b", "1250"}, {"plant.nu", "1"},
      {"controller.tau_v", "0.0032"}};
  auto with = [&](std::map<std::string, std::string> extra,
                  const std::map<std::string, std::string>& base) {
    extra.insert(base.begin(), base.end());
    return extra;
  };
  if (sub == "pm-sweep")
    return with({{"grid.f_n_hz", "1:30:1"},
                 {"grid.ts_ms", "1, 3, 5"},
                 {"grid.td_ms", "1, 3, 5"},
                 {"plot.threshold_deg", "50"},
                 {"output.name", "pm_sweep"}},
                plant);
  if (sub == "sens")
    return with({{"grid.f_n_hz", "2, 5, 10, 20"},
                 {"grid.ts_ms", "5, 25"},
                 {"grid.td_ms", "1, 5"},
                 {"fd.step", "1e-7"}},
                plant);
  if (sub == "breakdown")
    return {{"breakdown.alpha", "1"},
            {"breakdown.tau_v", "0.0032"},
            {"grid.beta", "10, 100, 400"},
            {"grid.gamma", "1.1:6.0:0.1"}};
  if (sub == "step")
    return with({{"grid.f_n_hz", "2, 4, 6, 8, 10, 12"},
                 {"grid.ts_ms", "5:25:5"},
                 {"grid.td_ms", "1, 15"},
                 {"sim.dt", "1e-4"},
                 {"sim.rate_s_ms", "0"},
                 {"sim.rate_d_ms", "0"},
                 {"sim.duration", "10"},
                 {"sim.amplitude", "0.01"},
                 {"output.trace_stride", "100"},
                 {"output.traces", "true"}},
                plant);
  if (sub == "track")
    return {{"plant.m", "0.64"},
            {"plant.b", "3.125"},
            {"plant.nu", "1"},
            {"controller.f_n_hz", "4"},
            {"controller.td_ms", "2"},
            {"controller.tau_v", "0.0032"},
            {"grid.ts_ms", "2, 20, 30"},
            {"scenario.load_mass", "4.5"},
            {"scenario.duration", "6"},
            {"scenario.dt", "1e-4"},
            {"output.trace_stride", "10"}};
  if (sub == "base")
    return {{"geometry.mount_radius", "0.2"},
            {"geometry.wheel_radius", "0.05"},
            {"geometry.wheel_angles_deg", "90, 210, 330"},
            {"geometry.mass", "20"},
            {"geometry.yaw_inertia", "0.4"},
            {"geometry.wheel_damping", "0.1"},
            {"timing.highlevel_delay_ms", "22"},
            {"timing.highlevel_period_ms", "1"},
            {"timing.embedded_period_ms", "0.5"},
            {"timing.velocity_filter_tau", "0.0032"},
            {"trajectory.radius", "0.3"},
            {"trajectory.period", "4"},
            {"trajectory.duration", "8"},
            {"trajectory.discard", "4"},
            {"search.duration", "6"},
            {"search.tolerance", "0.01"},
            {"sim.dt", "1e-4"},
            {"output.trace_stride", "10"}};
  throw ConfigError("unknown subcommand '" + sub + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"distpd: distributed PD control under asymmetric servo latencies"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  std::vector<std::string> sets;
  unsigned jobs = 0;
  bool print_config = false;
  for (const auto& [name, entry] : commands()) {
    CLI::App* sc = app.add_subcommand(name, entry.second);
    sc->add_option("-c,--config", config_path, "INI config file");
    sc->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    sc->add_option("--set", sets, "override, section.key=value (repeatable)");
    sc->add_option("-j,--jobs", jobs, "worker threads, 0 = all cores");
    sc->add_flag("--print-config", print_config,
                 "print the effective configuration and exit");
  }

  std::vector<const char*> argv;
  argv.push_back("distpd");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "distpd: " << e.what() << "\n";
    return 1;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    Config cfg(default_config(sub));
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& s : sets) cfg.set(s);
    if (print_config) {
      out << cfg.canonical();
      return 0;
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
      throw ConfigError("output directory '" + out_dir + "' is not writable");
    Context ctx{sub, cfg, fs::path(out_dir), jobs, out, {}, nlohmann::json::array()};
    return commands().at(sub).first(ctx);
  } catch (const ConfigError& e) {
    err << "distpd " << sub << ": " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    err << "distpd " << sub << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "distpd " << sub << ": " << e.what() << "\n";
    return 2;
  }
}

}  // namespace distpd_cli
