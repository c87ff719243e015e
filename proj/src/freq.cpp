#include "freq.hpp"

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace distpd {

namespace {

constexpr Complex kJ{0.0, 1.0};

void require_omega(double omega) {
  require(std::isfinite(omega) && omega > 0.0, "omega must be > 0");
}

double log_gain(const LoopSystem& sys, double omega) {
  return std::log(std::abs(open_loop_response(sys, omega).value));
}

}  // namespace

void numerator_components(const LoopSystem& sys, double omega, double& a1,
                          double& a2) {
  const auto& c = sys.controller;
  const double cs = std::cos(c.Ts * omega), ss = std::sin(c.Ts * omega);
  const double cd = std::cos(c.Td * omega), sd = std::sin(c.Td * omega);
  a1 = c.B * omega * cd - c.K * ss + c.K * c.tau_v * omega * cs;
  a2 = c.B * omega * sd + c.K * cs + c.K * c.tau_v * omega * ss;
}

FreqPoint open_loop_response(const LoopSystem& sys, double omega) {
  require_omega(omega);
  const auto& a = sys.actuator;
  const auto& c = sys.controller;
  FreqPoint p;
  p.omega = omega;
  numerator_components(sys, omega, p.a1, p.a2);
  const Complex den = kJ * omega * (kJ * a.m * omega + a.b) *
                      (kJ * c.tau_v * omega + 1.0);
  p.value = Complex(p.a2, p.a1) / den;
  return p;
}

Complex closed_loop_response(const LoopSystem& sys, double omega) {
  require_omega(omega);
  const auto& a = sys.actuator;
  const auto& c = sys.controller;
  const Complex s = kJ * omega;
  const Complex qv = 1.0 / (c.tau_v * s + 1.0);
  const Complex num = c.B * s + c.K;
  const Complex den = a.m * s * s + (a.b + std::exp(-c.Td * s) * c.B * qv) * s +
                      std::exp(-c.Ts * s) * c.K;
  return num / den;
}

Complex closed_loop_response_via_open_loop(const LoopSystem& sys,
                                           double omega) {
  require_omega(omega);
  const auto& a = sys.actuator;
  const auto& c = sys.controller;
  const Complex s = kJ * omega;
  const Complex forward = (c.B * s + c.K) / (a.m * s * s + a.b * s);
  return forward / (1.0 + open_loop_response(sys, omega).value);
}

MarginReport gain_crossover(const LoopSystem& sys,
                            const CrossoverSearch& search) {
  sys.validate();
  require(search.probes >= 2 && search.omega_min > 0.0 &&
              search.omega_max > search.omega_min,
          "invalid crossover search band");
  const double lo = std::log(search.omega_min);
  const double hi = std::log(search.omega_max);
  const double step = (hi - lo) / (search.probes - 1);

  int crossings = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double prev = log_gain(sys, search.omega_min);
  for (int i = 1; i < search.probes; ++i) {
    const double lw = lo + step * i;
    const double g = log_gain(sys, std::exp(lw));
    if ((prev > 0.0) != (g > 0.0)) {
      ++crossings;
      bracket_lo = lw - step;
      bracket_hi = lw;
    }
    prev = g;
  }
  if (crossings == 0) {
    throw Error(ErrorCode::kNoCrossover,
                "no unity-gain crossover in [" + num(search.omega_min) + ", " +
                    num(search.omega_max) + "] rad/s");
  }

  double glo = log_gain(sys, std::exp(bracket_lo));
  for (int it = 0; it < search.bisection_iterations; ++it) {
    const double mid = 0.5 * (bracket_lo + bracket_hi);
    const double gm = log_gain(sys, std::exp(mid));
    if ((gm > 0.0) == (glo > 0.0)) {
      bracket_lo = mid;
      glo = gm;
    } else {
      bracket_hi = mid;
    }
  }
  MarginReport r;
  r.omega_g = std::exp(0.5 * (bracket_lo + bracket_hi));
  r.crossings = crossings;
  return r;
}

double phase_at(const LoopSystem& sys, double omega) {
  require_omega(omega);
  const auto& a = sys.actuator;
  double a1 = 0.0, a2 = 0.0;
  numerator_components(sys, omega, a1, a2);
  // atan2(m w, b) gives the b = 0 limit of pi/2 directly.
  return std::atan2(a1, a2) + 0.5 * kPi - std::atan2(a.m * omega, a.b) -
         std::atan(sys.controller.tau_v * omega);
}

MarginReport phase_margin(const LoopSystem& sys,
                          const CrossoverSearch& search) {
  MarginReport r = gain_crossover(sys, search);
  r.pm_deg = phase_at(sys, r.omega_g) * 180.0 / kPi;
  r.stable_hint = r.pm_deg > 0.0;
  return r;
}

std::vector<PmRow> pm_sweep(const ActuatorParams& actuator, double tau_v,
                            const std::vector<double>& f_n_grid,
                            const std::vector<double>& ts_grid,
                            const std::vector<double>& td_grid,
                            unsigned threads) {
  actuator.validate();
  require(!f_n_grid.empty() && !ts_grid.empty() && !td_grid.empty(),
          "empty grid");
  std::vector<PmRow> rows(ts_grid.size() * td_grid.size() * f_n_grid.size());
  parallel_for(rows.size(), threads, [&](std::size_t idx) {
    const std::size_t nf = f_n_grid.size(), nd = td_grid.size();
    PmRow& row = rows[idx];
    row.f_n_hz = f_n_grid[idx % nf];
    row.Td = td_grid[(idx / nf) % nd];
    row.Ts = ts_grid[idx / (nf * nd)];
    try {
      const LoopSystem sys =
          critically_damped_system(actuator, row.f_n_hz, row.Ts, row.Td, tau_v);
      row.K = sys.controller.K;
      row.B = sys.controller.B;
      const MarginReport m = phase_margin(sys);
      row.omega_g = m.omega_g;
      row.pm_deg = m.pm_deg;
      row.crossings = m.crossings;
      row.status = "ok";
    } catch (const Error& e) {
      row.omega_g = std::nan("");
      row.pm_deg = std::nan("");
      row.status = e.code() == ErrorCode::kNoCrossover ? "no_crossover"
                   : e.code() == ErrorCode::kDegenerateGains ? "degenerate_gains"
                                                             : "invalid";
    }
  });
  return rows;
}

std::string pm_table_csv(const std::vector<PmRow>& rows) {
  std::ostringstream out;
  out << "f_n_hz,Ts_s,Td_s,omega_g,pm_deg,crossings,status\n";
  for (const auto& r : rows) {
    out << num(r.f_n_hz) << ',' << num(r.Ts) << ',' << num(r.Td) << ','
        << num(r.omega_g) << ',' << num(r.pm_deg) << ',' << r.crossings << ','
        << r.status << '\n';
  }
  return out.str();
}

}  // namespace distpd
