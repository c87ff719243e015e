#include "sens.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace distpd {

namespace {

double modulation(const LoopSystem& sys, double omega, double* phi_out) {
  const auto& c = sys.controller;
  const double phi = std::atan(-c.tau_v * omega);
  if (phi_out) *phi_out = phi;
  return std::sqrt(c.tau_v * c.tau_v * omega * omega + 1.0) *
         std::sin((c.Ts - c.Td) * omega + phi);
}

struct BreakdownTerms {
  double denom;   // 16 gamma^4 - (1+gamma)^4 beta^2 tau_v^2
  double growth;  // (1+gamma)^4 / denom
};

BreakdownTerms breakdown_terms(double beta, double gamma, double tau_v) {
  const double g4 = std::pow(gamma, 4);
  const double p4 = std::pow(1.0 + gamma, 4);
  BreakdownTerms t;
  t.denom = 16.0 * g4 - p4 * beta * beta * tau_v * tau_v;
  t.growth = p4 / t.denom;
  return t;
}

}  // namespace

SensitivityReport pm_sensitivity(const LoopSystem& sys) {
  const MarginReport m = gain_crossover(sys);
  const auto& c = sys.controller;
  const double w = m.omega_g;
  SensitivityReport r;
  r.omega_g = w;
  numerator_components(sys, w, r.a1g, r.a2g);
  r.modulation = modulation(sys, w, &r.phi);
  const double norm = r.a1g * r.a1g + r.a2g * r.a2g;
  const double cross = c.K * c.B * w * r.modulation;
  r.dpm_dts =
      (-c.K * c.K * (c.tau_v * c.tau_v * w * w + 1.0) + cross) * w / norm;
  r.dpm_dtd = (-c.B * c.B * w * w + cross) * w / norm;
  return r;
}

FdSensitivity fd_sensitivity(const LoopSystem& sys, double step,
                             FdMode mode) {
  require(step > 0.0, "finite-difference step must be > 0");
  const double w0 = gain_crossover(sys).omega_g;
  auto pm = [&](double ts, double td) {
    LoopSystem p = sys;
    p.controller.Ts = ts;
    p.controller.Td = td;
    const double w = mode == FdMode::kTotal ? gain_crossover(p).omega_g : w0;
    return phase_at(p, w);
  };
  const auto& c = sys.controller;
  // The frozen phase is smooth through zero delay. Re-solving the crossover
  // needs a valid system, so the total mode goes one-sided there.
  auto diff = [&](double x0, auto eval) {
    if (mode == FdMode::kTotal && x0 < step)
      return (eval(x0 + step) - eval(x0)) / step;
    return (eval(x0 + step) - eval(x0 - step)) / (2.0 * step);
  };
  FdSensitivity r;
  r.dpm_dts = diff(c.Ts, [&](double ts) { return pm(ts, c.Td); });
  r.dpm_dtd = diff(c.Td, [&](double td) { return pm(c.Ts, td); });
  return r;
}

CrossoverCondition crossover_condition(const LoopSystem& sys) {
  sys.validate();
  const auto& c = sys.controller;
  const double disc = c.B * c.B - c.K * c.K * c.tau_v * c.tau_v;
  if (!(disc > 0.0)) {
    throw Error(ErrorCode::kConditionUndefined,
                "crossover condition undefined: B^2 <= K^2 tau_v^2");
  }
  CrossoverCondition r;
  r.omega_g = gain_crossover(sys).omega_g;
  r.threshold = c.K / std::sqrt(disc);
  r.margin = r.omega_g / r.threshold - 1.0;
  r.holds = r.omega_g > r.threshold;
  return r;
}

double crossover_residual_scale(const LoopSystem& sys, double omega) {
  require(std::isfinite(omega) && omega > 0.0, "omega must be > 0");
  const auto& c = sys.controller;
  const double u = c.tau_v * c.tau_v * omega * omega + 1.0;
  const double m = modulation(sys, omega, nullptr);
  return (c.B * omega) * (c.B * omega) + c.K * c.K * u -
         2.0 * c.K * c.B * omega * m;
}

double crossover_residual(const LoopSystem& sys, double omega) {
  const auto& a = sys.actuator;
  const auto& c = sys.controller;
  const double u = c.tau_v * c.tau_v * omega * omega + 1.0;
  const double rhs =
      omega * omega * ((omega * a.m) * (omega * a.m) + a.b * a.b) * u;
  return crossover_residual_scale(sys, omega) - rhs;
}

double breakdown_residual(double alpha, double beta, double gamma,
                          double tau_v, double delta) {
  const BreakdownTerms t = breakdown_terms(beta, gamma, tau_v);
  const double x2 = (1.0 + delta) * (1.0 + delta);
  const double filter = beta * beta * tau_v * tau_v * x2 * t.growth;
  const double u = filter + 1.0;
  const double v = filter + x2;
  if (v == 0.0) return std::numeric_limits<double>::infinity();
  const double lhs = (u + v - 2.0 * alpha * std::sqrt(u * v)) / (u * v);
  return lhs - (x2 * t.growth + 1.0 / (gamma * gamma));
}

BreakdownPoint delta_solve(double alpha, double beta, double gamma,
                           double tau_v, const DeltaScan& scan) {
  require(std::isfinite(alpha) && alpha >= -1.0 && alpha <= 1.0,
          "delta_solve: alpha must lie in [-1, 1]");
  require(std::isfinite(beta) && beta > 0.0, "delta_solve: beta must be > 0");
  require(std::isfinite(gamma) && gamma > 0.0,
          "delta_solve: gamma must be > 0");
  require(std::isfinite(tau_v) && tau_v >= 0.0,
          "delta_solve: tau_v must be >= 0");
  require(scan.step > 0.0 && scan.delta_max > -1.0 && scan.tolerance > 0.0,
          "delta_solve: invalid scan settings");
  const BreakdownTerms t = breakdown_terms(beta, gamma, tau_v);
  if (!(t.denom > 0.0)) {
    throw Error(ErrorCode::kNotReal,
                "delta_solve: 16 gamma^4 <= (1+gamma)^4 beta^2 tau_v^2, "
                "crossover frequency is not real");
  }
  auto f = [&](double d) {
    return breakdown_residual(alpha, beta, gamma, tau_v, d);
  };

  // f(-1) is +inf (V = 0), so the scan starts with a positive sign there.
  double lo = -1.0;
  double flo = std::numeric_limits<double>::infinity();
  const long n = static_cast<long>(std::ceil((scan.delta_max + 1.0) / scan.step));
  bool found = false;
  double hi = lo;
  for (long k = 1; k <= n; ++k) {
    hi = std::min(-1.0 + k * scan.step, scan.delta_max);
    const double fhi = f(hi);
    if (fhi == 0.0) {
      lo = hi;
      flo = 0.0;
      found = true;
      break;
    }
    if ((flo > 0.0) != (fhi > 0.0)) {
      found = true;
      break;
    }
    lo = hi;
    flo = fhi;
  }
  if (!found) {
    throw Error(ErrorCode::kNoRoot, "delta_solve: no root in (-1, " +
                                        num(scan.delta_max) + "]");
  }
  double root = lo;
  if (flo != 0.0) {
    // Bisect past the requested tolerance down to floating resolution so
    // the residual at the root is at round-off level.
    while (hi - lo > scan.tolerance * 1e-3 &&
           lo < 0.5 * (lo + hi) && 0.5 * (lo + hi) < hi) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    root = std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
  }

  BreakdownPoint p;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.tau_v = tau_v;
  p.delta = root;
  const double x2 = (1.0 + root) * (1.0 + root);
  const double filter = beta * beta * tau_v * tau_v * x2 * t.growth;
  p.u = filter + 1.0;
  p.v = filter + x2;
  p.residual = f(root);
  return p;
}

std::vector<SurfaceCell> delta_surface(const std::vector<double>& beta_grid,
                                       const std::vector<double>& gamma_grid,
                                       double alpha, double tau_v,
                                       unsigned threads,
                                       const DeltaScan& scan) {
  require(!beta_grid.empty() && !gamma_grid.empty(), "empty grid");
  std::vector<SurfaceCell> cells(beta_grid.size() * gamma_grid.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    SurfaceCell& cell = cells[i];
    const double beta = beta_grid[i / gamma_grid.size()];
    const double gamma = gamma_grid[i % gamma_grid.size()];
    try {
      cell.point = delta_solve(alpha, beta, gamma, tau_v, scan);
      cell.status = "ok";
    } catch (const Error& e) {
      cell.point = BreakdownPoint{alpha, beta, gamma, tau_v,
                                  std::nan(""), std::nan(""), std::nan(""),
                                  std::nan("")};
      cell.status = e.code() == ErrorCode::kNotReal ? "not_real"
                    : e.code() == ErrorCode::kNoRoot ? "no_root"
                                                     : "invalid";
    }
  });
  return cells;
}

std::string surface_csv(const std::vector<SurfaceCell>& cells) {
  std::ostringstream out;
  out << "alpha,beta,gamma,tau_v,delta,status\n";
  for (const auto& c : cells) {
    const auto& p = c.point;
    out << num(p.alpha) << ',' << num(p.beta) << ',' << num(p.gamma) << ','
        << num(p.tau_v) << ',' << num(p.delta) << ',' << c.status << '\n';
  }
  return out.str();
}

}  // namespace distpd
