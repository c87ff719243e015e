#include "core.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"

namespace distpd {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void ActuatorParams::validate() const {
  require(finite(m) && m > 0.0, "actuator: m must be > 0");
  require(finite(b) && b >= 0.0, "actuator: b must be >= 0");
  require(finite(nu) && nu > 0.0, "actuator: nu must be > 0");
}

void ControllerConfig::validate() const {
  require(finite(K) && K > 0.0, "controller: K must be > 0");
  require(finite(B) && B > 0.0, "controller: B must be > 0");
  require(finite(Ts) && Ts >= 0.0, "controller: Ts must be >= 0");
  require(finite(Td) && Td >= 0.0, "controller: Td must be >= 0");
  require(finite(tau_v) && tau_v >= 0.0, "controller: tau_v must be >= 0");
}

void LoopSystem::validate() const {
  actuator.validate();
  controller.validate();
}

Gains critical_gains(double m, double b, double f_n) {
  require(finite(m) && m > 0.0, "critical_gains: m must be > 0");
  require(finite(b) && b >= 0.0, "critical_gains: b must be >= 0");
  require(finite(f_n) && f_n > 0.0, "critical_gains: f_n must be > 0");
  const double wn = 2.0 * kPi * f_n;
  Gains g;
  g.K = m * wn * wn;
  g.B = 2.0 * std::sqrt(m * g.K) - b;
  if (!(g.B > 0.0)) {
    throw Error(ErrorCode::kDegenerateGains,
                "critical_gains: passive damping b=" + std::to_string(b) +
                    " exceeds critical damping at f_n=" + std::to_string(f_n) +
                    " Hz (B <= 0)");
  }
  return g;
}

double natural_frequency(double K, double m) {
  require(finite(K) && K > 0.0, "natural_frequency: K must be > 0");
  require(finite(m) && m > 0.0, "natural_frequency: m must be > 0");
  return std::sqrt(K / m) / (2.0 * kPi);
}

GammaRatio gamma_ratio(double B, double b) {
  require(finite(B) && B > 0.0, "gamma_ratio: B must be > 0");
  require(finite(b) && b >= 0.0, "gamma_ratio: b must be >= 0");
  GammaRatio r;
  if (b == 0.0) {
    r.rule_holds = true;
    return r;
  }
  r.gamma = B / b;
  r.rule_holds = *r.gamma > 2.0;
  return r;
}

bool breakdown_rule_check(double B, double b) {
  return gamma_ratio(B, b).rule_holds;
}

double filter_time_constant(double cutoff_hz) {
  require(finite(cutoff_hz) && cutoff_hz > 0.0, "cutoff must be > 0");
  return 1.0 / (2.0 * kPi * cutoff_hz);
}

double filter_cutoff(double tau_v) {
  require(finite(tau_v) && tau_v > 0.0, "tau_v must be > 0");
  return 1.0 / (2.0 * kPi * tau_v);
}

LoopSystem critically_damped_system(const ActuatorParams& actuator,
                                    double f_n, double Ts, double Td,
                                    double tau_v) {
  actuator.validate();
  const Gains g = critical_gains(actuator.m, actuator.b, f_n);
  LoopSystem sys{actuator, ControllerConfig{g.K, g.B, Ts, Td, tau_v}};
  sys.validate();
  return sys;
}

}  // namespace distpd
