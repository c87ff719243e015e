#pragma once

#include <optional>

namespace distpd {

inline constexpr double kPi = 3.14159265358979323846;

/// Plant constants of the current-driven actuator m*x'' + b*x' = nu*i.
/// Units are SI and shared by linear (kg, N*s/m) and rotary (kg*m^2,
/// N*m*s/rad) actuators.
struct ActuatorParams {
  double m = 1.0;
  double b = 0.0;
  double nu = 1.0;

  void validate() const;
};

/// Distributed PD controller: stiffness loop with delay Ts, damping loop with
/// delay Td acting on velocity filtered by a first order low pass with time
/// constant tau_v (0 disables the filter).
struct ControllerConfig {
  double K = 1.0;
  double B = 1.0;
  double Ts = 0.0;
  double Td = 0.0;
  double tau_v = 0.0;

  void validate() const;
};

struct LoopSystem {
  ActuatorParams actuator;
  ControllerConfig controller;

  void validate() const;
};

struct Gains {
  double K = 0.0;
  double B = 0.0;
};

// Critically damped gains for a target natural frequency f_n (Hz):
// K = m*(2*pi*f_n)^2, B = 2*sqrt(m*K) - b. Throws kDegenerateGains when the
// passive damping already exceeds critical damping (B <= 0).
Gains critical_gains(double m, double b, double f_n);

double natural_frequency(double K, double m);

struct GammaRatio {
  // Empty when b == 0: the breakdown rule holds for any positive B.
  std::optional<double> gamma;
  bool rule_holds = false;

  bool trivially_satisfied() const { return !gamma.has_value(); }
};

// gamma = B / b and the breakdown rule gamma > 2 (strict).
GammaRatio gamma_ratio(double B, double b);
bool breakdown_rule_check(double B, double b);

// Velocity filter time constant for a cutoff frequency f_v (Hz) and back.
double filter_time_constant(double cutoff_hz);
double filter_cutoff(double tau_v);

LoopSystem critically_damped_system(const ActuatorParams& actuator,
                                    double f_n, double Ts, double Td,
                                    double tau_v);

}  // namespace distpd
