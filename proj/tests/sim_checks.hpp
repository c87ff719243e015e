#pragma once

// Simulator-versus-oracle checks shared by the unit tests and the acceptance
// runner. Each returns the worst relative error it saw.

#include <algorithm>
#include <cmath>

#include "freq.hpp"
#include "oracles.hpp"
#include "sim.hpp"

namespace checks {

// Delay-free, unfiltered critically damped loop against the rational step
// response. The B s term turns the step into an initial velocity B A / m.
inline double analytic_step_error(double m, double b, double f_n, double dt) {
  const distpd::LoopSystem sys =
      distpd::critically_damped_system({m, b, 1.0}, f_n, 0.0, 0.0, 0.0);
  const double amp = 0.01;
  distpd::SimScenario s = distpd::step_scenario(sys, amp, 6.0 / f_n);
  s.dt_base = dt;
  s.v0 = sys.controller.B * amp / m;
  const distpd::SimTrace tr = distpd::simulate(s);
  const double w = 2.0 * oracle::kPi * f_n;
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); i += 50) {
    const double want = amp * oracle::critical_step(m, sys.controller.B, w, tr.t[i]);
    worst = std::max(worst, std::abs(tr.x[i] - want) / amp);
  }
  return worst;
}

inline double dt_halving_error(const distpd::LoopSystem& sys, double dt) {
  distpd::SimScenario s = distpd::step_scenario(sys, 0.01, 2.0);
  s.dt_base = dt;
  const double coarse = distpd::simulate(s).x.back();
  s.dt_base = dt / 2.0;
  const double fine = distpd::simulate(s).x.back();
  return std::abs(fine - coarse) / std::abs(fine);
}

// Steady sinusoidal response against the closed loop at the drive
// frequency; relative error of the complex gain.
inline double sinusoid_error(const distpd::LoopSystem& sys, double f_drive,
                             double duration) {
  distpd::SimScenario s;
  s.sys = sys;
  s.duration = duration;
  s.reference.kind = distpd::ReferenceKind::kSinusoid;
  s.reference.amplitude = 0.01;
  s.reference.frequency_hz = f_drive;
  const distpd::SimTrace tr = distpd::simulate(s);
  const double w = 2.0 * oracle::kPi * f_drive;
  const oracle::cplx got =
      oracle::fit_sinusoid(tr.t, tr.x, w, duration - 4.0 / f_drive) / 0.01;
  const distpd::Complex want = distpd::closed_loop_response(sys, w);
  return std::abs(got - want) / std::abs(want);
}

struct SinusoidCase {
  distpd::LoopSystem sys;
  double f_drive;
  double duration;
};

inline std::vector<SinusoidCase> sinusoid_cases() {
  using distpd::critically_damped_system;
  return {
      {critically_damped_system({256, 1250, 1}, 4, 0.005, 0.001, 0.0032), 2.0, 8.0},
      {critically_damped_system({1, 1, 1}, 3, 0.0, 0.002, 0.0), 5.0, 6.0},
      {critically_damped_system({0.64, 3.125, 1}, 4, 0.020, 0.002, 0.0032), 1.0, 10.0},
  };
}

}  // namespace checks
