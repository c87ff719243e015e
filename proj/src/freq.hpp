#pragma once

#include <complex>
#include <string>
#include <vector>

#include "core.hpp"

namespace distpd {

using Complex = std::complex<double>;

/// Open-loop response at one frequency. a1/a2 are the imaginary/real parts
/// of the numerator j*a1 + a2 after expanding the delay exponentials.
struct FreqPoint {
  double omega = 0.0;
  Complex value;
  double a1 = 0.0;
  double a2 = 0.0;
};

struct MarginReport {
  double omega_g = 0.0;
  double pm_deg = 0.0;
  int crossings = 0;
  bool stable_hint = false;
};

// Crossover search band and resolution.
struct CrossoverSearch {
  double omega_min = 1e-2;
  double omega_max = 1e6;
  int probes = 2000;
  int bisection_iterations = 60;
};

// Numerator components at omega:
//   a1 = B w cos(Td w) - K sin(Ts w) + K tau_v w cos(Ts w)
//   a2 = B w sin(Td w) + K cos(Ts w) + K tau_v w sin(Ts w)
void numerator_components(const LoopSystem& sys, double omega, double& a1,
                          double& a2);

FreqPoint open_loop_response(const LoopSystem& sys, double omega);

// Closed loop x/x_D = (B s + K) / (m s^2 + (b + e^{-Td s} B Q_v) s + e^{-Ts s} K).
Complex closed_loop_response(const LoopSystem& sys, double omega);

// Same quantity through the open loop: ((B s + K)/(m s^2 + b s)) / (1 + P_OL).
Complex closed_loop_response_via_open_loop(const LoopSystem& sys,
                                           double omega);

// Highest-frequency unity-gain crossing; throws kNoCrossover when the band
// contains none. Only omega_g and crossings are filled.
MarginReport gain_crossover(const LoopSystem& sys,
                            const CrossoverSearch& search = {});

// Phase margin (radians) evaluated at a given frequency, using the
// four-quadrant arctangent for the numerator term.
double phase_at(const LoopSystem& sys, double omega);

MarginReport phase_margin(const LoopSystem& sys,
                          const CrossoverSearch& search = {});

struct PmRow {
  double f_n_hz = 0.0;
  double Ts = 0.0;
  double Td = 0.0;
  double K = 0.0;
  double B = 0.0;
  double omega_g = 0.0;
  double pm_deg = 0.0;
  int crossings = 0;
  std::string status;  // "ok", "no_crossover", "degenerate_gains"
};

// One row per (Ts, Td, f_n) cell, ordered Ts-major then Td then f_n.
std::vector<PmRow> pm_sweep(const ActuatorParams& actuator, double tau_v,
                            const std::vector<double>& f_n_grid,
                            const std::vector<double>& ts_grid,
                            const std::vector<double>& td_grid,
                            unsigned threads = 1);

std::string pm_table_csv(const std::vector<PmRow>& rows);

}  // namespace distpd
