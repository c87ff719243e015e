#pragma once

#include <string>
#include <vector>

#include "core.hpp"
#include "freq.hpp"

namespace distpd {

/// Phase-margin rates (rad per second of delay) at the gain crossover,
/// holding omega_g fixed. modulation is
///   M = sqrt(tau_v^2 w^2 + 1) * sin((Ts - Td) w + phi),  phi = atan(-tau_v w).
struct SensitivityReport {
  double dpm_dts = 0.0;
  double dpm_dtd = 0.0;
  double modulation = 0.0;
  double phi = 0.0;
  double omega_g = 0.0;
  double a1g = 0.0;
  double a2g = 0.0;
};

SensitivityReport pm_sensitivity(const LoopSystem& sys);

// Central finite differences of the phase margin (rad/s). Frozen mode keeps
// omega_g at its nominal value (the quantity pm_sensitivity computes);
// total mode re-solves the crossover for every perturbed delay.
enum class FdMode { kFrozenCrossover, kTotal };
struct FdSensitivity {
  double dpm_dts = 0.0;
  double dpm_dtd = 0.0;
};
FdSensitivity fd_sensitivity(const LoopSystem& sys, double step = 1e-7,
                             FdMode mode = FdMode::kFrozenCrossover);

struct CrossoverCondition {
  bool holds = false;
  // w_g * sqrt(B^2 - K^2 tau_v^2) / K - 1, i.e. the excess ratio delta.
  double margin = 0.0;
  double threshold = 0.0;  // K / sqrt(B^2 - K^2 tau_v^2)
  double omega_g = 0.0;
};

// Throws kConditionUndefined when B^2 <= K^2 tau_v^2.
CrossoverCondition crossover_condition(const LoopSystem& sys);

// (B w)^2 + K^2 (tau_v^2 w^2 + 1) - 2 K B w M - w^2 ((w m)^2 + b^2)(tau_v^2 w^2 + 1)
// with M evaluated at w. Vanishes at every unity-gain crossing.
double crossover_residual(const LoopSystem& sys, double omega);
// Left-hand side of the above, used to scale the residual.
double crossover_residual_scale(const LoopSystem& sys, double omega);

struct BreakdownPoint {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
  double tau_v = 0.0032;
  double delta = 0.0;
  double u = 0.0;  // tau_v^2 w_g^2 + 1
  double v = 0.0;  // tau_v^2 w_g^2 + (1 + delta)^2
  double residual = 0.0;
};

struct DeltaScan {
  double step = 1e-3;
  double delta_max = 50.0;
  double tolerance = 1e-10;
};

// Normalized unity-gain equation in the excess ratio delta:
//   (U + V - 2 alpha sqrt(U V)) / (U V)
//     - [(1+delta)^2 (1+gamma)^4 / (16 gamma^4 - (1+gamma)^4 beta^2 tau_v^2)
//        + 1/gamma^2]
// with (tau_v w_g)^2 = beta^2 tau_v^2 (1+delta)^2 (1+gamma)^4 / (same denom).
double breakdown_residual(double alpha, double beta, double gamma,
                          double tau_v, double delta);

// Smallest root in (-1, delta_max]. Throws kNotReal if the denominator is not
// positive, kNoRoot if the scan finds no sign change.
BreakdownPoint delta_solve(double alpha, double beta, double gamma,
                           double tau_v = 0.0032, const DeltaScan& scan = {});

struct SurfaceCell {
  BreakdownPoint point;
  std::string status;  // "ok", "not_real", "no_root", "invalid"
};

// Cells ordered beta-major, then gamma.
std::vector<SurfaceCell> delta_surface(const std::vector<double>& beta_grid,
                                       const std::vector<double>& gamma_grid,
                                       double alpha = 1.0,
                                       double tau_v = 0.0032,
                                       unsigned threads = 1,
                                       const DeltaScan& scan = {});

std::string surface_csv(const std::vector<SurfaceCell>& cells);

}  // namespace distpd
