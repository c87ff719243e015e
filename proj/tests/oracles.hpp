#pragma once

// Independent reference computations. Nothing here calls into the library
// except plain parameter structs.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "core.hpp"

namespace oracle {

using cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

// Open loop straight from the delayed-exponential form, no Euler expansion.
inline cplx open_loop(double m, double b, double K, double B, double Ts,
                      double Td, double tau, double w) {
  const cplx s(0.0, w);
  const cplx q = 1.0 / (tau * s + 1.0);
  return (std::exp(-Ts * s) * K + std::exp(-Td * s) * B * q * s) /
         (m * s * s + b * s);
}

inline cplx closed_loop(double m, double b, double K, double B, double Ts,
                        double Td, double tau, double w) {
  const cplx s(0.0, w);
  const cplx q = 1.0 / (tau * s + 1.0);
  return (B * s + K) /
         (m * s * s + (b + std::exp(-Td * s) * B * q) * s + std::exp(-Ts * s) * K);
}

// Unit step of the delay-free, unfiltered loop with critically damped gains:
// (B s + K) / (m (s + w)^2).
inline double critical_step(double m, double B, double w, double t) {
  const double e = std::exp(-w * t);
  return 1.0 - e * (1.0 + w * t) + (B / m) * t * e;
}

// Positive crossover of m=1, b=0, K=1, B=2: w^4 - 4 w^2 - 1 = 0.
inline double quartic_crossover() { return std::sqrt(2.0 + std::sqrt(5.0)); }

// Least-squares fit of y = a sin(wt) + c cos(wt) + d over samples with
// t >= t0. Returns a + j c, so a unit-amplitude drive sin(wt) through H gives
// back H itself.
inline cplx fit_sinusoid(const std::vector<double>& t, const std::vector<double>& y,
                         double w, double t0) {
  double s[3][3] = {}, r[3] = {};
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0) continue;
    const double f[3] = {std::sin(w * t[i]), std::cos(w * t[i]), 1.0};
    for (int a = 0; a < 3; ++a) {
      r[a] += f[a] * y[i];
      for (int c = 0; c < 3; ++c) s[a][c] += f[a] * f[c];
    }
  }
  // Gaussian elimination on the 3x3 normal equations.
  for (int p = 0; p < 3; ++p) {
    for (int q = p + 1; q < 3; ++q) {
      const double k = s[q][p] / s[p][p];
      for (int c = p; c < 3; ++c) s[q][c] -= k * s[p][c];
      r[q] -= k * r[p];
    }
  }
  double x[3];
  for (int p = 2; p >= 0; --p) {
    double acc = r[p];
    for (int c = p + 1; c < 3; ++c) acc -= s[p][c] * x[c];
    x[p] = acc / s[p][p];
  }
  return {x[0], x[1]};
}

// Closed form for alpha = 0, tau_v = 0: with x = 1 + delta the residual
// reduces to c x^4 + (1/gamma^2 - 1) x^2 - 1 = 0, c = (1+gamma)^4/(16 gamma^4).
inline double delta_alpha0_untimed(double gamma) {
  const double c = std::pow(1.0 + gamma, 4) / (16.0 * std::pow(gamma, 4));
  const double p = 1.0 - 1.0 / (gamma * gamma);
  const double x2 = (p + std::sqrt(p * p + 4.0 * c)) / (2.0 * c);
  return std::sqrt(x2) - 1.0;
}

struct RandomSystem {
  distpd::LoopSystem sys;
  double f_n = 0.0;
};

// Critically damped systems over the acceptance ranges. Draws that would
// give B <= 0 are redrawn.
inline RandomSystem random_system(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> um(0.1, 500.0), ub(0.0, 2e4),
      uf(1.0, 30.0), ud(0.0, 0.025), coin(0.0, 1.0);
  for (;;) {
    const double m = um(rng), b = ub(rng), f = uf(rng);
    const double ts = ud(rng), td = ud(rng);
    const double tau = coin(rng) < 0.5 ? 0.0 : 0.0032;
    const double K = m * std::pow(2.0 * kPi * f, 2);
    const double B = 2.0 * std::sqrt(m * K) - b;
    if (!(B > 0.0)) continue;
    RandomSystem r;
    r.sys.actuator = {m, b, 1.0};
    r.sys.controller = {K, B, ts, td, tau};
    r.f_n = f;
    return r;
  }
}

inline double rel_err(double got, double want, double floor = 0.0) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

}  // namespace oracle
